#pragma once

// Deterministic hostile classifier output, shared by the fuzz child process
// and the tests that check what the host made of it.

#include <climits>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <regex>
#include <string>
#include <vector>

namespace fuzz {

struct Script {
  std::vector<std::string> chunks;
  std::vector<int> pauses_us;
};

inline Script Generate(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> kind(0, 9);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> printable(32, 126);
  std::uniform_int_distribution<int> len(0, 60);
  std::uniform_int_distribution<int> cls(0, 5);
  std::uniform_real_distribution<double> conf(0.0, 1.0);

  std::string stream;
  const int pieces = 50 + static_cast<int>(rng() % 150);
  for (int i = 0; i < pieces; ++i) {
    switch (kind(rng)) {
      case 0: case 1: case 2: case 3:
        stream += "R," + std::to_string(cls(rng)) + "," + std::to_string(conf(rng)) + "," +
                  std::to_string(rng() >> 12) + "\n";
        break;
      case 4:
        stream += "R," + std::to_string(cls(rng)) + ",1.5,12\n";
        break;
      case 5:
        stream += "R,-1,0.5,12\r\n";
        break;
      case 6: {
        for (int k = len(rng); k > 0; --k) stream += static_cast<char>(printable(rng));
        stream += '\n';
        break;
      }
      case 7: {
        for (int k = len(rng); k > 0; --k) stream += static_cast<char>(byte(rng));
        break;
      }
      case 8:
        stream += "\n";
        break;
      default:
        stream += "R,3,0.25,99\r\n";
        break;
    }
  }
  if (rng() % 2) stream += "R,1,0.5";

  Script script;
  std::uniform_int_distribution<std::size_t> cut(1, 40);
  std::uniform_int_distribution<int> pause(0, 300);
  for (std::size_t pos = 0; pos < stream.size();) {
    const std::size_t n = std::min(cut(rng), stream.size() - pos);
    script.chunks.push_back(stream.substr(pos, n));
    script.pauses_us.push_back(rng() % 4 == 0 ? pause(rng) : 0);
    pos += n;
  }
  return script;
}

/// Reference reading of the result grammar, written against the text rules.
inline bool OracleValidResult(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  static const std::regex grammar(R"(R,([0-9]{1,9}),([0-9]*\.?[0-9]*(?:[eE][+-]?[0-9]+)?),([0-9]{1,19}))");
  std::smatch m;
  if (!std::regex_match(line, m, grammar)) return false;
  const std::string c = m[2].str();
  if (c.find_first_of("0123456789") == std::string::npos || c.front() == 'e' || c.front() == 'E') return false;
  char *end = nullptr;
  const double v = std::strtod(c.c_str(), &end);
  if (*end != '\0' || !std::isfinite(v) || v < 0.0 || v > 1.0) return false;
  return std::strtoull(m[3].str().c_str(), nullptr, 10) != ULLONG_MAX;
}

struct Expected {
  std::size_t valid{0};
  std::size_t malformed{0};
};

inline Expected Count(const Script &script) {
  std::string all;
  for (const auto &c : script.chunks) all += c;
  Expected e;
  std::size_t start = 0;
  while (true) {
    const auto nl = all.find('\n', start);
    if (nl == std::string::npos) break;
    (OracleValidResult(all.substr(start, nl - start)) ? e.valid : e.malformed) += 1;
    start = nl + 1;
  }
  if (start < all.size()) ++e.malformed;
  return e;
}

}  // namespace fuzz
