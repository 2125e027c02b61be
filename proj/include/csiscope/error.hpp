#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csiscope {

enum class ErrorCode {
  kInvalidFrame,
  kBadMagic,
  kTruncatedFrame,
  kBadFieldRange,
  kUnknownChanspec,
  kBadPcapMagic,
  kBadUri,
  kBindFailed,
  kFileNotFound,
  kUnknownProfile,
  kSourceClosed,
  kBadTarget,
  kIndexOutOfRange,
  kBadAlpha,
  kChainInvalid,
  kUnknownPlugin,
  kDuplicatePlugin,
  kBadParamType,
  kIoError,
  kUnsupportedFormat,
  kNMismatch,
  kBadHeader,
  kTruncatedRecord,
  kSpawnFailed,
  kBrokenPipe,
  kEmptyWindow,
  kMissingClass,
  kDimensionMismatch,
  kLengthMismatch,
  kBadModel,
  kUnknownCommand,
  kBadCommand,
  kAlreadyRecording,
  kNotRecording,
  kNoClassifier,
};

/// Stable kebab-case name used in logs and protocol error envelopes.
std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message), code_(code), message_(message) {}

  [[nodiscard]] ErrorCode code() const { return code_; }
  /// The message without the code prefix.
  [[nodiscard]] const std::string &message() const { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace csiscope
