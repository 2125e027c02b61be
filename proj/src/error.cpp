#include "csiscope/error.hpp"

namespace csiscope {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidFrame: return "invalid-frame";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kTruncatedFrame: return "truncated-frame";
    case ErrorCode::kBadFieldRange: return "bad-field-range";
    case ErrorCode::kUnknownChanspec: return "unknown-chanspec";
    case ErrorCode::kBadPcapMagic: return "bad-pcap-magic";
    case ErrorCode::kBadUri: return "bad-uri";
    case ErrorCode::kBindFailed: return "bind-failed";
    case ErrorCode::kFileNotFound: return "file-not-found";
    case ErrorCode::kUnknownProfile: return "unknown-profile";
    case ErrorCode::kSourceClosed: return "source-closed";
    case ErrorCode::kBadTarget: return "bad-target";
    case ErrorCode::kIndexOutOfRange: return "index-out-of-range";
    case ErrorCode::kBadAlpha: return "bad-alpha";
    case ErrorCode::kChainInvalid: return "chain-invalid";
    case ErrorCode::kUnknownPlugin: return "unknown-plugin";
    case ErrorCode::kDuplicatePlugin: return "duplicate-plugin";
    case ErrorCode::kBadParamType: return "bad-param-type";
    case ErrorCode::kIoError: return "io-error";
    case ErrorCode::kUnsupportedFormat: return "unsupported-format";
    case ErrorCode::kNMismatch: return "n-mismatch";
    case ErrorCode::kBadHeader: return "bad-header";
    case ErrorCode::kTruncatedRecord: return "truncated-record";
    case ErrorCode::kSpawnFailed: return "spawn-failed";
    case ErrorCode::kBrokenPipe: return "broken-pipe";
    case ErrorCode::kEmptyWindow: return "empty-window";
    case ErrorCode::kMissingClass: return "missing-class";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kBadModel: return "bad-model";
    case ErrorCode::kUnknownCommand: return "unknown-command";
    case ErrorCode::kBadCommand: return "bad-command";
    case ErrorCode::kAlreadyRecording: return "already-recording";
    case ErrorCode::kNotRecording: return "not-recording";
    case ErrorCode::kNoClassifier: return "no-classifier";
  }
  return "unknown";
}

}  // namespace csiscope
