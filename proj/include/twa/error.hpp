#pragma once

#include <stdexcept>
#include <string>

namespace twa {

enum class ErrorCode {
  UnknownSystem,
  ParamOutOfRange,
  UnsupportedSystem,
  NoOscillationWindow,
  NonFiniteInput,
  NonFiniteState,
  ExtentMismatch,
  ShapeMismatch,
  TooShort,
  NoValidNeighbors,
  DegenerateLabels,
  EmptyDataset,
  Io,
  BadMagic,
  VersionMismatch,
  CorruptPayload,
  ShapeManifestMismatch,
  Config,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownSystem: return "UnknownSystem";
    case ErrorCode::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::UnsupportedSystem: return "UnsupportedSystem";
    case ErrorCode::NoOscillationWindow: return "NoOscillationWindow";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::ExtentMismatch: return "ExtentMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NoValidNeighbors: return "NoValidNeighbors";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::Io: return "Io";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptPayload: return "CorruptPayload";
    case ErrorCode::ShapeManifestMismatch: return "ShapeManifestMismatch";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace twa
