#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poolface {

enum class ErrorCode {
  // pose
  DegenerateGeometry,
  NoConvergence,
  MissingEyeLandmarks,
  DegenerateScale,
  // quality
  ImageTooSmall,
  // pooling
  EmptyBin,
  ShapeMismatch,
  EmptyTemplate,
  // embedding
  MissingExternalFeature,
  ZeroVarianceImage,
  MixedExtractors,
  EmptySequence,
  ZeroVariance,
  // matching
  InvalidTemplatePair,
  EmptyMatrix,
  // evaluation
  EmptyScoreList,
  DegenerateRange,
  ProbeSubjectNotEnrolled,
  EmptyCollection,
  // ingestion / io
  ParseError,
  ValidationError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Validation-class errors map to CLI exit code 1, everything else to 2.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

/// Re-throws `e` with a "<context>: " prefix on its message, keeping the code.
[[noreturn]] void rethrow_with_context(const Error& e, std::string_view context);

}  // namespace poolface
