#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lawarea {

enum class ErrorCode {
  InvalidArgument,
  IoError,
  MissingField,
  UnknownLabel,
  MalformedFile,
  DuplicateId,
  ClassTooSmall,
  EmptyDataset,
  OverlappingKeywords,
  LexiconMissing,
  MalformedLine,
  EmptyVocabulary,
  InvalidConfig,
  HeaderMismatch,
  DimensionMismatch,
  DuplicateWord,
  UnknownWord,
  SingleClass,
  ShapeMismatch,
  EmptyData,
  EmptySpace,
  KTooLarge,
  LengthMismatch,
  UnsupportedFormat,
  HashMismatch,
  VersionUnsupported,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lawarea
