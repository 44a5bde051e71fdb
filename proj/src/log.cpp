#include "lawarea/log.hpp"

#include <iostream>
#include <mutex>

#include "lawarea/error.hpp"

namespace lawarea {
namespace {

std::mutex g_sink_mutex;

WarningSink& sink_ref() {
  static WarningSink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return sink;
}

}  // namespace

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(g_sink_mutex);
  WarningSink previous = std::move(sink_ref());
  sink_ref() = std::move(sink);
  return previous;
}

void warn(const std::string& message) {
  std::lock_guard lock(g_sink_mutex);
  if (sink_ref()) sink_ref()(message);
}

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::OverlappingKeywords: return "OverlappingKeywords";
    case ErrorCode::LexiconMissing: return "LexiconMissing";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateWord: return "DuplicateWord";
    case ErrorCode::UnknownWord: return "UnknownWord";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::EmptySpace: return "EmptySpace";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::HashMismatch: return "HashMismatch";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
  }
  return "Unknown";
}

}  // namespace lawarea
