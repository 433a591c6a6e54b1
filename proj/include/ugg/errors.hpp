#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ugg {

// Machine-readable error categories. The CLI maps these onto exit
// diagnostics; library callers can switch on code() instead of parsing
// messages.
enum class ErrorCode {
    kDimensionMismatch,
    kNonSymmetric,
    kNonBinaryCannotLink,
    kNonFiniteEntry,
    kCannotLinkSelfLoop,
    kIndexOutOfRange,
    kEmptyGraph,
    kInstanceTooLarge,
    kLabelOutOfRange,
    kInvalidConfig,
    kInvalidParams,
    kNgRequestedWithoutCannotLinks,
    kNoRelevantItemsAnywhere,
    kParseError,
    kShapeMismatch,
    kUnknownKey,
    kIoError,
};

inline std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
        case ErrorCode::kNonSymmetric: return "NonSymmetric";
        case ErrorCode::kNonBinaryCannotLink: return "NonBinaryCannotLink";
        case ErrorCode::kNonFiniteEntry: return "NonFiniteEntry";
        case ErrorCode::kCannotLinkSelfLoop: return "CannotLinkSelfLoop";
        case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::kEmptyGraph: return "EmptyGraph";
        case ErrorCode::kInstanceTooLarge: return "InstanceTooLarge";
        case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::kInvalidConfig: return "InvalidConfig";
        case ErrorCode::kInvalidParams: return "InvalidParams";
        case ErrorCode::kNgRequestedWithoutCannotLinks:
            return "NGRequestedWithoutCannotLinks";
        case ErrorCode::kNoRelevantItemsAnywhere: return "NoRelevantItemsAnywhere";
        case ErrorCode::kParseError: return "ParseError";
        case ErrorCode::kShapeMismatch: return "ShapeMismatch";
        case ErrorCode::kUnknownKey: return "UnknownKey";
        case ErrorCode::kIoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

namespace detail {

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

}  // namespace detail

}  // namespace ugg
