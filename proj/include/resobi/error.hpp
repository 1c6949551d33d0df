#ifndef RESOBI_ERROR_HPP
#define RESOBI_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace resobi
{

enum class ErrorCode
{
    InvalidArgument,
    NotSymmetric,
    NoConvergence,
    LagTooLarge,
    DegenerateData,
    IndexOutOfRange,
    InvalidSpec,
    RankDeficientMixing,
    TooShort,
    Empty,
    ZeroReference,
    EpochTooShort,
    SingleClass,
    DimensionMismatch,
    TooFewSamples,
    ParseError,
    MissingSidecar,
    Io,
};

inline std::string_view to_string(ErrorCode code) noexcept
{
    switch (code)
    {
        case ErrorCode::InvalidArgument:     return "InvalidArgument";
        case ErrorCode::NotSymmetric:        return "NotSymmetric";
        case ErrorCode::NoConvergence:       return "NoConvergence";
        case ErrorCode::LagTooLarge:         return "LagTooLarge";
        case ErrorCode::DegenerateData:      return "DegenerateData";
        case ErrorCode::IndexOutOfRange:     return "IndexOutOfRange";
        case ErrorCode::InvalidSpec:         return "InvalidSpec";
        case ErrorCode::RankDeficientMixing: return "RankDeficientMixing";
        case ErrorCode::TooShort:            return "TooShort";
        case ErrorCode::Empty:               return "Empty";
        case ErrorCode::ZeroReference:       return "ZeroReference";
        case ErrorCode::EpochTooShort:       return "EpochTooShort";
        case ErrorCode::SingleClass:         return "SingleClass";
        case ErrorCode::DimensionMismatch:   return "DimensionMismatch";
        case ErrorCode::TooFewSamples:       return "TooFewSamples";
        case ErrorCode::ParseError:          return "ParseError";
        case ErrorCode::MissingSidecar:      return "MissingSidecar";
        case ErrorCode::Io:                  return "Io";
    }
    return "Unknown";
}

//
// Library-wide exception. Carries a machine-readable code and, once it has
// crossed a pipeline boundary, the name of the stage that raised it.
//
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code),
          detail_(message)
    {
    }

    ErrorCode code() const noexcept { return code_; }
    const std::string& stage() const noexcept { return stage_; }
    const std::string& detail() const noexcept { return detail_; }

    // Returns a copy tagged with `stage`; an existing tag is kept.
    Error with_stage(std::string_view stage) const
    {
        if (!stage_.empty())
            return *this;
        Error tagged(code_, "[" + std::string(stage) + "] " + detail_);
        tagged.detail_ = detail_;
        tagged.stage_  = std::string(stage);
        return tagged;
    }

private:
    ErrorCode code_;
    std::string detail_;
    std::string stage_;
};

// Non-fatal conditions reported alongside a result.
enum class Warning
{
    NoConvergence,
    DegenerateCombination,
    Unidentifiable,
};

inline std::string_view to_string(Warning w) noexcept
{
    switch (w)
    {
        case Warning::NoConvergence:         return "NoConvergence";
        case Warning::DegenerateCombination: return "DegenerateCombination";
        case Warning::Unidentifiable:        return "UnidentifiableWarning";
    }
    return "Unknown";
}

} // namespace resobi

#endif
