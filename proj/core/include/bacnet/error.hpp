#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bacnet {

enum class Errc {
    UnsupportedFormat,
    CorruptFile,
    OutOfBounds,
    InvalidTarget,
    InvalidConfig,
    IoError,
    TooFewSamples,
    FoldOutOfRange,
    ShapeMismatch,
    IndivisibleChannels,
    UnknownArchitecture,
    HeadNotFound,
    TargetOutOfRange,
    InvalidK,
    EmptyInput,
    ZeroBaseline,
    UnpairedReports,
    CorruptWeights,
};

std::string_view errc_name(Errc code) noexcept;

// Single exception type for the whole library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace bacnet
