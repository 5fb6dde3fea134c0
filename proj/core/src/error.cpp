#include "bacnet/error.hpp"

namespace bacnet {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::UnsupportedFormat: return "UnsupportedFormat";
        case Errc::CorruptFile: return "CorruptFile";
        case Errc::OutOfBounds: return "OutOfBounds";
        case Errc::InvalidTarget: return "InvalidTarget";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::IoError: return "IoError";
        case Errc::TooFewSamples: return "TooFewSamples";
        case Errc::FoldOutOfRange: return "FoldOutOfRange";
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::IndivisibleChannels: return "IndivisibleChannels";
        case Errc::UnknownArchitecture: return "UnknownArchitecture";
        case Errc::HeadNotFound: return "HeadNotFound";
        case Errc::TargetOutOfRange: return "TargetOutOfRange";
        case Errc::InvalidK: return "InvalidK";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::ZeroBaseline: return "ZeroBaseline";
        case Errc::UnpairedReports: return "UnpairedReports";
        case Errc::CorruptWeights: return "CorruptWeights";
    }
    return "Unknown";
}

}  // namespace bacnet
