#include "thermotwin/core/errors.hpp"

namespace thermotwin {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::shape: return "shape";
        case ErrorKind::parameter: return "parameter";
        case ErrorKind::span_mismatch: return "span_mismatch";
        case ErrorKind::numeric: return "numeric";
        case ErrorKind::integration: return "integration";
        case ErrorKind::singularity: return "singularity";
        case ErrorKind::empty_model: return "empty_model";
        case ErrorKind::divergence: return "divergence";
        case ErrorKind::combinatorics: return "combinatorics";
        case ErrorKind::insufficient_data: return "insufficient_data";
        case ErrorKind::instability: return "instability";
        case ErrorKind::data: return "data";
        case ErrorKind::manifest: return "manifest";
        case ErrorKind::config: return "config";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace thermotwin
