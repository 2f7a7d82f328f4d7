#include "nesslab/error.hpp"

namespace nesslab {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid_input";
        case ErrorKind::unsupported_configuration: return "unsupported_configuration";
        case ErrorKind::integration_diverged: return "integration_diverged";
        case ErrorKind::pinning_required: return "pinning_required";
        case ErrorKind::zero_mode: return "zero_mode";
        case ErrorKind::supercritical_drive: return "supercritical_drive";
        case ErrorKind::insufficient_data: return "insufficient_data";
        case ErrorKind::insufficient_negative_events: return "insufficient_negative_events";
        case ErrorKind::missing_moments: return "missing_moments";
        case ErrorKind::invalid_profile: return "invalid_profile";
        case ErrorKind::configuration: return "configuration";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace nesslab
