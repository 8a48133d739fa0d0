#include "vid2scenic/gateway/backend.hpp"

#include <fmt/format.h>

namespace vid2scenic::gateway {

std::string_view to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::transport: return "transport";
        case ErrorKind::rate_limited: return "rate_limited";
        case ErrorKind::deadline: return "deadline";
        case ErrorKind::malformed_response: return "malformed_response";
        case ErrorKind::refusal: return "refusal";
    }
    return "transport";
}

GatewayError::GatewayError(ErrorKind kind, std::string detail, int attempts)
    : std::runtime_error(fmt::format("{}: {}", to_string(kind), detail)),
      kind_(kind),
      detail_(std::move(detail)),
      attempts_(attempts) {}

bool GatewayError::retryable() const {
    return kind_ == ErrorKind::transport || kind_ == ErrorKind::rate_limited || kind_ == ErrorKind::deadline;
}

}  // namespace vid2scenic::gateway
