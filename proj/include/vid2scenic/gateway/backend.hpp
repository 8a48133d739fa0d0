#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

#include "vid2scenic/gateway/prompt.hpp"

namespace vid2scenic::gateway {

enum class ErrorKind { transport, rate_limited, deadline, malformed_response, refusal };
std::string_view to_string(ErrorKind k);

class GatewayError : public std::runtime_error {
public:
    GatewayError(ErrorKind kind, std::string detail, int attempts = 1);

    ErrorKind kind() const { return kind_; }
    const std::string& detail() const { return detail_; }
    /// transport, rate_limited and deadline are worth another attempt.
    bool retryable() const;
    int attempts() const { return attempts_; }

private:
    ErrorKind kind_;
    std::string detail_;
    int attempts_;
};

/// What one call did, recorded in run manifests.
struct Completion {
    std::string text;
    std::string model;
    double temperature = 0.0;
    int attempts = 1;
};

struct Capabilities {
    std::size_t max_examples = std::numeric_limits<std::size_t>::max();
    std::size_t max_images = std::numeric_limits<std::size_t>::max();
};

/// Must be safe to call from several threads at once. Returns the raw
/// completion or throws GatewayError; never blocks past its deadline.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual Completion complete(const PromptPayload& payload) = 0;
    virtual Capabilities capabilities() const { return {}; }
};

}  // namespace vid2scenic::gateway
