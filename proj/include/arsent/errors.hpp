#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace arsent {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value; raised at load/startup, never mid-request.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Two masks (or a mask and an image) disagree on dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// RLE payload violates the wire grammar. what() is always "malformed RLE".
class MalformedRle : public Error {
public:
    explicit MalformedRle(std::string detail)
        : Error("malformed RLE"), detail_(std::move(detail)) {}
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string detail_;
};

/// A backend call exceeded its per-call deadline.
class TimeoutError : public Error {
public:
    TimeoutError(std::string what, std::int64_t elapsed_ms)
        : Error(std::move(what)), elapsed_ms_(elapsed_ms) {}
    std::int64_t elapsed_ms() const noexcept { return elapsed_ms_; }

private:
    std::int64_t elapsed_ms_;
};

/// A backend answered with something that is not a valid protocol response.
class ProtocolError : public Error {
public:
    ProtocolError(std::string what, std::string excerpt = {})
        : Error(std::move(what)), excerpt_(std::move(excerpt)) {}
    const std::string& excerpt() const noexcept { return excerpt_; }

private:
    std::string excerpt_;
};

/// The backend could not be reached or the connection broke mid-call.
class TransportError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

/// A pipeline stage failed; carries the stage name so callers can apply a fail policy.
class PipelineError : public Error {
public:
    PipelineError(std::string stage, const std::string& cause)
        : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)), cause_(cause) {}
    const std::string& stage() const noexcept { return stage_; }
    const std::string& cause() const noexcept { return cause_; }

private:
    std::string stage_;
    std::string cause_;
};

/// Excerpt of a payload for error messages (first `limit` bytes).
inline std::string excerpt_of(const std::string& payload, std::size_t limit = 160) {
    if (payload.size() <= limit) return payload;
    return payload.substr(0, limit) + "...";
}

}  // namespace arsent
