#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace salab {

enum class ErrorKind {
    InvalidParameter,
    MomentDiverges,
    MeanDiverges,
    TooHeavy,
    OutOfRange,
    DimensionMismatch,
    DegenerateStart,
    NotPsd,
    EmptyColumn,
    Config,
    Io,
};

inline std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::MomentDiverges: return "moment-diverges";
    case ErrorKind::MeanDiverges: return "mean-diverges";
    case ErrorKind::TooHeavy: return "too-heavy";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::DegenerateStart: return "degenerate-start";
    case ErrorKind::NotPsd: return "not-psd";
    case ErrorKind::EmptyColumn: return "empty-column";
    case ErrorKind::Config: return "config-error";
    case ErrorKind::Io: return "io-error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Configuration error that names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(ErrorKind::Config, "key '" + key + "': " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace salab
