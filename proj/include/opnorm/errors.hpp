#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace opnorm {

/// Malformed numeric input (non-finite entries, wrong shapes).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside an operation's precondition.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Bad configuration: unknown family, inconsistent rank map, missing
/// estimator options. `field()` names the offending setting when known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, std::string field = {})
        : std::runtime_error(what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Data produced a value the estimator cannot work with.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An internal construction broke its own invariant.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A Monte Carlo replication failed; carries the seed that reproduces it.
class ReplicationError : public std::runtime_error {
public:
    ReplicationError(const std::string& what, std::uint64_t seed)
        : std::runtime_error(what), seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

}  // namespace opnorm
