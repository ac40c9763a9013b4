#pragma once

#include <stdexcept>
#include <string>

namespace lars {

// Operand shapes do not conform.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A non-finite loss, norm or parameter was observed. `group()` names the
// offending parameter group when one is known.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::string group = {})
        : std::runtime_error(what), group_(std::move(group)) {}
    const std::string& group() const noexcept { return group_; }

private:
    std::string group_;
};

// Malformed IDX / checkpoint input.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid experiment configuration. `field()` names the offending key path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::string field = {})
        : std::runtime_error(what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Failure writing a metrics stream or checkpoint.
class SinkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lars
