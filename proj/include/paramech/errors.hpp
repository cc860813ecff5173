#pragma once

#include <stdexcept>
#include <string>

namespace paramech {

// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Division (or negative integer power) by an element on the light cone
// |re| == |jm|, where the ring has no inverse.
class ZeroDivisorError : public Error {
public:
    explicit ZeroDivisorError(const std::string& msg) : Error(msg) {}
};

// Elementary function applied outside its componentwise real domain
// (e.g. sqrt of a value with a negative null component).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Expression text rejected by the parser. `offset` is 1-based.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& msg, std::size_t offset)
        : Error(msg), offset(offset) {}
    std::size_t offset;
};

// Evaluation met a coordinate with no binding.
class UnboundCoordinateError : public Error {
public:
    explicit UnboundCoordinateError(const std::string& name)
        : Error("unbound coordinate: " + name), name(name) {}
    std::string name;
};

// The velocity Hessian of the Lagrangian is rank-deficient at the state.
class SingularMassError : public Error {
public:
    explicit SingularMassError(const std::string& msg) : Error(msg) {}
};

// No multiplier can maintain the constraints (or the saddle system is
// singular on the Lagrangian side).
class InconsistentConstraintError : public Error {
public:
    explicit InconsistentConstraintError(const std::string& msg) : Error(msg) {}
};

// Wedge degree exceeds what the phase-space dimension can carry.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Scenario file failed validation; `key` names the offending entry.
class ValidationError : public Error {
public:
    ValidationError(const std::string& key, const std::string& reason)
        : Error("invalid scenario value for '" + key + "': " + reason), key(key) {}
    std::string key;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

class UnknownScenarioError : public Error {
public:
    explicit UnknownScenarioError(const std::string& name)
        : Error("unknown builtin scenario: " + name) {}
};

// Non-finite state or other runtime numerical failure; carries the step.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

} // namespace paramech
