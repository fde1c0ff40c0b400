#pragma once

#include <stdexcept>
#include <string>

namespace prism {

/// Invalid configuration or parameter choice (bad key, out-of-range value,
/// infeasible capacity, stability violation).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed a value outside an operation's documented domain.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// An adversary strategy asked the engine to do something the model forbids.
/// The run is aborted.
class StrategyFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Broken block structure, e.g. a dangling reference in a hand-built fixture.
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace prism
