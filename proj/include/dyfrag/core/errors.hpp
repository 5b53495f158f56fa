#pragma once

#include <stdexcept>

namespace dyfrag {

/// A broken precondition inside a run (scheduling into the past, duplicate
/// delivery, ...). Aborts the run with a diagnostic.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid scenario or topology configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dyfrag
