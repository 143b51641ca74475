#pragma once

#include <stdexcept>
#include <string>

namespace shortcut_gd {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An input violates a documented precondition (e.g. off the unit-norm manifold).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// 1/sqrt(p) + w collapsed to (numerically) zero, so it has no direction.
class DegenerateDirectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rejection sampling ran out of proposals before hitting the region.
class InfeasibleRegionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reading or writing an output file failed; the message names the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace shortcut_gd
