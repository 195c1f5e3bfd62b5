#pragma once

#include <stdexcept>
#include <string>

namespace cablp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A strategy outside B_d(1+nu) was queried or would be queried.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Shapes of matrices/vectors handed to an operator do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// The environment's query limit would be exceeded.
class BudgetError : public Error {
public:
    using Error::Error;
};

/// Input matrix lost rank (orthonormalization, subspace extraction).
class RankError : public Error {
public:
    using Error::Error;
};

/// A parameter plan cannot be executed (budget or step-size infeasible).
class PlanError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or descriptor.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace cablp
