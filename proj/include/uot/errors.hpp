#pragma once

#include <stdexcept>
#include <string>

namespace uot {

enum class ErrorKind {
    InvalidInput,
    Degenerate,
    Domain,
    BranchCut,
    Admissibility,
    Feasibility,
    Numerical,
    Singularity,
    Io,
    Schema,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Thrown when a potential pair violates z0[i] + z1[j] <= C[i,j].
class FeasibilityError : public Error {
public:
    FeasibilityError(const std::string& what, double max_violation)
        : Error(ErrorKind::Feasibility, what), max_violation_(max_violation) {}
    double max_violation() const noexcept { return max_violation_; }

private:
    double max_violation_;
};

// Thrown by the MA residual when the target density vanishes at phi(x).
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, std::size_t node)
        : Error(ErrorKind::Singularity, what), node_(node) {}
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

} // namespace uot
