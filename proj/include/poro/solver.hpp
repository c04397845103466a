#pragma once

#include "poro/assembly.hpp"
#include "poro/error.hpp"

#include <memory>

namespace poro {

struct SolverOptions {
    double tolerance = 1e-10; // bound on ||A x - b|| / ||b||
    int max_refinement_steps = 3;
};

struct LinearSolveReport {
    double relative_residual = 0.0;
    bool reused_factorization = false;
    int dimension = 0;
    int refinement_steps = 0;
};

class SolverFailure : public Error {
public:
    SolverFailure(const std::string& what, const LinearSolveReport& report)
        : Error(what), report_(report) {}
    const LinearSolveReport& report() const noexcept { return report_; }

private:
    LinearSolveReport report_;
};

/// Sparse LU factorization of a square matrix. Copies share the factors; the
/// object is immutable after construction and solves may run concurrently.
class Factorization {
public:
    int dimension() const;
    long solves_performed() const;

private:
    struct Impl;
    explicit Factorization(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<Impl> impl_;

    friend Factorization factorize(const SparseMatrix& matrix);
    friend struct SolveAccess;
};

Factorization factorize(const SparseMatrix& matrix);

struct SolveResult {
    Vector x;
    LinearSolveReport report;
};

/// Throws SolverFailure when the residual stays above the tolerance after
/// iterative refinement.
SolveResult solve(const Factorization& fact, const Vector& rhs, const SolverOptions& options = {});

/// Running maximum of residuals over a sequence of solves.
struct SolveLog {
    long solves = 0;
    long factorizations = 0;
    double max_relative_residual = 0.0;

    void record(const LinearSolveReport& report);
};

} // namespace poro
