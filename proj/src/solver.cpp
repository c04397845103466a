#include "poro/solver.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <sstream>
#include <string>

namespace poro {

struct Factorization::Impl {
    SparseMatrix matrix;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    mutable std::atomic<long> solves{0};
};

struct SolveAccess {
    static const Factorization::Impl& impl(const Factorization& f) { return *f.impl_; }
};

namespace {

long trailing_integer(const std::string& text)
{
    std::size_t end = text.size();
    while (end > 0 && !std::isdigit(static_cast<unsigned char>(text[end - 1]))) {
        --end;
    }
    std::size_t begin = end;
    while (begin > 0 && std::isdigit(static_cast<unsigned char>(text[begin - 1]))) {
        --begin;
    }
    if (begin == end) {
        return -1;
    }
    return std::stol(text.substr(begin, end - begin));
}

} // namespace

int Factorization::dimension() const { return static_cast<int>(impl_->matrix.rows()); }

long Factorization::solves_performed() const { return impl_->solves.load(); }

Factorization factorize(const SparseMatrix& matrix)
{
    if (matrix.rows() != matrix.cols()) {
        throw DimensionError("factorize: matrix is not square");
    }
    auto impl = std::make_shared<Factorization::Impl>();
    impl->matrix = matrix;
    impl->matrix.makeCompressed();
    const SparseMatrix& a = impl->matrix;
    const long n = a.rows();

    std::vector<char> row_used(static_cast<std::size_t>(n), 0);
    for (int j = 0; j < a.outerSize(); ++j) {
        bool col_used = false;
        for (SparseMatrix::InnerIterator it(a, j); it; ++it) {
            if (it.value() != 0.0) {
                row_used[it.row()] = 1;
                col_used = true;
            }
        }
        if (!col_used) {
            throw SingularMatrix("factorize: column " + std::to_string(j) + " is zero", j);
        }
    }
    for (long i = 0; i < n; ++i) {
        if (!row_used[i]) {
            throw SingularMatrix("factorize: row " + std::to_string(i) + " is zero", i);
        }
    }

    if (n > 0) {
        impl->lu.analyzePattern(a);
        impl->lu.factorize(a);
        if (impl->lu.info() != Eigen::Success) {
            const std::string msg = impl->lu.lastErrorMessage();
            long pivot = trailing_integer(msg);
            if (pivot >= 0 && pivot < n) {
                pivot = impl->lu.colsPermutation().indices()[pivot];
            }
            throw SingularMatrix("factorize: matrix is singular (" + msg + ")", pivot);
        }
    }
    return Factorization(std::move(impl));
}

SolveResult solve(const Factorization& fact, const Vector& rhs, const SolverOptions& options)
{
    const auto& impl = SolveAccess::impl(fact);
    const int n = fact.dimension();
    if (rhs.size() != n) {
        throw DimensionError("solve: right-hand side has size " + std::to_string(rhs.size()) +
                             ", matrix has " + std::to_string(n));
    }
    SolveResult out;
    out.report.dimension = n;
    out.report.reused_factorization = impl.solves.fetch_add(1) > 0;

    const double bnorm = rhs.norm();
    if (bnorm == 0.0) {
        out.x = Vector::Zero(n);
        return out;
    }
    if (!std::isfinite(bnorm)) {
        throw SolverFailure("solve: right-hand side is not finite", out.report);
    }

    out.x = impl.lu.solve(rhs);
    Vector r = rhs - impl.matrix * out.x;
    double rel = r.norm() / bnorm;
    while (rel > options.tolerance && out.report.refinement_steps < options.max_refinement_steps) {
        const Vector dx = impl.lu.solve(r);
        const Vector candidate = out.x + dx;
        const Vector rc = rhs - impl.matrix * candidate;
        const double rel_c = rc.norm() / bnorm;
        ++out.report.refinement_steps;
        if (!(rel_c < rel)) {
            break;
        }
        out.x = candidate;
        r = rc;
        rel = rel_c;
    }
    out.report.relative_residual = rel;
    if (!(rel <= options.tolerance)) {
        std::ostringstream msg;
        msg << "solve: relative residual " << rel << " exceeds tolerance " << options.tolerance;
        throw SolverFailure(msg.str(), out.report);
    }
    return out;
}

void SolveLog::record(const LinearSolveReport& report)
{
    ++solves;
    if (!report.reused_factorization) {
        ++factorizations;
    }
    max_relative_residual = std::max(max_relative_residual, report.relative_residual);
}

} // namespace poro
