#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <chrono>
#include <memory>
#include <sstream>
#include <string>
#include <utility>

#include "tbpgame/assembly.hpp"
#include "tbpgame/error.hpp"

namespace tbpgame {

struct SolveReport {
    int iterations = 0;
    double residual = 0.0;  ///< ||A x - b|| / ||b||
    double seconds = 0.0;
    std::string method;
};

enum class SolverMethod { SparseLU, BiCGSTAB };

struct SolverOptions {
    double tol = 1e-10;
    SolverMethod method = SolverMethod::SparseLU;
    int max_iterations = 0;  ///< 0 selects 10 * N
};

/// Factorizes (or preconditions) a matrix once and solves for many
/// right-hand sides. Solves are const and may run concurrently.
class LinearSolver {
public:
    LinearSolver(Eigen::SparseMatrix<double> matrix, SolverOptions opts = {})
        : matrix_(std::move(matrix)), opts_(opts) {
        if (matrix_.rows() != matrix_.cols()) throw SolverError("linear solve: matrix is not square");
        if (opts_.max_iterations <= 0) opts_.max_iterations = static_cast<int>(10 * matrix_.rows());
        if (opts_.method == SolverMethod::SparseLU) {
            lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
            lu_->analyzePattern(matrix_);
            lu_->factorize(matrix_);
            if (lu_->info() != Eigen::Success)
                throw SolverError("linear solve: sparse LU factorization failed (singular operator?): " +
                                  lu_->lastErrorMessage());
        } else {
            it_ = std::make_unique<Iterative>();
            it_->preconditioner().setDroptol(1e-6);
            it_->preconditioner().setFillfactor(20);
            it_->setTolerance(opts_.tol);
            it_->setMaxIterations(opts_.max_iterations);
            it_->compute(matrix_);
            if (it_->info() != Eigen::Success) throw SolverError("linear solve: ILUT preconditioner setup failed");
        }
    }

    const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }

    double relative_residual(const Field& x, const Field& rhs) const {
        const double nb = rhs.norm();
        return nb == 0.0 ? (matrix_ * x).norm() : (matrix_ * x - rhs).norm() / nb;
    }

    /// Returns x with ||A x - b|| / ||b|| <= tol or throws SolverError.
    std::pair<Field, SolveReport> solve(const Field& rhs) const {
        const auto t0 = std::chrono::steady_clock::now();
        SolveReport rep;
        if (rhs.size() != matrix_.rows()) throw SolverError("linear solve: right-hand side has wrong size");
        Field x;
        if (rhs.norm() == 0.0) {
            x = Field::Zero(rhs.size());
            rep.method = "trivial";
        } else if (lu_) {
            rep.method = "sparse-lu";
            x = lu_->solve(rhs);
            rep.iterations = 1;
            rep.residual = relative_residual(x, rhs);
            // Iterative refinement for badly scaled systems.
            while (rep.residual > opts_.tol && rep.iterations < 5) {
                const Field r = rhs - matrix_ * x;
                x += lu_->solve(r);
                ++rep.iterations;
                rep.residual = relative_residual(x, rhs);
            }
        } else {
            rep.method = "bicgstab-ilut";
            x = it_->solve(rhs);
            rep.iterations = static_cast<int>(it_->iterations());
            rep.residual = relative_residual(x, rhs);
        }
        rep.residual = relative_residual(x, rhs);
        rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!x.allFinite() || !(rep.residual <= opts_.tol)) {
            std::ostringstream os;
            os << "linear solve (" << rep.method << ") did not converge: residual " << rep.residual
               << " > tol " << opts_.tol << " after " << rep.iterations << " iterations";
            throw SolverError(os.str());
        }
        return {std::move(x), rep};
    }

private:
    using Iterative = Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>;

    Eigen::SparseMatrix<double> matrix_;
    SolverOptions opts_;
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
    std::unique_ptr<Iterative> it_;
};

inline std::pair<Field, SolveReport> solve(const SparseOperator& op, const Field& rhs, SolverOptions opts = {}) {
    return LinearSolver(op.matrix, opts).solve(rhs);
}

/// Backward Euler  (I - dt A) P' = P + dt * source  with the factorization
/// reused across steps.
class ImplicitStepper {
public:
    ImplicitStepper(const SparseOperator& op, double dt, SolverOptions opts = {})
        : dt_(dt), solver_(system_matrix(op, dt), opts) {}

    double dt() const { return dt_; }

    Field step(const Field& P, const Field& source) const {
        return solver_.solve(P + dt_ * source).first;
    }

private:
    static Eigen::SparseMatrix<double> system_matrix(const SparseOperator& op, double dt) {
        if (!(dt > 0.0)) throw InputError("implicit step: dt must be positive");
        Eigen::SparseMatrix<double> id(op.size(), op.size());
        id.setIdentity();
        Eigen::SparseMatrix<double> m = id - dt * op.matrix;
        m.makeCompressed();
        return m;
    }

    double dt_;
    LinearSolver solver_;
};

inline Field step_implicit(const SparseOperator& op, const Field& P, const Field& source, double dt,
                           SolverOptions opts = {}) {
    return ImplicitStepper(op, dt, opts).step(P, source);
}

} // namespace tbpgame
