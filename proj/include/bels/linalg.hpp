#pragma once

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <cstddef>

#include "bels/errors.hpp"
#include "bels/matrix.hpp"

namespace bels {

// Soft thresholding operator: shrinks toward zero by kappa, zeroing the band
// |a| <= kappa. Odd by construction: S(-a) = -S(a).
inline double soft_threshold(double a, double kappa) {
    if (a > kappa) return a - kappa;
    if (a < -kappa) return a + kappa;
    return 0.0;
}

// Solves (lambda*I + gram) * W = rhs for a symmetric positive semidefinite gram.
// Cholesky first; pivoted LU as the roundoff fallback. Throws SingularSystem
// when neither route yields a finite solution.
inline Matrix ridge_solve(const Matrix& gram, const Matrix& rhs, double lambda) {
    require(gram.rows() == gram.cols(), "ridge_solve: gram must be square");
    require(gram.rows() == rhs.rows(), "ridge_solve: rhs row count must match gram");
    if (lambda < 0.0) throw InvalidConfig("ridge_solve: lambda must be >= 0");

    Matrix system = gram;
    system.diagonal().array() += lambda;

    Eigen::LLT<Matrix> llt(system.selfadjointView<Eigen::Lower>());
    if (llt.info() == Eigen::Success) {
        Matrix w = llt.solve(rhs);
        if (w.allFinite()) return w;
    }
    Eigen::PartialPivLU<Matrix> lu(system);
    Matrix w = lu.solve(rhs);
    if (!w.allFinite()) {
        throw SingularSystem("ridge_solve: system is singular even with the ridge term");
    }
    return w;
}

// Scratch state for the three-step sparse-autoencoder iteration. All three
// iterates share the g-by-d shape of the solution and start at zero.
struct AdmmState {
    Matrix w;
    Matrix o;
    Matrix u;
    std::size_t iterations = 0;
    double rho = 1.0;
    double kappa = 0.001;

    static AdmmState zero(Index g, Index d, double rho, double kappa) {
        AdmmState s;
        s.w = Matrix::Zero(g, d);
        s.o = Matrix::Zero(g, d);
        s.u = Matrix::Zero(g, d);
        s.rho = rho;
        s.kappa = kappa;
        return s;
    }
};

// Lower-triangular Cholesky factor of an SPD matrix with rank-one updates, so
// streaming Gram accumulators can be refit in O(n^2) per row instead of a full
// O(n^3) refactorization. Plain matrix storage keeps it serializable, which
// Eigen's LLT object is not.
class CholeskyFactor {
public:
    bool valid() const { return valid_; }
    Index size() const { return l_.rows(); }
    const Eigen::MatrixXd& matrix_l() const { return l_; }

    // Factors `system` (symmetric positive definite, lower triangle read).
    void compute(const Matrix& system) {
        Eigen::LLT<Eigen::MatrixXd> llt(system.selfadjointView<Eigen::Lower>());
        valid_ = llt.info() == Eigen::Success;
        if (valid_) l_ = llt.matrixL();
    }

    // Updates the factor for system += v * v' via a sweep of Givens rotations.
    void rank_update(const Vector& v) {
        const Index n = l_.rows();
        if (scratch_.size() != n) scratch_.resize(n);
        scratch_ = v;
        for (Index k = 0; k < n; ++k) {
            const double lkk = l_(k, k);
            const double vk = scratch_(k);
            const double r = std::hypot(lkk, vk);
            if (r == 0.0 || !std::isfinite(r)) {
                valid_ = false;
                return;
            }
            const double c = lkk / r;
            const double s = vk / r;
            l_(k, k) = r;
            const Index tail = n - k - 1;
            if (tail > 0) {
                auto lcol = l_.col(k).tail(tail);
                auto vtail = scratch_.tail(tail);
                const Vector rotated = c * lcol + s * vtail;
                vtail = c * vtail - s * lcol;
                lcol = rotated;
            }
        }
    }

    // Solves (L L') * out = rhs.
    Matrix solve(const Matrix& rhs) const {
        Matrix out = rhs;
        l_.triangularView<Eigen::Lower>().solveInPlace(out);
        l_.transpose().triangularView<Eigen::Upper>().solveInPlace(out);
        return out;
    }

    void reset() {
        l_.resize(0, 0);
        valid_ = false;
    }

    // Snapshot support.
    void restore(Eigen::MatrixXd l, bool valid) {
        l_ = std::move(l);
        valid_ = valid;
    }

private:
    Eigen::MatrixXd l_;  // column-major: the update sweep walks down columns
    Vector scratch_;
    bool valid_ = false;
};

// Lasso-style sparse map from accumulated projections. t2 holds the summed
// z'z Gram (g x g), t1 the summed z'X cross term (g x d). Each pass runs
//   w <- (t2 + rho*I)^-1 (t1 + rho*(o - u))
//   o <- soft_threshold(w + u) elementwise at lambda_sparse / rho
//   u <- u + (w - o)
// and the result is o transposed (d x g) so that Z = X * mu conforms.
inline Matrix admm_sparse_map(const Matrix& t2, const Matrix& t1, AdmmState& state,
                              double lambda_sparse, std::size_t iters) {
    require(t2.rows() == t2.cols(), "admm_sparse_map: t2 must be square");
    require(t1.rows() == t2.rows(), "admm_sparse_map: t1 rows must match t2");
    require(state.w.rows() == t1.rows() && state.w.cols() == t1.cols(),
            "admm_sparse_map: state shape must match t1");
    if (iters < 1) throw InvalidConfig("admm_sparse_map: iters must be >= 1");
    if (lambda_sparse < 0.0) throw InvalidConfig("admm_sparse_map: lambda_sparse must be >= 0");

    Matrix system = t2;
    system.diagonal().array() += state.rho;
    Eigen::LLT<Matrix> llt(system.selfadjointView<Eigen::Lower>());
    const bool use_llt = llt.info() == Eigen::Success;
    Eigen::PartialPivLU<Matrix> lu;
    if (!use_llt) lu.compute(system);

    const double threshold = lambda_sparse / state.rho;
    for (std::size_t it = 0; it < iters; ++it) {
        Matrix target = t1 + state.rho * (state.o - state.u);
        state.w = use_llt ? llt.solve(target) : lu.solve(target);
        if (!state.w.allFinite()) {
            throw SingularSystem("admm_sparse_map: inner solve produced non-finite values");
        }
        Matrix shifted = state.w + state.u;
        state.o = shifted.unaryExpr([threshold](double a) { return soft_threshold(a, threshold); });
        state.u += state.w - state.o;
        ++state.iterations;
    }
    return state.o.transpose();
}

}  // namespace bels
