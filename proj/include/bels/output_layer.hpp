#pragma once

#include <utility>

#include "bels/linalg.hpp"
#include "bels/matrix.hpp"

namespace bels {

// Fraction of rows whose score argmax matches the label argmax. Score ties
// resolve toward the lowest class index.
inline double score_accuracy(const Matrix& scores, const Matrix& y_true) {
    require(scores.rows() == y_true.rows(), "score_accuracy: row counts differ");
    require_one_hot(y_true, "score_accuracy");
    if (scores.rows() == 0) return 0.0;
    Index hits = 0;
    for (Index i = 0; i < scores.rows(); ++i) {
        if (argmax_row(scores.row(i)) == argmax_row(y_true.row(i))) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(scores.rows());
}

// One ensemble component: the accumulated normal equations of a ridge fit over
// every chunk this instance has trained on, plus the solved output weights.
//
// The Cholesky factor of (lambda*I + a_t_acc) rides along with the
// accumulators and is advanced by a rank-one update per training row, so the
// per-chunk refit costs O(width^2) instead of O(width^3). Full
// refactorizations happen on a fixed schedule in chunks_trained, which bounds
// roundoff drift and keeps resumed runs on the identical arithmetic path.
class OutputLayerInstance {
public:
    OutputLayerInstance() = default;

    OutputLayerInstance(int id, Index width, Index classes, double lambda_ridge)
        : id_(id), lambda_(lambda_ridge),
          a_t_(Matrix::Zero(width, width)), d_t_(Matrix::Zero(width, classes)),
          w_(Matrix::Zero(width, classes)) {}

    int id() const { return id_; }
    Index width() const { return a_t_.rows(); }
    Index classes() const { return d_t_.cols(); }
    double lambda_ridge() const { return lambda_; }
    long chunks_trained() const { return chunks_trained_; }
    double last_accuracy() const { return last_accuracy_; }
    void set_last_accuracy(double a) { last_accuracy_ = a; }
    bool trained() const { return chunks_trained_ > 0; }

    const Matrix& a_t_acc() const { return a_t_; }
    const Matrix& d_t_acc() const { return d_t_; }
    const Matrix& w_out() const { return w_; }
    const CholeskyFactor& factor() const { return factor_; }

    // Folds one chunk into the accumulators and re-solves the weights.
    void train(const Matrix& a_k, const Matrix& y_k) {
        check_train_shapes(a_k, y_k);
        Matrix gram(a_t_.rows(), a_t_.cols());
        gram.setZero();
        gram.selfadjointView<Eigen::Lower>().rankUpdate(a_k.transpose());
        gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
        train_with_gram(a_k, y_k, gram, a_k.transpose() * y_k);
    }

    // Same as train(), with the chunk Gram and cross terms computed once by the
    // caller and shared across all ensemble members.
    void train_with_gram(const Matrix& a_k, const Matrix& y_k, const Matrix& gram,
                         const Matrix& cross) {
        check_train_shapes(a_k, y_k);
        a_t_ += gram;
        d_t_ += cross;
        const bool scheduled = (chunks_trained_ + 1) % kRefactorPeriod == 0;
        if (!factor_.valid() || scheduled) {
            refactor();
        } else {
            for (Index i = 0; i < a_k.rows(); ++i) {
                factor_.rank_update(a_k.row(i).transpose());
                if (!factor_.valid()) break;
            }
        }
        bool solved = false;
        if (factor_.valid()) {
            w_ = factor_.solve(d_t_);
            solved = w_.allFinite();
        }
        if (!solved) {
            w_ = ridge_solve(a_t_, d_t_, lambda_);
        }
        ++chunks_trained_;
    }

    // Score matrix for a test chunk: a_test * W, no mutation.
    Matrix predict_scores(const Matrix& a_test) const {
        require(a_test.cols() == w_.rows(),
                "predict_scores: feature width does not match output weights");
        return a_test * w_;
    }

    // Pooled instances stop training; the factor is rebuilt on demand when
    // they re-enter the active set.
    void release_factor() { factor_.reset(); }

    // Snapshot support.
    void restore(int id, Matrix a_t, Matrix d_t, Matrix w, double lambda, long chunks_trained,
                 double last_accuracy) {
        id_ = id;
        a_t_ = std::move(a_t);
        d_t_ = std::move(d_t);
        w_ = std::move(w);
        lambda_ = lambda;
        chunks_trained_ = chunks_trained;
        last_accuracy_ = last_accuracy;
        factor_.reset();
    }
    CholeskyFactor& mutable_factor() { return factor_; }

private:
    void check_train_shapes(const Matrix& a_k, const Matrix& y_k) const {
        require(a_k.rows() == y_k.rows(), "train_output_layer: chunk and label rows differ");
        require(a_k.cols() == a_t_.rows(), "train_output_layer: feature width mismatch");
        require(y_k.cols() == d_t_.cols(), "train_output_layer: class count mismatch");
        require_one_hot(y_k, "train_output_layer");
    }

    void refactor() {
        Matrix system = a_t_;
        system.diagonal().array() += lambda_;
        factor_.compute(system);
    }

    static constexpr long kRefactorPeriod = 256;

    int id_ = -1;
    double lambda_ = 1e-8;
    Matrix a_t_;
    Matrix d_t_;
    Matrix w_;
    long chunks_trained_ = 0;
    double last_accuracy_ = 0.0;
    CholeskyFactor factor_;
};

}  // namespace bels
