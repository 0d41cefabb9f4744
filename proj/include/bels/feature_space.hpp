#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bels/linalg.hpp"
#include "bels/matrix.hpp"
#include "bels/rng.hpp"

namespace bels {

// One feature-mapping group: a fixed random projection plus the running
// accumulators that feed the sparse-autoencoder refinement.
struct FeatureGroupState {
    Matrix w_e;     // d x g, fixed after construction
    Matrix beta_e;  // 1 x g, broadcast over rows
    Matrix t1_acc;  // g x d, summed z' * x over every chunk seen
    Matrix t2_acc;  // g x g, summed z' * z
    Matrix mu;      // d x g, current sparse map
};

struct EnhancementGroupState {
    Matrix w_h;     // (n*g) x h, fixed after construction
    Matrix beta_h;  // 1 x h, broadcast
};

// Controls whether accumulators keep integrating new chunks. The plain-BLS
// ablation freezes the sparse maps after the first chunk.
enum class FeatureUpdatePolicy { kAccumulate, kFreezeAfterFirstChunk };

// The shared feature-mapping + enhancement stage. Random weights are drawn
// once at construction; the only mutable state afterwards is the accumulator
// set and the sparse maps derived from it.
class FeatureSpace {
public:
    FeatureSpace() = default;

    FeatureSpace(std::size_t d, std::size_t n, std::size_t m, std::size_t g, std::size_t h,
                 std::uint64_t seed, double rho = 1.0, double kappa = 0.001,
                 std::size_t admm_iters = 50, double enhancement_scale = 1.0,
                 FeatureUpdatePolicy policy = FeatureUpdatePolicy::kAccumulate)
        : d_(d), n_(n), m_(m), g_(g), h_(h), seed_(seed), rho_(rho), kappa_(kappa),
          admm_iters_(admm_iters), enhancement_scale_(enhancement_scale), policy_(policy) {
        if (d == 0 || n == 0 || g == 0) {
            throw InvalidConfig("FeatureSpace: d, n and g must all be >= 1");
        }
        Rng rng(seed);
        groups_.resize(n);
        for (auto& grp : groups_) {
            grp.w_e = random_matrix(rng, static_cast<Index>(d), static_cast<Index>(g));
            grp.beta_e = random_matrix(rng, 1, static_cast<Index>(g));
            grp.t1_acc = Matrix::Zero(static_cast<Index>(g), static_cast<Index>(d));
            grp.t2_acc = Matrix::Zero(static_cast<Index>(g), static_cast<Index>(g));
            grp.mu = Matrix::Zero(static_cast<Index>(d), static_cast<Index>(g));
        }
        enhancers_.resize(m);
        const Index zn = static_cast<Index>(n * g);
        for (auto& enh : enhancers_) {
            enh.w_h = random_matrix(rng, zn, static_cast<Index>(h));
            enh.beta_h = random_matrix(rng, 1, static_cast<Index>(h));
        }
    }

    std::size_t input_width() const { return d_; }
    std::size_t output_width() const { return n_ * g_ + m_ * h_; }
    std::size_t groups() const { return n_; }
    std::size_t enhancers() const { return m_; }
    std::size_t chunks_seen() const { return chunks_seen_; }

    const FeatureGroupState& group(std::size_t i) const { return groups_.at(i); }
    const EnhancementGroupState& enhancer(std::size_t j) const { return enhancers_.at(j); }

    // Training-time pass: fold the chunk into the accumulators, refresh every
    // sparse map, and emit the concatenated representation A_k.
    Matrix update(const Matrix& x) {
        check_input(x);
        const bool frozen =
            policy_ == FeatureUpdatePolicy::kFreezeAfterFirstChunk && chunks_seen_ > 0;
        if (!frozen) {
            for (auto& grp : groups_) {
                Matrix z = (x * grp.w_e).rowwise() + grp.beta_e.row(0);
                grp.t1_acc.noalias() += z.transpose() * x;
                grp.t2_acc.noalias() += z.transpose() * z;
                AdmmState st = AdmmState::zero(static_cast<Index>(g_), static_cast<Index>(d_),
                                               rho_, kappa_);
                grp.mu = admm_sparse_map(grp.t2_acc, grp.t1_acc, st, kappa_ * rho_, admm_iters_);
            }
        }
        ++chunks_seen_;
        return emit(x);
    }

    // Test-time pass: same formula on the current sparse maps, no mutation.
    Matrix transform(const Matrix& x) const {
        check_input(x);
        return emit(x);
    }

    // Test hook: pins a group's sparse map without touching the accumulators.
    void override_sparse_map(std::size_t group, Matrix mu) {
        require(mu.rows() == static_cast<Index>(d_) && mu.cols() == static_cast<Index>(g_),
                "override_sparse_map: mu must be d x g");
        groups_.at(group).mu = std::move(mu);
    }

    // Snapshot support: raw access used by the serializer only.
    std::vector<FeatureGroupState>& mutable_groups() { return groups_; }
    std::vector<EnhancementGroupState>& mutable_enhancers() { return enhancers_; }
    void set_chunks_seen(std::size_t k) { chunks_seen_ = k; }

private:
    static Matrix random_matrix(Rng& rng, Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform_sym();
        }
        return m;
    }

    void check_input(const Matrix& x) const {
        if (x.cols() != static_cast<Index>(d_)) {
            throw ShapeMismatch("FeatureSpace: chunk has " + std::to_string(x.cols()) +
                                " columns, expected " + std::to_string(d_));
        }
    }

    Matrix emit(const Matrix& x) const {
        const Index rows = x.rows();
        Matrix a(rows, static_cast<Index>(output_width()));
        Index col = 0;
        for (const auto& grp : groups_) {
            a.middleCols(col, static_cast<Index>(g_)).noalias() = x * grp.mu;
            col += static_cast<Index>(g_);
        }
        const auto zn = a.leftCols(static_cast<Index>(n_ * g_));
        for (const auto& enh : enhancers_) {
            Matrix pre = enhancement_scale_ * (zn * enh.w_h);
            pre.rowwise() += enh.beta_h.row(0);
            a.middleCols(col, static_cast<Index>(h_)) = pre.array().tanh().matrix();
            col += static_cast<Index>(h_);
        }
        return a;
    }

    std::size_t d_ = 0, n_ = 0, m_ = 0, g_ = 0, h_ = 0;
    std::uint64_t seed_ = 0;
    double rho_ = 1.0;
    double kappa_ = 0.001;
    std::size_t admm_iters_ = 50;
    double enhancement_scale_ = 1.0;
    FeatureUpdatePolicy policy_ = FeatureUpdatePolicy::kAccumulate;
    std::vector<FeatureGroupState> groups_;
    std::vector<EnhancementGroupState> enhancers_;
    std::size_t chunks_seen_ = 0;
};

}  // namespace bels
