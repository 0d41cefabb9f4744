#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "bels/feature_space.hpp"
#include "bels/matrix.hpp"
#include "bels/output_layer.hpp"

namespace bels {

// Ablation ladder. Each step re-enables one mechanism:
//   kBls      - single output layer, sparse maps frozen after the first chunk
//   kBelsFps  - single output layer, full accumulator updates
//   kBelsEns  - ensemble with removal but no pool (removed instances are lost)
//   kBels     - full system including the pool and re-admission
enum class Variant { kBls, kBelsFps, kBelsEns, kBels };

inline std::string variant_name(Variant v) {
    switch (v) {
        case Variant::kBls: return "BLS";
        case Variant::kBelsFps: return "BELS-FPs";
        case Variant::kBelsEns: return "BELS-Ens";
        case Variant::kBels: return "BELS";
    }
    return "?";
}

inline Variant variant_from_name(const std::string& s) {
    if (s == "BLS") return Variant::kBls;
    if (s == "BELS-FPs") return Variant::kBelsFps;
    if (s == "BELS-Ens") return Variant::kBelsEns;
    if (s == "BELS") return Variant::kBels;
    throw InvalidConfig("unknown variant '" + s + "'");
}

struct BelsConfig {
    std::size_t n = 25;        // feature mapping groups
    std::size_t m = 1;         // enhancement groups
    std::size_t g = 0;         // nodes per feature group; 0 = input width d
    std::size_t h = 0;         // nodes per enhancement group; 0 = 2*d
    std::size_t chunk_size = 10;
    std::size_t m_o = 75;      // active ensemble cap
    std::size_t m_p = 300;     // pool cap
    double eta = 0.5;          // pool re-admission accuracy bar
    double delta_init = 0.5;   // removal threshold before any chunk (and always at S_c = 2)
    double lambda_ridge = 1e-8;
    double rho = 1.0;
    std::size_t admm_iters = 50;
    double kappa = 0.001;
    double enhancement_scale = 1.0;
    std::uint64_t seed = 1;
    Variant variant = Variant::kBels;

    std::size_t resolved_g(std::size_t d) const { return g == 0 ? d : g; }
    std::size_t resolved_h(std::size_t d) const { return h == 0 ? 2 * d : h; }

    void validate() const {
        if (n == 0) throw InvalidConfig("config: n must be >= 1");
        if (chunk_size == 0) throw InvalidConfig("config: chunk_size must be >= 1");
        if (m_o == 0) throw InvalidConfig("config: m_o must be >= 1");
        if (eta < 0.0 || eta > 1.0) throw InvalidConfig("config: eta must be in [0, 1]");
        if (delta_init < 0.0 || delta_init > 1.0)
            throw InvalidConfig("config: delta_init must be in [0, 1]");
        if (lambda_ridge < 0.0) throw InvalidConfig("config: lambda_ridge must be >= 0");
        if (rho <= 0.0) throw InvalidConfig("config: rho must be > 0");
        if (admm_iters == 0) throw InvalidConfig("config: admm_iters must be >= 1");
        if (kappa <= 0.0) throw InvalidConfig("config: kappa must be > 0");
    }
};

// Hard voting: every score matrix casts one vote per row (its argmax); the
// class with the most votes wins, ties to the lowest class index.
inline std::vector<Index> vote(const std::vector<Matrix>& per_instance_scores,
                               std::size_t n_classes) {
    require(!per_instance_scores.empty(), "vote: no score matrices");
    const Index rows = per_instance_scores.front().rows();
    for (const auto& s : per_instance_scores) {
        require(s.rows() == rows && s.cols() == static_cast<Index>(n_classes),
                "vote: score matrices disagree in shape");
    }
    std::vector<Index> out(static_cast<std::size_t>(rows));
    std::vector<int> counts(n_classes);
    for (Index r = 0; r < rows; ++r) {
        std::fill(counts.begin(), counts.end(), 0);
        for (const auto& s : per_instance_scores) {
            ++counts[static_cast<std::size_t>(argmax_row(s.row(r)))];
        }
        Index best = 0;
        for (std::size_t c = 1; c < n_classes; ++c) {
            if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<Index>(c);
        }
        out[static_cast<std::size_t>(r)] = best;
    }
    return out;
}

struct ChunkResult {
    std::vector<Index> ensemble_prediction;
    double ensemble_accuracy = 0.0;
    std::vector<double> per_instance_accuracy;
};

// Label-free first phase of a chunk: membership maintenance, the test-time
// transform, per-instance scores and the voted prediction.
struct PredictionPhase {
    Matrix a_test;
    std::vector<Matrix> scores;        // aligned with scored_indices
    std::vector<std::size_t> scored_indices;  // positions in the active list
    std::vector<Index> predictions;
};

// The full model: one shared feature space plus the output-layer ensemble with
// its removal list, pool and candidate list. process_chunk is the single
// mutation entry point; inside one call the two phases keep label access out
// of prediction.
class BelsModel {
public:
    BelsModel() = default;

    BelsModel(const BelsConfig& cfg, std::size_t d, std::size_t n_classes)
        : cfg_(cfg), n_classes_(n_classes) {
        cfg_.validate();
        if (n_classes_ < 2) throw InvalidConfig("BelsModel: need at least two classes");
        const auto policy = cfg_.variant == Variant::kBls
                                ? FeatureUpdatePolicy::kFreezeAfterFirstChunk
                                : FeatureUpdatePolicy::kAccumulate;
        fs_ = FeatureSpace(d, cfg_.n, cfg_.m, cfg_.resolved_g(d), cfg_.resolved_h(d), cfg_.seed,
                           cfg_.rho, cfg_.kappa, cfg_.admm_iters, cfg_.enhancement_scale, policy);
        delta_ = cfg_.delta_init;
    }

    const BelsConfig& config() const { return cfg_; }
    std::size_t n_classes() const { return n_classes_; }
    const FeatureSpace& feature_space() const { return fs_; }
    FeatureSpace& feature_space() { return fs_; }

    std::size_t active_size() const { return active_.size(); }
    std::size_t pool_size() const { return pool_.size(); }
    double delta() const { return delta_; }
    std::uint64_t overall_correct() const { return overall_correct_; }
    std::uint64_t overall_seen() const { return overall_seen_; }
    std::uint64_t chunk_index() const { return chunk_index_; }
    int total_instances_created() const { return next_id_; }

    const OutputLayerInstance& active_instance(std::size_t i) const { return *active_.at(i); }
    const OutputLayerInstance& pool_instance(std::size_t i) const { return *pool_.at(i); }

    // Phase 1 (no labels): maintenance + transform + score + vote.
    PredictionPhase predict_chunk(const Matrix& x) {
        maintain_membership();
        PredictionPhase p;
        p.a_test = fs_.transform(x);
        for (std::size_t i = 0; i < active_.size(); ++i) {
            if (!active_[i]->trained()) continue;  // skip instances that never saw data
            p.scores.push_back(active_[i]->predict_scores(p.a_test));
            p.scored_indices.push_back(i);
        }
        if (p.scores.empty()) {
            // Cold start: nothing has trained yet, predict class 0 everywhere.
            p.predictions.assign(static_cast<std::size_t>(x.rows()), 0);
        } else {
            p.predictions = vote(p.scores, n_classes_);
        }
        return p;
    }

    // Phase 2 (labels available): per-instance accuracies, removal list, the
    // dynamic threshold, pool audit, then feature-space + output-layer training.
    ChunkResult learn_chunk(const Matrix& x, const Matrix& y, const PredictionPhase& phase) {
        require(x.rows() == y.rows(), "process_chunk: chunk and label rows differ");
        require(y.cols() == static_cast<Index>(n_classes_),
                "process_chunk: label width does not match class count");
        require_one_hot(y, "process_chunk");

        ChunkResult result;
        result.ensemble_prediction = phase.predictions;

        // Ensemble correctness drives the overall counters and delta.
        std::uint64_t correct = 0;
        for (Index r = 0; r < y.rows(); ++r) {
            if (phase.predictions[static_cast<std::size_t>(r)] == argmax_row(y.row(r))) ++correct;
        }
        result.ensemble_accuracy =
            y.rows() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(y.rows());
        overall_correct_ += correct;
        overall_seen_ += static_cast<std::uint64_t>(y.rows());

        // Per-instance accuracies; instances below the current threshold are
        // flagged for removal at the next maintenance step.
        const bool ensemble_variant =
            cfg_.variant == Variant::kBelsEns || cfg_.variant == Variant::kBels;
        removal_.clear();
        for (std::size_t k = 0; k < phase.scores.size(); ++k) {
            const double acc = score_accuracy(phase.scores[k], y);
            const std::size_t idx = phase.scored_indices[k];
            active_[idx]->set_last_accuracy(acc);
            result.per_instance_accuracy.push_back(acc);
            if (ensemble_variant && acc < delta_) removal_.push_back(idx);
        }

        // Chunk size 2 keeps the initial threshold; otherwise delta tracks the
        // cumulative ensemble accuracy.
        if (ensemble_variant && cfg_.chunk_size != 2 && overall_seen_ > 0) {
            delta_ = static_cast<double>(overall_correct_) / static_cast<double>(overall_seen_);
        }

        // Pool audit: pooled instances scoring above eta become candidates for
        // re-admission at the next maintenance step.
        candidates_.clear();
        if (cfg_.variant == Variant::kBels) {
            for (const auto& inst : pool_) {
                const double acc = score_accuracy(inst->predict_scores(phase.a_test), y);
                inst->set_last_accuracy(acc);
                if (acc > cfg_.eta) candidates_.push_back(inst->id());
            }
        }

        // Train: refresh the shared layers, then every active instance.
        Matrix a_k = fs_.update(x);
        Matrix gram(a_k.cols(), a_k.cols());
        gram.setZero();
        gram.selfadjointView<Eigen::Lower>().rankUpdate(a_k.transpose());
        gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
        Matrix cross = a_k.transpose() * y;
        for (auto& inst : active_) inst->train_with_gram(a_k, y, gram, cross);

        ++chunk_index_;
        return result;
    }

    ChunkResult process_chunk(const Matrix& x, const Matrix& y) {
        PredictionPhase phase = predict_chunk(x);
        return learn_chunk(x, y, phase);
    }

    // Snapshot support: raw handles used by the serializer only.
    struct RawState {
        std::vector<std::shared_ptr<OutputLayerInstance>>* active;
        std::deque<std::shared_ptr<OutputLayerInstance>>* pool;
        std::vector<int>* candidates;
        std::vector<std::size_t>* removal;
        double* delta;
        std::uint64_t* overall_correct;
        std::uint64_t* overall_seen;
        std::uint64_t* chunk_index;
        int* next_id;
    };
    RawState raw_state() {
        return {&active_, &pool_, &candidates_, &removal_, &delta_,
                &overall_correct_, &overall_seen_, &chunk_index_, &next_id_};
    }

private:
    bool single_layer_variant() const {
        return cfg_.variant == Variant::kBls || cfg_.variant == Variant::kBelsFps;
    }

    void add_instance() {
        active_.push_back(std::make_shared<OutputLayerInstance>(
            next_id_++, static_cast<Index>(fs_.output_width()),
            static_cast<Index>(n_classes_), cfg_.lambda_ridge));
    }

    // Membership maintenance ahead of testing. While the ensemble is below its
    // cap it only grows (one newcomer per chunk); once full, the instances
    // flagged on the previous chunk are removed, pooled when the flagged share
    // exceeds half the ensemble, and replaced from the candidate list.
    void maintain_membership() {
        if (single_layer_variant()) {
            if (active_.empty()) add_instance();
            removal_.clear();
            candidates_.clear();
            return;
        }
        const bool was_full = active_.size() >= cfg_.m_o;
        if (!was_full) {
            add_instance();
        } else {
            const std::size_t xi_len = active_.size();
            const bool to_pool =
                cfg_.variant == Variant::kBels && removal_.size() > xi_len / 2;
            std::sort(removal_.rbegin(), removal_.rend());
            for (std::size_t idx : removal_) {
                auto inst = active_[idx];
                active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(idx));
                if (to_pool) {
                    inst->release_factor();
                    pool_.push_back(std::move(inst));
                }
            }
            if (cfg_.variant == Variant::kBels) {
                // Candidates re-enter oldest pool entry first and leave the pool.
                for (int id : candidates_) {
                    if (active_.size() >= cfg_.m_o) break;
                    auto it = std::find_if(pool_.begin(), pool_.end(),
                                           [id](const auto& p) { return p->id() == id; });
                    if (it == pool_.end()) continue;
                    active_.push_back(std::move(*it));
                    pool_.erase(it);
                }
                while (pool_.size() > cfg_.m_p) pool_.pop_front();
            }
        }
        removal_.clear();
        candidates_.clear();
        // A mass removal with an empty candidate list may drain the ensemble;
        // testing always sees at least one learner.
        if (active_.empty()) add_instance();
    }

    BelsConfig cfg_;
    std::size_t n_classes_ = 0;
    FeatureSpace fs_;
    std::vector<std::shared_ptr<OutputLayerInstance>> active_;
    std::deque<std::shared_ptr<OutputLayerInstance>> pool_;
    std::vector<int> candidates_;        // bP, instance ids in pool-entry order
    std::vector<std::size_t> removal_;   // L, indices into the active list
    double delta_ = 0.5;
    std::uint64_t overall_correct_ = 0;
    std::uint64_t overall_seen_ = 0;
    std::uint64_t chunk_index_ = 0;
    int next_id_ = 0;
};

}  // namespace bels
