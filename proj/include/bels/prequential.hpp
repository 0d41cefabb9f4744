#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "bels/ensemble.hpp"
#include "bels/streams.hpp"

namespace bels {

// One evaluation row per chunk. The runtime column is cumulative wall time
// around the model calls, normalized to centiseconds per 1,000 samples.
struct PrequentialRecord {
    std::uint64_t chunk_index = 0;
    std::uint64_t samples_seen = 0;
    double cumulative_accuracy = 0.0;
    double window_accuracy = 0.0;
    double elapsed_centiseconds_per_1000 = 0.0;
};

struct PrequentialSeries {
    std::vector<PrequentialRecord> records;
    double final_accuracy = 0.0;
    double total_runtime_centiseconds_per_1000 = 0.0;
    BelsConfig config_echo;
};

// Counts label accesses and flags any that happen while the prediction phase
// is in flight. The evaluation loop below is the only code handed the labels,
// and it routes every access through this guard.
class LabelGuard {
public:
    explicit LabelGuard(const Matrix& y) : y_(&y) {}
    void arm() { armed_ = true; }
    void disarm() { armed_ = false; }
    const Matrix& labels() {
        ++reads_total_;
        if (armed_) ++reads_while_armed_;
        return *y_;
    }
    std::uint64_t reads_while_armed() const { return reads_while_armed_; }
    std::uint64_t reads_total() const { return reads_total_; }

private:
    const Matrix* y_;
    bool armed_ = false;
    std::uint64_t reads_while_armed_ = 0;
    std::uint64_t reads_total_ = 0;
};

struct LabelAccessAudit {
    std::uint64_t reads_while_predicting = 0;
    std::uint64_t reads_total = 0;
};

// Serializable accumulator state of a running evaluation; enough to resume a
// run and keep producing identical records.
struct PrequentialState {
    std::uint64_t correct = 0;
    std::uint64_t seen = 0;
    double elapsed_seconds = 0.0;
    std::uint64_t next_chunk_record = 0;
    std::vector<std::uint8_t> ring;  // trailing per-sample correctness bits
    std::size_t ring_pos = 0;
    std::size_t ring_filled = 0;
    std::uint64_t window_correct = 0;
};

struct EvaluateOptions {
    std::size_t window = 1000;
    LabelAccessAudit* audit = nullptr;
    const PrequentialState* resume = nullptr;
    // Invoked after every chunk; used by the CLI to write periodic snapshots.
    std::function<void(const PrequentialState&)> after_chunk;
};

// Interleaved test-then-train over the whole stream. Predictions for a chunk
// are recorded before its labels are touched; stream generation time stays
// outside the runtime metric. Model is any type with the two-phase
// predict_chunk / learn_chunk interface and a config() carrying chunk_size.
template <typename Model>
PrequentialSeries evaluate(Model& model, StreamSource& stream, const EvaluateOptions& opts) {
    if (opts.window == 0) throw InvalidConfig("evaluate: window must be >= 1");
    PrequentialState st;
    if (opts.resume) st = *opts.resume;
    if (st.ring.size() != opts.window) {
        st.ring.assign(opts.window, 0);
        st.ring_pos = 0;
        st.ring_filled = 0;
        st.window_correct = 0;
    }

    PrequentialSeries series;
    series.config_echo = model.config();
    const std::size_t chunk_size = model.config().chunk_size;

    while (auto chunk = stream.next_chunk(chunk_size)) {
        LabelGuard guard(chunk->y);
        const auto t0 = std::chrono::steady_clock::now();
        guard.arm();
        auto phase = model.predict_chunk(chunk->x);
        guard.disarm();
        ChunkResult res = model.learn_chunk(chunk->x, guard.labels(), phase);
        const auto t1 = std::chrono::steady_clock::now();
        st.elapsed_seconds += std::chrono::duration<double>(t1 - t0).count();

        if (opts.audit) {
            opts.audit->reads_while_predicting += guard.reads_while_armed();
            opts.audit->reads_total += guard.reads_total();
        }

        const auto& y = chunk->y;
        for (Index r = 0; r < y.rows(); ++r) {
            const bool hit =
                res.ensemble_prediction[static_cast<std::size_t>(r)] == argmax_row(y.row(r));
            st.correct += hit ? 1 : 0;
            ++st.seen;
            if (st.ring_filled == st.ring.size()) {
                st.window_correct -= st.ring[st.ring_pos];
            } else {
                ++st.ring_filled;
            }
            st.ring[st.ring_pos] = hit ? 1 : 0;
            st.window_correct += hit ? 1 : 0;
            st.ring_pos = (st.ring_pos + 1) % st.ring.size();
        }

        PrequentialRecord rec;
        rec.chunk_index = st.next_chunk_record++;
        rec.samples_seen = st.seen;
        rec.cumulative_accuracy = static_cast<double>(st.correct) / static_cast<double>(st.seen);
        rec.window_accuracy =
            static_cast<double>(st.window_correct) / static_cast<double>(st.ring_filled);
        rec.elapsed_centiseconds_per_1000 =
            st.elapsed_seconds * 1e5 / static_cast<double>(st.seen);
        series.records.push_back(rec);

        if (opts.after_chunk) opts.after_chunk(model, st);
    }
    if (series.records.empty()) throw EmptyStream("evaluate: stream produced no chunks");
    series.final_accuracy = series.records.back().cumulative_accuracy;
    series.total_runtime_centiseconds_per_1000 =
        series.records.back().elapsed_centiseconds_per_1000;
    return series;
}

inline PrequentialSeries evaluate(BelsModel& model, StreamSource& stream,
                                  std::size_t window = 1000) {
    EvaluateOptions opts;
    opts.window = window;
    return evaluate(model, stream, opts);
}

// Builds a model for the configured ablation variant and runs it over the
// stream from the start.
inline PrequentialSeries run_variant(const BelsConfig& config, StreamSource& stream,
                                     std::size_t window = 1000) {
    BelsModel model(config, stream.feature_count(), stream.class_count());
    return evaluate(model, stream, window);
}

// The paper's three node combinations crossed with the five chunk sizes, in
// grid order. Every other field is inherited from `base`.
inline std::vector<BelsConfig> default_grid(const BelsConfig& base) {
    static constexpr std::array<std::pair<std::size_t, std::size_t>, 3> kNodes{
        {{25, 1}, {25, 50}, {100, 100}}};
    static constexpr std::array<std::size_t, 5> kChunks{2, 5, 10, 20, 50};
    std::vector<BelsConfig> grid;
    for (auto [n, m] : kNodes) {
        for (std::size_t sc : kChunks) {
            BelsConfig c = base;
            c.n = n;
            c.m = m;
            c.chunk_size = sc;
            grid.push_back(c);
        }
    }
    return grid;
}

struct GridOutcome {
    BelsConfig config;
    double accuracy = 0.0;
    double runtime_cs_per_1000 = 0.0;
};

// Full prequential pass per candidate over the head only; winner is the
// highest final accuracy, ties broken by lower runtime then lower grid index.
inline BelsConfig grid_select(const MemoryStream& head, const std::vector<BelsConfig>& candidates,
                              std::vector<GridOutcome>* outcomes = nullptr) {
    if (candidates.empty()) throw InvalidConfig("grid_select: no candidates");
    std::size_t best = 0;
    double best_acc = -1.0;
    double best_rt = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto replica = head.clone_fresh();
        BelsModel model(candidates[i], replica->feature_count(), replica->class_count());
        PrequentialSeries s = evaluate(model, *replica, 1000);
        if (outcomes) {
            outcomes->push_back(
                {candidates[i], s.final_accuracy, s.total_runtime_centiseconds_per_1000});
        }
        const double rt = s.total_runtime_centiseconds_per_1000;
        if (s.final_accuracy > best_acc ||
            (s.final_accuracy == best_acc && rt < best_rt)) {
            best = i;
            best_acc = s.final_accuracy;
            best_rt = rt;
        }
    }
    return candidates[best];
}

// Head size used for auto-selection: the first 1,000 samples, or the first 100
// when the stream is too short to spare them.
inline std::size_t selection_head_size(const StreamSource& stream) {
    const std::size_t len = stream.remaining();
    return (len != kUnboundedStream && len < 2000) ? 100 : 1000;
}

// CSV emission. Accuracy columns are deterministic for a fixed seed; the
// runtime column is wall-clock and exempt from reproducibility guarantees.
inline void write_series(const PrequentialSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "chunk_index,samples_seen,cumulative_accuracy,window_accuracy,cs_per_1000\n";
    char buf[160];
    for (const auto& r : series.records) {
        std::snprintf(buf, sizeof(buf), "%llu,%llu,%.6f,%.6f,%.6f\n",
                      static_cast<unsigned long long>(r.chunk_index),
                      static_cast<unsigned long long>(r.samples_seen), r.cumulative_accuracy,
                      r.window_accuracy, r.elapsed_centiseconds_per_1000);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "#summary,final_accuracy=%.6f,cs_per_1000=%.6f\n",
                  series.final_accuracy, series.total_runtime_centiseconds_per_1000);
    out << buf;
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace bels
