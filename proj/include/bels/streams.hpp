#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "bels/errors.hpp"
#include "bels/matrix.hpp"
#include "bels/rng.hpp"

namespace bels {

// One mini-batch of the stream.
struct Chunk {
    Matrix x;            // rows x d
    Matrix y;            // rows x C, exact one-hot
    std::size_t start_index = 0;
};

inline constexpr std::size_t kUnboundedStream = std::numeric_limits<std::size_t>::max();

// Single-consumer sequential source of labeled chunks. Deterministic given its
// construction arguments; clone_fresh() restarts from the beginning.
class StreamSource {
public:
    virtual ~StreamSource() = default;
    virtual std::size_t feature_count() const = 0;
    virtual std::size_t class_count() const = 0;
    virtual std::size_t remaining() const = 0;
    // Emits up to `size` rows; nullopt once exhausted.
    virtual std::optional<Chunk> next_chunk(std::size_t size) = 0;
    virtual std::unique_ptr<StreamSource> clone_fresh() const = 0;
};

namespace detail {

// Base for generators that synthesize one labeled sample at a time.
class SampleStream : public StreamSource {
public:
    SampleStream(std::size_t d, std::size_t classes, std::size_t total)
        : d_(d), classes_(classes), total_(total) {}

    std::size_t feature_count() const override { return d_; }
    std::size_t class_count() const override { return classes_; }
    std::size_t remaining() const override {
        return total_ == kUnboundedStream ? kUnboundedStream : total_ - emitted_;
    }

    std::optional<Chunk> next_chunk(std::size_t size) override {
        if (size == 0) throw InvalidConfig("next_chunk: size must be >= 1");
        std::size_t rows = size;
        if (total_ != kUnboundedStream) rows = std::min(rows, total_ - emitted_);
        if (rows == 0) return std::nullopt;
        Chunk c;
        c.start_index = emitted_;
        c.x = Matrix(static_cast<Index>(rows), static_cast<Index>(d_));
        c.y = Matrix::Zero(static_cast<Index>(rows), static_cast<Index>(classes_));
        std::vector<double> features(d_);
        for (std::size_t r = 0; r < rows; ++r) {
            std::size_t label = generate(emitted_, features);
            for (std::size_t j = 0; j < d_; ++j) {
                c.x(static_cast<Index>(r), static_cast<Index>(j)) = features[j];
            }
            c.y(static_cast<Index>(r), static_cast<Index>(label)) = 1.0;
            ++emitted_;
        }
        return c;
    }

protected:
    // Fills `features` (length d) and returns the class index of sample `t`.
    virtual std::size_t generate(std::size_t t, std::vector<double>& features) = 0;

private:
    std::size_t d_, classes_, total_;
    std::size_t emitted_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// SEA generator: three features uniform on [0, 10]; class 1 iff f1 + f2 <= theta.
// The community-standard thresholds for the four classification functions are
// {8, 9, 7, 9.5}. The active function switches abruptly every segment_len
// samples following the `functions` schedule; labels flip with probability
// `noise`.
// ---------------------------------------------------------------------------

inline constexpr std::array<double, 4> kSeaThresholds{8.0, 9.0, 7.0, 9.5};

inline std::size_t sea_label(double f1, double f2, int function) {
    return f1 + f2 <= kSeaThresholds[static_cast<std::size_t>(function)] ? 1 : 0;
}

class SeaStream final : public detail::SampleStream {
public:
    SeaStream(std::vector<int> functions, std::size_t segment_len, double noise,
              std::uint64_t seed)
        : detail::SampleStream(3, 2, functions.size() * segment_len),
          functions_(std::move(functions)), segment_len_(segment_len), noise_(noise),
          seed_(seed), rng_(seed) {
        if (functions_.empty()) throw InvalidConfig("sea_stream: empty function schedule");
        for (int f : functions_) {
            if (f < 0 || f > 3) throw InvalidConfig("sea_stream: functions must be in {0,1,2,3}");
        }
        if (segment_len_ == 0) throw InvalidConfig("sea_stream: segment_len must be >= 1");
        if (noise_ < 0.0 || noise_ >= 0.5) throw InvalidConfig("sea_stream: noise must be in [0, 0.5)");
    }

    std::unique_ptr<StreamSource> clone_fresh() const override {
        return std::make_unique<SeaStream>(functions_, segment_len_, noise_, seed_);
    }

protected:
    std::size_t generate(std::size_t t, std::vector<double>& f) override {
        f[0] = rng_.uniform(0.0, 10.0);
        f[1] = rng_.uniform(0.0, 10.0);
        f[2] = rng_.uniform(0.0, 10.0);
        const std::size_t seg = std::min(t / segment_len_, functions_.size() - 1);
        std::size_t label = sea_label(f[0], f[1], functions_[seg]);
        if (noise_ > 0.0 && rng_.uniform01() < noise_) label = 1 - label;
        return label;
    }

private:
    std::vector<int> functions_;
    std::size_t segment_len_;
    double noise_;
    std::uint64_t seed_;
    Rng rng_;
};

inline std::unique_ptr<StreamSource> sea_stream(std::vector<int> functions,
                                                std::size_t segment_len, double noise,
                                                std::uint64_t seed) {
    return std::make_unique<SeaStream>(std::move(functions), segment_len, noise, seed);
}

// ---------------------------------------------------------------------------
// Rotating hyperplane: samples uniform on [0,1]^d, labeled by the sign of
// w.x - theta with theta = sum(w)/2 so classes stay balanced. Each sample the
// weights move by drift_per_sample along fixed random directions.
// ---------------------------------------------------------------------------

inline std::size_t hyperplane_label(const std::vector<double>& x, const std::vector<double>& w) {
    double s = 0.0, total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        s += w[i] * x[i];
        total += w[i];
    }
    return s >= total / 2.0 ? 1 : 0;
}

class HyperplaneStream final : public detail::SampleStream {
public:
    HyperplaneStream(std::size_t d, double drift_per_sample, std::uint64_t seed,
                     std::size_t total = kUnboundedStream)
        : detail::SampleStream(d, 2, total), d_(d), drift_(drift_per_sample), seed_(seed),
          total_(total), rng_(seed) {
        if (d < 2) throw InvalidConfig("hyperplane_stream: d must be >= 2");
        w_.resize(d);
        dir_.resize(d);
        for (std::size_t i = 0; i < d; ++i) {
            w_[i] = rng_.uniform_sym();
            dir_[i] = rng_.uniform_int(2) == 0 ? -1.0 : 1.0;
        }
    }

    std::unique_ptr<StreamSource> clone_fresh() const override {
        return std::make_unique<HyperplaneStream>(d_, drift_, seed_, total_);
    }

protected:
    std::size_t generate(std::size_t, std::vector<double>& f) override {
        for (std::size_t i = 0; i < d_; ++i) f[i] = rng_.uniform01();
        std::size_t label = hyperplane_label(f, w_);
        if (drift_ != 0.0) {
            for (std::size_t i = 0; i < d_; ++i) w_[i] += drift_ * dir_[i];
        }
        return label;
    }

private:
    std::size_t d_;
    double drift_;
    std::uint64_t seed_;
    std::size_t total_;
    Rng rng_;
    std::vector<double> w_, dir_;
};

inline std::unique_ptr<StreamSource> hyperplane_stream(std::size_t d, double drift_per_sample,
                                                       std::uint64_t seed,
                                                       std::size_t total = kUnboundedStream) {
    return std::make_unique<HyperplaneStream>(d, drift_per_sample, seed, total);
}

// ---------------------------------------------------------------------------
// LED display generator: 24 binary features (7 segments + 17 irrelevant),
// 10 digit classes. Each relevant bit flips independently with probability
// `noise`. From the drift point on, relevant position i swaps values with
// irrelevant position 7 + i for the first `drifting_features` positions.
// ---------------------------------------------------------------------------

inline constexpr std::array<std::array<int, 7>, 10> kLedSegments{{
    {1, 1, 1, 0, 1, 1, 1},
    {0, 0, 1, 0, 0, 1, 0},
    {1, 0, 1, 1, 1, 0, 1},
    {1, 0, 1, 1, 0, 1, 1},
    {0, 1, 1, 1, 0, 1, 0},
    {1, 1, 0, 1, 0, 1, 1},
    {1, 1, 0, 1, 1, 1, 1},
    {1, 0, 1, 0, 0, 1, 0},
    {1, 1, 1, 1, 1, 1, 1},
    {1, 1, 1, 1, 0, 1, 1},
}};

class LedStream final : public detail::SampleStream {
public:
    LedStream(std::size_t drifting_features, double noise, std::uint64_t seed,
              std::size_t total = 100000, std::size_t drift_at = kUnboundedStream)
        : detail::SampleStream(24, 10, total), drifting_(drifting_features), noise_(noise),
          seed_(seed), total_(total),
          drift_at_(drift_at == kUnboundedStream ? total / 2 : drift_at), rng_(seed) {
        if (drifting_ > 7) throw InvalidConfig("led_stream: at most 7 drifting features");
        if (noise_ < 0.0 || noise_ >= 1.0) throw InvalidConfig("led_stream: noise must be in [0, 1)");
    }

    std::unique_ptr<StreamSource> clone_fresh() const override {
        return std::make_unique<LedStream>(drifting_, noise_, seed_, total_, drift_at_);
    }

protected:
    std::size_t generate(std::size_t t, std::vector<double>& f) override {
        const auto digit = static_cast<std::size_t>(rng_.uniform_int(10));
        std::array<double, 24> bits{};
        for (std::size_t i = 0; i < 7; ++i) {
            double b = kLedSegments[digit][i];
            if (noise_ > 0.0 && rng_.uniform01() < noise_) b = 1.0 - b;
            bits[i] = b;
        }
        for (std::size_t i = 7; i < 24; ++i) bits[i] = static_cast<double>(rng_.uniform_int(2));
        const bool drifted = drifting_ > 0 && t >= drift_at_;
        for (std::size_t i = 0; i < 24; ++i) f[i] = bits[i];
        if (drifted) {
            for (std::size_t i = 0; i < drifting_; ++i) std::swap(f[i], f[7 + i]);
        }
        return digit;
    }

private:
    std::size_t drifting_;
    double noise_;
    std::uint64_t seed_;
    std::size_t total_;
    std::size_t drift_at_;
    Rng rng_;
};

inline std::unique_ptr<StreamSource> led_stream(std::size_t drifting_features, double noise,
                                                std::uint64_t seed, std::size_t total = 100000,
                                                std::size_t drift_at = kUnboundedStream) {
    return std::make_unique<LedStream>(drifting_features, noise, seed, total, drift_at);
}

// ---------------------------------------------------------------------------
// Isotropic Gaussian clusters, one per class. Segments can leave the means
// alone, cycle them between classes (interchanging drift) or translate them
// all by a fixed step per segment (incremental drift).
// ---------------------------------------------------------------------------

enum class GaussianDrift { kNone, kInterchange, kTranslate };

class GaussianClustersStream final : public detail::SampleStream {
public:
    GaussianClustersStream(std::vector<std::vector<double>> means, double sigma,
                           std::size_t segment_len, std::uint64_t seed,
                           std::size_t total = kUnboundedStream,
                           GaussianDrift drift = GaussianDrift::kNone,
                           std::vector<double> translate_step = {})
        : detail::SampleStream(means.empty() ? 0 : means.front().size(), means.size(), total),
          means_(std::move(means)), sigma_(sigma), segment_len_(segment_len), seed_(seed),
          total_(total), drift_(drift), step_(std::move(translate_step)), rng_(seed) {
        if (means_.size() < 2) throw InvalidConfig("gaussian_clusters_stream: need >= 2 classes");
        if (sigma_ <= 0.0) throw InvalidConfig("gaussian_clusters_stream: sigma must be > 0");
        const std::size_t d = means_.front().size();
        if (d == 0) throw InvalidConfig("gaussian_clusters_stream: empty mean vectors");
        for (const auto& m : means_) {
            if (m.size() != d) throw InvalidConfig("gaussian_clusters_stream: ragged mean list");
        }
        if (segment_len_ == 0) throw InvalidConfig("gaussian_clusters_stream: segment_len must be >= 1");
        if (drift_ == GaussianDrift::kTranslate && step_.size() != d) {
            throw InvalidConfig("gaussian_clusters_stream: translate step must have d entries");
        }
    }

    std::unique_ptr<StreamSource> clone_fresh() const override {
        return std::make_unique<GaussianClustersStream>(means_, sigma_, segment_len_, seed_,
                                                        total_, drift_, step_);
    }

protected:
    std::size_t generate(std::size_t t, std::vector<double>& f) override {
        const std::size_t seg = t / segment_len_;
        const std::size_t k = means_.size();
        const auto cls = static_cast<std::size_t>(rng_.uniform_int(k));
        std::size_t mean_idx = cls;
        if (drift_ == GaussianDrift::kInterchange) mean_idx = (cls + seg) % k;
        for (std::size_t j = 0; j < f.size(); ++j) {
            double mu = means_[mean_idx][j];
            if (drift_ == GaussianDrift::kTranslate) mu += static_cast<double>(seg) * step_[j];
            f[j] = mu + sigma_ * rng_.normal();
        }
        return cls;
    }

private:
    std::vector<std::vector<double>> means_;
    double sigma_;
    std::size_t segment_len_;
    std::uint64_t seed_;
    std::size_t total_;
    GaussianDrift drift_;
    std::vector<double> step_;
    Rng rng_;
};

inline std::unique_ptr<StreamSource> gaussian_clusters_stream(
    std::vector<std::vector<double>> means, double sigma, std::size_t segment_len,
    std::uint64_t seed, std::size_t total = kUnboundedStream,
    GaussianDrift drift = GaussianDrift::kNone, std::vector<double> translate_step = {}) {
    return std::make_unique<GaussianClustersStream>(std::move(means), sigma, segment_len, seed,
                                                    total, drift, std::move(translate_step));
}

// ---------------------------------------------------------------------------
// CSV ingestion. Rows are streamed in file order; labels map to class indices
// by first appearance. Standardization, when enabled, uses running statistics
// over the rows emitted so far (the current row included, so a constant column
// is exactly zero), guarded by max(sigma, 1e-12).
// ---------------------------------------------------------------------------

using LabelColumn = std::variant<std::string, std::size_t>;

class CsvStream final : public StreamSource {
public:
    CsvStream(std::string path, LabelColumn label, bool standardize)
        : path_(std::move(path)), label_(label), standardize_(standardize) {
        load();
        reset_stats();
    }

    std::size_t feature_count() const override { return feature_names_.size(); }
    std::size_t class_count() const override { return class_names_.size(); }
    std::size_t remaining() const override { return features_.size() - cursor_; }
    std::size_t total_rows() const { return features_.size(); }
    const std::vector<std::string>& class_names() const { return class_names_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    std::optional<Chunk> next_chunk(std::size_t size) override {
        if (size == 0) throw InvalidConfig("next_chunk: size must be >= 1");
        const std::size_t rows = std::min(size, features_.size() - cursor_);
        if (rows == 0) return std::nullopt;
        const std::size_t d = feature_names_.size();
        Chunk c;
        c.start_index = cursor_;
        c.x = Matrix(static_cast<Index>(rows), static_cast<Index>(d));
        c.y = Matrix::Zero(static_cast<Index>(rows), static_cast<Index>(class_names_.size()));
        for (std::size_t r = 0; r < rows; ++r) {
            const auto& row = features_[cursor_];
            for (std::size_t j = 0; j < d; ++j) {
                double v = row[j];
                if (standardize_) {
                    welford_update(j, v);
                    v = standardized(j, v);
                }
                c.x(static_cast<Index>(r), static_cast<Index>(j)) = v;
            }
            c.y(static_cast<Index>(r), static_cast<Index>(labels_[cursor_])) = 1.0;
            ++cursor_;
        }
        return c;
    }

    std::unique_ptr<StreamSource> clone_fresh() const override {
        return std::make_unique<CsvStream>(path_, label_, standardize_);
    }

private:
    static std::vector<std::string> split_csv_line(const std::string& line) {
        std::vector<std::string> cells;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                cells.push_back(cur);
                cur.clear();
            } else if (ch != '\r') {
                cur.push_back(ch);
            }
        }
        cells.push_back(cur);
        return cells;
    }

    static std::optional<double> parse_number(const std::string& s) {
        const char* b = s.data();
        const char* e = b + s.size();
        while (b < e && (*b == ' ' || *b == '\t')) ++b;
        while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
        if (b == e) return std::nullopt;
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || ptr != e) return std::nullopt;
        return v;
    }

    void load() {
        std::ifstream in(path_);
        if (!in) throw FileNotFound("cannot open '" + path_ + "'");
        std::vector<std::vector<std::string>> raw;
        std::string line;
        std::size_t line_no = 0;
        std::size_t width = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
            auto cells = split_csv_line(line);
            if (raw.empty()) {
                width = cells.size();
            } else if (cells.size() != width) {
                throw ParseError("row has " + std::to_string(cells.size()) +
                                     " cells, expected " + std::to_string(width),
                                 line_no);
            }
            raw.push_back(std::move(cells));
        }
        if (raw.empty()) throw ParseError("file is empty", 1);

        // The first row is a header when any cell fails numeric parsing or the
        // label column was given by name.
        bool has_header = std::holds_alternative<std::string>(label_);
        if (!has_header) {
            for (const auto& cell : raw.front()) {
                if (!parse_number(cell)) {
                    has_header = true;
                    break;
                }
            }
        }

        std::size_t label_idx;
        std::vector<std::string> header;
        if (has_header) {
            header = raw.front();
        } else {
            for (std::size_t j = 0; j < width; ++j) header.push_back("col" + std::to_string(j));
        }
        if (const auto* name = std::get_if<std::string>(&label_)) {
            auto it = std::find(header.begin(), header.end(), *name);
            if (it == header.end()) {
                throw ParseError("label column '" + *name + "' not found in header", 1);
            }
            label_idx = static_cast<std::size_t>(it - header.begin());
        } else {
            label_idx = std::get<std::size_t>(label_);
            if (label_idx >= width) throw ParseError("label column index out of range", 1);
        }
        for (std::size_t j = 0; j < width; ++j) {
            if (j != label_idx) feature_names_.push_back(header[j]);
        }

        const std::size_t first_data = has_header ? 1 : 0;
        if (raw.size() <= first_data) throw ParseError("no data rows", has_header ? 2 : 1);
        for (std::size_t i = first_data; i < raw.size(); ++i) {
            const std::size_t file_line = i + 1;
            const auto& cells = raw[i];
            std::vector<double> feats;
            feats.reserve(width - 1);
            for (std::size_t j = 0; j < width; ++j) {
                if (j == label_idx) continue;
                auto v = parse_number(cells[j]);
                if (!v) {
                    const std::size_t fj = j < label_idx ? j : j - 1;
                    throw NonNumericFeature(feature_names_[fj], file_line);
                }
                feats.push_back(*v);
            }
            const std::string& lab = cells[label_idx];
            auto it = std::find(class_names_.begin(), class_names_.end(), lab);
            std::size_t cls;
            if (it == class_names_.end()) {
                class_names_.push_back(lab);
                cls = class_names_.size() - 1;
            } else {
                cls = static_cast<std::size_t>(it - class_names_.begin());
            }
            features_.push_back(std::move(feats));
            labels_.push_back(cls);
        }
        if (class_names_.size() < 2) {
            throw ParseError("need at least two distinct labels", raw.size());
        }
    }

    void reset_stats() {
        const std::size_t d = feature_names_.size();
        count_.assign(d, 0);
        mean_.assign(d, 0.0);
        m2_.assign(d, 0.0);
    }

    void welford_update(std::size_t j, double v) {
        ++count_[j];
        const double delta = v - mean_[j];
        mean_[j] += delta / static_cast<double>(count_[j]);
        m2_[j] += delta * (v - mean_[j]);
    }

    double standardized(std::size_t j, double v) const {
        const double var = count_[j] > 1 ? m2_[j] / static_cast<double>(count_[j]) : 0.0;
        const double sigma = std::sqrt(std::max(var, 0.0));
        return (v - mean_[j]) / std::max(sigma, 1e-12);
    }

    std::string path_;
    LabelColumn label_;
    bool standardize_;
    std::vector<std::string> feature_names_;
    std::vector<std::string> class_names_;
    std::vector<std::vector<double>> features_;
    std::vector<std::size_t> labels_;
    std::size_t cursor_ = 0;
    std::vector<std::size_t> count_;
    std::vector<double> mean_, m2_;
};

inline std::unique_ptr<StreamSource> csv_stream(const std::string& path, LabelColumn label,
                                                bool standardize) {
    return std::make_unique<CsvStream>(path, label, standardize);
}

// ---------------------------------------------------------------------------
// In-memory stream over pre-materialized samples; used to replay stream heads
// during hyperparameter selection.
// ---------------------------------------------------------------------------

class MemoryStream final : public StreamSource {
public:
    MemoryStream(Matrix x, Matrix y) : x_(std::move(x)), y_(std::move(y)) {
        require(x_.rows() == y_.rows(), "MemoryStream: feature/label rows differ");
    }

    std::size_t feature_count() const override { return static_cast<std::size_t>(x_.cols()); }
    std::size_t class_count() const override { return static_cast<std::size_t>(y_.cols()); }
    std::size_t remaining() const override {
        return static_cast<std::size_t>(x_.rows()) - cursor_;
    }

    std::optional<Chunk> next_chunk(std::size_t size) override {
        if (size == 0) throw InvalidConfig("next_chunk: size must be >= 1");
        const std::size_t rows = std::min(size, remaining());
        if (rows == 0) return std::nullopt;
        Chunk c;
        c.start_index = cursor_;
        c.x = x_.middleRows(static_cast<Index>(cursor_), static_cast<Index>(rows));
        c.y = y_.middleRows(static_cast<Index>(cursor_), static_cast<Index>(rows));
        cursor_ += rows;
        return c;
    }

    std::unique_ptr<StreamSource> clone_fresh() const override {
        return std::make_unique<MemoryStream>(x_, y_);
    }

private:
    Matrix x_, y_;
    std::size_t cursor_ = 0;
};

// Materializes up to max_samples from a fresh replica of the source.
inline MemoryStream take_head(const StreamSource& source, std::size_t max_samples) {
    auto replica = source.clone_fresh();
    std::vector<Chunk> chunks;
    std::size_t got = 0;
    while (got < max_samples) {
        auto c = replica->next_chunk(std::min<std::size_t>(1024, max_samples - got));
        if (!c) break;
        got += static_cast<std::size_t>(c->x.rows());
        chunks.push_back(std::move(*c));
    }
    if (got == 0) throw EmptyStream("take_head: source produced no samples");
    Matrix x(static_cast<Index>(got), chunks.front().x.cols());
    Matrix y(static_cast<Index>(got), chunks.front().y.cols());
    Index row = 0;
    for (const auto& c : chunks) {
        x.middleRows(row, c.x.rows()) = c.x;
        y.middleRows(row, c.y.rows()) = c.y;
        row += c.x.rows();
    }
    return MemoryStream(std::move(x), std::move(y));
}

}  // namespace bels
