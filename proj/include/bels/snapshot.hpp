#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "bels/config_io.hpp"
#include "bels/ensemble.hpp"
#include "bels/prequential.hpp"

namespace bels {

// Versioned binary snapshot of a model mid-run, plus the evaluation counters,
// sufficient to resume bit-exactly. Layout: 8-byte magic, u32 format version,
// a JSON header (dims, seed, config, chunk index, counters), then raw
// little-endian doubles for every matrix in the order the header declares.
inline constexpr char kSnapshotMagic[8] = {'B', 'E', 'L', 'S', 'S', 'N', 'P', '\0'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
inline std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

inline void put_matrix(std::ostream& out, const Matrix& m) {
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

inline Matrix get_matrix(std::istream& in) {
    const auto rows = static_cast<Index>(get_u64(in));
    const auto cols = static_cast<Index>(get_u64(in));
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!in) throw IoError("snapshot: truncated matrix payload");
    return m;
}

inline void put_instance(std::ostream& out, const OutputLayerInstance& inst) {
    put_matrix(out, inst.a_t_acc());
    put_matrix(out, inst.d_t_acc());
    put_matrix(out, inst.w_out());
    // The factor is state, not cache: restoring it keeps a resumed run on the
    // identical arithmetic path as the uninterrupted one.
    if (inst.factor().valid()) {
        put_matrix(out, Matrix(inst.factor().matrix_l()));
    }
}

inline std::shared_ptr<OutputLayerInstance> get_instance(std::istream& in,
                                                         const nlohmann::json& meta) {
    Matrix a_t = get_matrix(in);
    Matrix d_t = get_matrix(in);
    Matrix w = get_matrix(in);
    auto inst = std::make_shared<OutputLayerInstance>();
    inst->restore(meta.at("id").get<int>(), std::move(a_t), std::move(d_t), std::move(w),
                  meta.at("lambda").get<double>(), meta.at("chunks_trained").get<long>(),
                  meta.at("last_accuracy").get<double>());
    if (meta.at("has_factor").get<bool>()) {
        inst->mutable_factor().restore(get_matrix(in), true);
    }
    return inst;
}

}  // namespace detail

struct Snapshot {
    BelsModel model;
    PrequentialState eval_state;
    std::size_t d = 0;
    std::size_t n_classes = 0;
};

inline void save_snapshot(const std::string& path, BelsModel& model,
                          const PrequentialState& eval_state, std::size_t d,
                          std::size_t n_classes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write snapshot '" + path + "'");

    auto raw = model.raw_state();
    auto& fs = model.feature_space();

    nlohmann::json header;
    header["schema"] = "bels-snapshot";
    header["d"] = d;
    header["n_classes"] = n_classes;
    header["config"] = config_to_json(model.config());
    header["seed"] = model.config().seed;
    header["chunk_index"] = *raw.chunk_index;
    header["delta"] = *raw.delta;
    header["overall_correct"] = *raw.overall_correct;
    header["overall_seen"] = *raw.overall_seen;
    header["next_id"] = *raw.next_id;
    header["candidates"] = *raw.candidates;
    header["removal"] = *raw.removal;
    header["fs_chunks_seen"] = fs.chunks_seen();
    auto describe = [](const OutputLayerInstance& inst) {
        return nlohmann::json{{"id", inst.id()},
                              {"lambda", inst.lambda_ridge()},
                              {"chunks_trained", inst.chunks_trained()},
                              {"last_accuracy", inst.last_accuracy()},
                              {"has_factor", inst.factor().valid()}};
    };
    header["active"] = nlohmann::json::array();
    for (const auto& inst : *raw.active) header["active"].push_back(describe(*inst));
    header["pool"] = nlohmann::json::array();
    for (const auto& inst : *raw.pool) header["pool"].push_back(describe(*inst));
    header["eval"] = {
        {"correct", eval_state.correct},
        {"seen", eval_state.seen},
        {"elapsed_seconds", eval_state.elapsed_seconds},
        {"next_chunk_record", eval_state.next_chunk_record},
        {"ring", eval_state.ring},
        {"ring_pos", eval_state.ring_pos},
        {"ring_filled", eval_state.ring_filled},
        {"window_correct", eval_state.window_correct},
    };

    const std::string header_text = header.dump();
    out.write(kSnapshotMagic, sizeof kSnapshotMagic);
    detail::put_u32(out, kSnapshotVersion);
    detail::put_u64(out, header_text.size());
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

    for (std::size_t i = 0; i < fs.groups(); ++i) {
        const auto& grp = fs.group(i);
        detail::put_matrix(out, grp.w_e);
        detail::put_matrix(out, grp.beta_e);
        detail::put_matrix(out, grp.t1_acc);
        detail::put_matrix(out, grp.t2_acc);
        detail::put_matrix(out, grp.mu);
    }
    for (std::size_t j = 0; j < fs.enhancers(); ++j) {
        const auto& enh = fs.enhancer(j);
        detail::put_matrix(out, enh.w_h);
        detail::put_matrix(out, enh.beta_h);
    }
    for (const auto& inst : *raw.active) detail::put_instance(out, *inst);
    for (const auto& inst : *raw.pool) detail::put_instance(out, *inst);
    if (!out) throw IoError("snapshot write failed for '" + path + "'");
}

inline Snapshot load_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound("cannot open snapshot '" + path + "'");
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0) {
        throw IoError("snapshot: bad magic in '" + path + "'");
    }
    const std::uint32_t version = detail::get_u32(in);
    if (version != kSnapshotVersion) {
        throw IoError("snapshot: unsupported version " + std::to_string(version));
    }
    const std::uint64_t header_len = detail::get_u64(in);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw IoError("snapshot: truncated header");
    const auto header = nlohmann::json::parse(header_text);

    Snapshot snap;
    snap.d = header.at("d").get<std::size_t>();
    snap.n_classes = header.at("n_classes").get<std::size_t>();
    const BelsConfig cfg = config_from_json(header.at("config"));
    snap.model = BelsModel(cfg, snap.d, snap.n_classes);

    auto raw = snap.model.raw_state();
    auto& fs = snap.model.feature_space();
    for (auto& grp : fs.mutable_groups()) {
        grp.w_e = detail::get_matrix(in);
        grp.beta_e = detail::get_matrix(in);
        grp.t1_acc = detail::get_matrix(in);
        grp.t2_acc = detail::get_matrix(in);
        grp.mu = detail::get_matrix(in);
    }
    for (auto& enh : fs.mutable_enhancers()) {
        enh.w_h = detail::get_matrix(in);
        enh.beta_h = detail::get_matrix(in);
    }
    fs.set_chunks_seen(header.at("fs_chunks_seen").get<std::size_t>());

    raw.active->clear();
    for (const auto& meta : header.at("active")) {
        raw.active->push_back(detail::get_instance(in, meta));
    }
    raw.pool->clear();
    for (const auto& meta : header.at("pool")) {
        raw.pool->push_back(detail::get_instance(in, meta));
    }
    *raw.delta = header.at("delta").get<double>();
    *raw.overall_correct = header.at("overall_correct").get<std::uint64_t>();
    *raw.overall_seen = header.at("overall_seen").get<std::uint64_t>();
    *raw.chunk_index = header.at("chunk_index").get<std::uint64_t>();
    *raw.next_id = header.at("next_id").get<int>();
    *raw.candidates = header.at("candidates").get<std::vector<int>>();
    *raw.removal = header.at("removal").get<std::vector<std::size_t>>();

    const auto& ev = header.at("eval");
    snap.eval_state.correct = ev.at("correct").get<std::uint64_t>();
    snap.eval_state.seen = ev.at("seen").get<std::uint64_t>();
    snap.eval_state.elapsed_seconds = ev.at("elapsed_seconds").get<double>();
    snap.eval_state.next_chunk_record = ev.at("next_chunk_record").get<std::uint64_t>();
    snap.eval_state.ring = ev.at("ring").get<std::vector<std::uint8_t>>();
    snap.eval_state.ring_pos = ev.at("ring_pos").get<std::size_t>();
    snap.eval_state.ring_filled = ev.at("ring_filled").get<std::size_t>();
    snap.eval_state.window_correct = ev.at("window_correct").get<std::uint64_t>();
    return snap;
}

}  // namespace bels
