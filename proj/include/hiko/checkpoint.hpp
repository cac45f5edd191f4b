// Versioned checkpoint: all codec parameters keyed by (tree path, role),
// plus the frozen set, optional optimizer state, and training metadata.
//
// Binary layout (all integers and doubles little-endian):
//   magic "HIKO" | u32 version | u32 m | u32 r
//   u32 enc_hidden | u32 dec_hidden | f64 dropout_rate
//   u32 entry_count, then per entry:
//     path (u32 length + bytes) | u8 role (0 enc, 1 dec_left, 2 dec_right)
//     u32 in_dim | u32 hidden | u32 out_dim | u8 has_alpha
//     8 arrays w1 b1 w2 b2 w3 b3 w4 b4, each u64 count + count f64
//     f64 alpha (iff has_alpha)
//   u32 frozen_count, then per item: path | u8 role
//   u8 has_optimizer; if 1: u32 count, per item:
//     path | u8 role | u64 step | 18 arrays (m/v for the 8 tensors + alpha)
//   u32 best_epoch | f64 best_val_ber | u64 seed | u32 epochs_trained
//   u32 val_history_count + f64 values
#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "hiko/io.hpp"
#include "hiko/ko_codec.hpp"

namespace hiko {

inline constexpr char kCheckpointMagic[4] = {'H', 'I', 'K', 'O'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
    std::string path;
    Role role = Role::Enc;
    Mlp net;
};

struct AdamEntry {
    std::string path;
    Role role = Role::Enc;
    AdamState state;
};

struct Checkpoint {
    std::uint32_t format_version = kCheckpointVersion;
    int m = 0;
    int r = 0;
    int enc_hidden = 0;
    int dec_hidden = 0;
    double dropout_rate = 0.0;
    std::vector<CheckpointEntry> entries;
    FrozenSet frozen;
    std::optional<std::vector<AdamEntry>> optimizer;
    // metadata
    std::uint32_t best_epoch = 0;
    double best_val_ber = 1.0;
    std::uint64_t seed = 0;
    std::uint32_t epochs_trained = 0;
    std::vector<double> val_history;  // index 0 is the pre-training model
};

inline Checkpoint checkpoint_from_codec(const NeuralCodec& codec) {
    Checkpoint ckpt;
    ckpt.m = codec.tree.root().params.m;
    ckpt.r = codec.tree.root().params.r;
    ckpt.enc_hidden = codec.enc_hidden;
    ckpt.dec_hidden = codec.dec_hidden;
    ckpt.dropout_rate = codec.dropout_rate;
    for (int idx : codec.tree.branch_nodes())
        for (Role role : kAllRoles)
            ckpt.entries.push_back({codec.tree.at(idx).path, role, codec.net_at(idx, role)});
    ckpt.frozen = codec.frozen;
    return ckpt;
}

inline NeuralCodec codec_from_checkpoint(const Checkpoint& ckpt) {
    NeuralCodec codec;
    codec.tree = build_plotkin_tree(ckpt.m, ckpt.r);
    codec.enc_hidden = ckpt.enc_hidden;
    codec.dec_hidden = ckpt.dec_hidden;
    codec.dropout_rate = ckpt.dropout_rate;
    codec.nets.resize(codec.tree.nodes.size());
    std::vector<int> seen(codec.tree.nodes.size() * 3, 0);
    for (const auto& entry : ckpt.entries) {
        const int idx = codec.tree.index_of(entry.path);
        if (codec.tree.at(idx).kind != CodeTree::NodeKind::Branch)
            throw CheckpointError("checkpoint entry at non-branch path '" + entry.path + "'");
        const int l = static_cast<int>(codec.tree.at(idx).params.n / 2);
        const int want_in = entry.role == Role::DecRight ? 4 * l : 2 * l;
        if (entry.net.in_dim != want_in || entry.net.out_dim != l)
            throw CheckpointError("checkpoint network shape mismatch at '" + entry.path + "'");
        codec.net_at(idx, entry.role) = entry.net;
        seen[static_cast<std::size_t>(idx) * 3 + static_cast<std::size_t>(entry.role)] += 1;
    }
    for (int idx : codec.tree.branch_nodes())
        for (Role role : kAllRoles)
            if (seen[static_cast<std::size_t>(idx) * 3 + static_cast<std::size_t>(role)] != 1)
                throw CheckpointError("checkpoint is missing or duplicates a network at '" +
                                      codec.tree.at(idx).path + "'");
    codec.frozen = ckpt.frozen;
    codec.transferred = ckpt.frozen;  // persisted provenance: the frozen set at save time
    return codec;
}

namespace detail {

inline void put_matrix(std::string& buf, const Matrix& m) {
    io::put_u64(buf, static_cast<std::uint64_t>(m.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i) io::put_f64(buf, *(m.data() + i));
}

inline void put_vector(std::string& buf, const Vector& v) {
    io::put_u64(buf, static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) io::put_f64(buf, v(i));
}

inline void read_matrix(io::Reader& in, Matrix& m) {
    const std::uint64_t count = in.u64();
    if (count != static_cast<std::uint64_t>(m.size())) throw CheckpointError("array length mismatch");
    for (Eigen::Index i = 0; i < m.size(); ++i) *(m.data() + i) = in.f64();
}

inline void read_vector(io::Reader& in, Vector& v) {
    const std::uint64_t count = in.u64();
    if (count != static_cast<std::uint64_t>(v.size())) throw CheckpointError("array length mismatch");
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = in.f64();
}

inline void put_mlp_arrays(std::string& buf, const Mlp& net) {
    put_matrix(buf, net.w1);
    put_vector(buf, net.b1);
    put_matrix(buf, net.w2);
    put_vector(buf, net.b2);
    put_matrix(buf, net.w3);
    put_vector(buf, net.b3);
    put_matrix(buf, net.w4);
    put_vector(buf, net.b4);
}

inline void read_mlp_arrays(io::Reader& in, Mlp& net) {
    read_matrix(in, net.w1);
    read_vector(in, net.b1);
    read_matrix(in, net.w2);
    read_vector(in, net.b2);
    read_matrix(in, net.w3);
    read_vector(in, net.b3);
    read_matrix(in, net.w4);
    read_vector(in, net.b4);
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
    std::string buf;
    buf.append(kCheckpointMagic, 4);
    io::put_u32(buf, ckpt.format_version);
    io::put_u32(buf, static_cast<std::uint32_t>(ckpt.m));
    io::put_u32(buf, static_cast<std::uint32_t>(ckpt.r));
    io::put_u32(buf, static_cast<std::uint32_t>(ckpt.enc_hidden));
    io::put_u32(buf, static_cast<std::uint32_t>(ckpt.dec_hidden));
    io::put_f64(buf, ckpt.dropout_rate);

    io::put_u32(buf, static_cast<std::uint32_t>(ckpt.entries.size()));
    for (const auto& entry : ckpt.entries) {
        io::put_string(buf, entry.path);
        buf.push_back(static_cast<char>(entry.role));
        io::put_u32(buf, static_cast<std::uint32_t>(entry.net.in_dim));
        io::put_u32(buf, static_cast<std::uint32_t>(entry.net.hidden));
        io::put_u32(buf, static_cast<std::uint32_t>(entry.net.out_dim));
        buf.push_back(entry.net.has_alpha ? 1 : 0);
        detail::put_mlp_arrays(buf, entry.net);
        if (entry.net.has_alpha) io::put_f64(buf, entry.net.alpha);
    }

    io::put_u32(buf, static_cast<std::uint32_t>(ckpt.frozen.size()));
    for (const auto& [path, role] : ckpt.frozen) {
        io::put_string(buf, path);
        buf.push_back(static_cast<char>(role));
    }

    buf.push_back(ckpt.optimizer.has_value() ? 1 : 0);
    if (ckpt.optimizer) {
        io::put_u32(buf, static_cast<std::uint32_t>(ckpt.optimizer->size()));
        for (const auto& entry : *ckpt.optimizer) {
            io::put_string(buf, entry.path);
            buf.push_back(static_cast<char>(entry.role));
            io::put_u64(buf, static_cast<std::uint64_t>(entry.state.step));
            const auto& s = entry.state;
            for (const Matrix* m : {&s.m_w1, &s.v_w1, &s.m_w2, &s.v_w2, &s.m_w3, &s.v_w3, &s.m_w4, &s.v_w4})
                detail::put_matrix(buf, *m);
            for (const Vector* v : {&s.m_b1, &s.v_b1, &s.m_b2, &s.v_b2, &s.m_b3, &s.v_b3, &s.m_b4, &s.v_b4})
                detail::put_vector(buf, *v);
            io::put_f64(buf, s.m_alpha);
            io::put_f64(buf, s.v_alpha);
        }
    }

    io::put_u32(buf, ckpt.best_epoch);
    io::put_f64(buf, ckpt.best_val_ber);
    io::put_u64(buf, ckpt.seed);
    io::put_u32(buf, ckpt.epochs_trained);
    io::put_u32(buf, static_cast<std::uint32_t>(ckpt.val_history.size()));
    for (double v : ckpt.val_history) io::put_f64(buf, v);
    return buf;
}

inline Checkpoint deserialize_checkpoint(std::string_view bytes) {
    io::Reader in(bytes);
    Checkpoint ckpt;
    {
        char magic[4];
        for (char& c : magic) c = static_cast<char>(in.u8());
        if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw CheckpointError("bad magic");
    }
    ckpt.format_version = in.u32();
    if (ckpt.format_version != kCheckpointVersion) throw CheckpointError("unsupported format version");
    ckpt.m = static_cast<int>(in.u32());
    ckpt.r = static_cast<int>(in.u32());
    if (ckpt.m < 0 || ckpt.m > 20 || ckpt.r < 0 || ckpt.r > ckpt.m)
        throw CheckpointError("bad code parameters");
    ckpt.enc_hidden = static_cast<int>(in.u32());
    ckpt.dec_hidden = static_cast<int>(in.u32());
    ckpt.dropout_rate = in.f64();

    const std::uint32_t entry_count = in.u32();
    ckpt.entries.reserve(entry_count);
    for (std::uint32_t i = 0; i < entry_count; ++i) {
        CheckpointEntry entry;
        entry.path = in.str();
        entry.role = static_cast<Role>(in.u8());
        const int in_dim = static_cast<int>(in.u32());
        const int hidden = static_cast<int>(in.u32());
        const int out_dim = static_cast<int>(in.u32());
        const bool has_alpha = in.u8() != 0;
        entry.net = Mlp::zeros(in_dim, hidden, out_dim, 0.0, has_alpha);
        entry.net.dropout_rate = ckpt.dropout_rate;
        detail::read_mlp_arrays(in, entry.net);
        if (has_alpha) entry.net.alpha = in.f64();
        ckpt.entries.push_back(std::move(entry));
    }

    const std::uint32_t frozen_count = in.u32();
    for (std::uint32_t i = 0; i < frozen_count; ++i) {
        std::string path = in.str();
        const Role role = static_cast<Role>(in.u8());
        ckpt.frozen.insert({std::move(path), role});
    }

    if (in.u8() != 0) {
        std::vector<AdamEntry> opt;
        const std::uint32_t count = in.u32();
        for (std::uint32_t i = 0; i < count; ++i) {
            AdamEntry entry;
            entry.path = in.str();
            entry.role = static_cast<Role>(in.u8());
            const auto step = static_cast<std::int64_t>(in.u64());
            // Locate the matching network to size the moment tensors.
            const Mlp* net = nullptr;
            for (const auto& e : ckpt.entries)
                if (e.path == entry.path && e.role == entry.role) net = &e.net;
            if (!net) throw CheckpointError("optimizer entry without network: '" + entry.path + "'");
            entry.state = AdamState::zeros_like(*net);
            entry.state.step = step;
            auto& s = entry.state;
            for (Matrix* m : {&s.m_w1, &s.v_w1, &s.m_w2, &s.v_w2, &s.m_w3, &s.v_w3, &s.m_w4, &s.v_w4})
                detail::read_matrix(in, *m);
            for (Vector* v : {&s.m_b1, &s.v_b1, &s.m_b2, &s.v_b2, &s.m_b3, &s.v_b3, &s.m_b4, &s.v_b4})
                detail::read_vector(in, *v);
            s.m_alpha = in.f64();
            s.v_alpha = in.f64();
            opt.push_back(std::move(entry));
        }
        ckpt.optimizer = std::move(opt);
    }

    ckpt.best_epoch = in.u32();
    ckpt.best_val_ber = in.f64();
    ckpt.seed = in.u64();
    ckpt.epochs_trained = in.u32();
    const std::uint32_t hist = in.u32();
    ckpt.val_history.resize(hist);
    for (auto& v : ckpt.val_history) v = in.f64();
    if (!in.done()) throw CheckpointError("trailing bytes");
    return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    io::atomic_write_file(path, serialize_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint(io::read_file(path));
}

// Plain-text export for debugging; mirrors the binary content as JSON.
inline std::string checkpoint_to_json(const Checkpoint& ckpt) {
    nlohmann::json doc;
    doc["magic"] = "HIKO";
    doc["format_version"] = ckpt.format_version;
    doc["m"] = ckpt.m;
    doc["r"] = ckpt.r;
    doc["enc_hidden"] = ckpt.enc_hidden;
    doc["dec_hidden"] = ckpt.dec_hidden;
    doc["dropout_rate"] = ckpt.dropout_rate;
    auto dump = [](const Matrix& m) {
        std::vector<double> flat(m.data(), m.data() + m.size());
        return flat;
    };
    for (const auto& entry : ckpt.entries) {
        nlohmann::json e;
        e["path"] = entry.path;
        e["role"] = role_name(entry.role);
        e["in_dim"] = entry.net.in_dim;
        e["hidden"] = entry.net.hidden;
        e["out_dim"] = entry.net.out_dim;
        e["w1"] = dump(entry.net.w1);
        e["b1"] = std::vector<double>(entry.net.b1.data(), entry.net.b1.data() + entry.net.b1.size());
        e["w2"] = dump(entry.net.w2);
        e["b2"] = std::vector<double>(entry.net.b2.data(), entry.net.b2.data() + entry.net.b2.size());
        e["w3"] = dump(entry.net.w3);
        e["b3"] = std::vector<double>(entry.net.b3.data(), entry.net.b3.data() + entry.net.b3.size());
        e["w4"] = dump(entry.net.w4);
        e["b4"] = std::vector<double>(entry.net.b4.data(), entry.net.b4.data() + entry.net.b4.size());
        if (entry.net.has_alpha) e["alpha"] = entry.net.alpha;
        doc["networks"].push_back(e);
    }
    doc["frozen"] = nlohmann::json::array();
    for (const auto& [path, role] : ckpt.frozen)
        doc["frozen"].push_back({{"path", path}, {"role", role_name(role)}});
    doc["metadata"] = {{"best_epoch", ckpt.best_epoch},
                       {"best_val_ber", ckpt.best_val_ber},
                       {"seed", ckpt.seed},
                       {"epochs_trained", ckpt.epochs_trained},
                       {"val_history", ckpt.val_history}};
    return doc.dump(2) + "\n";
}

}  // namespace hiko
