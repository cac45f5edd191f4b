// Hierarchical training: constituent runs, tree-addressed parameter mapping
// with freezing, the unfreeze schedule t_j = floor(j*T/(K+1)), per-component
// one-cycle learning rates, and the alternating decoder/encoder loop.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hiko/checkpoint.hpp"
#include "hiko/ko_codec.hpp"

namespace hiko {

struct TrainConfig {
    int epochs = 1;
    int batch = 4000;      // one optimizer step per batch,
    int minibatch = 1000;  // accumulated over batch/minibatch chunks
    double snr_enc_db = 0.0;
    double snr_dec_db = -1.0;
    int dec_steps_per_epoch = 10;
    int enc_steps_per_epoch = 2;
    double eta_max_new = 2e-4;
    double eta_max_pretrained = 1e-4;
    std::uint64_t seed = 0;
    int enc_hidden = 32;
    int dec_hidden = 120;
    double dropout = 0.1;
    int val_messages = 10000;
    double val_snr_offset_db = 1.0;  // validation noise sits above the decoder SNR
    double init_out_scale = 0.0;     // 0: networks start as the zero function

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (batch < 1 || minibatch < 1 || batch % minibatch != 0)
            throw ConfigError("minibatch must divide batch");
        if (dec_steps_per_epoch < 0 || enc_steps_per_epoch < 0)
            throw ConfigError("step counts must be non-negative");
        if (!(eta_max_new > 0.0) || !(eta_max_pretrained > 0.0)) throw ConfigError("eta_max must be positive");
        if (!(dropout >= 0.0) || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
        if (enc_hidden < 1 || dec_hidden < 1) throw ConfigError("hidden widths must be >= 1");
        if (val_messages < 1) throw ConfigError("val_messages must be >= 1");
    }
};

inline std::vector<int> unfreeze_schedule(int constituents, int epochs) {
    if (constituents < 1) throw std::invalid_argument("unfreeze_schedule: need K >= 1");
    if (epochs < constituents + 1) throw std::invalid_argument("unfreeze_schedule: need T >= K + 1");
    std::vector<int> schedule(static_cast<std::size_t>(constituents));
    for (int j = 1; j <= constituents; ++j)
        schedule[static_cast<std::size_t>(j - 1)] =
            static_cast<int>((static_cast<std::int64_t>(j) * epochs) / (constituents + 1));
    return schedule;
}

enum class ComponentStatus { Frozen, New, UnfrozenPretrained };

struct SchedulePair {
    LrSchedule fresh;       // eta_max for newly initialized components
    LrSchedule pretrained;  // eta_max for unfrozen pre-trained components
};

inline double component_lr(ComponentStatus status, std::int64_t step, const SchedulePair& pair) {
    switch (status) {
        case ComponentStatus::Frozen: return 0.0;
        case ComponentStatus::New: return lr_at(pair.fresh, step);
        case ComponentStatus::UnfrozenPretrained: return lr_at(pair.pretrained, step);
    }
    throw std::invalid_argument("component_lr: bad status");
}

// ---------------------------------------------------------------------------
// Constituent mapping

struct ConstituentSpec {
    CodeParams params;
    std::string checkpoint_id;          // file path or label
    std::optional<std::string> anchor;  // explicit anchor; chosen greedily if absent
};

namespace detail {

inline constexpr std::uint64_t kSaltInit = 0x01;
inline constexpr std::uint64_t kSaltMessages = 0x02;
inline constexpr std::uint64_t kSaltNoise = 0x03;
inline constexpr std::uint64_t kSaltDropout = 0x04;
inline constexpr std::uint64_t kSaltValidation = 0x05;
inline constexpr std::uint64_t kSaltProbe = 0x06;

inline bool paths_overlap(const std::string& a, const std::string& b) {
    return a.size() <= b.size() ? b.compare(0, a.size(), a) == 0 : a.compare(0, b.size(), b) == 0;
}

}  // namespace detail

// Transfer every source network into the subtree at anchor_path, bit for
// bit, and mark the transferred keys frozen. Returns the transferred keys.
inline FrozenSet map_constituent(NeuralCodec& target, const Checkpoint& source,
                                 const std::string& anchor_path) {
    if (source.enc_hidden != target.enc_hidden || source.dec_hidden != target.dec_hidden)
        throw CheckpointError("map_constituent: hidden widths do not match the target");
    int anchor_idx = -1;
    try {
        anchor_idx = target.tree.index_of(anchor_path);
    } catch (const std::invalid_argument&) {
        throw ConflictError("map_constituent: no node at anchor '" + anchor_path + "'");
    }
    const CodeParams anchor_params = target.tree.at(anchor_idx).params;
    if (anchor_params.m != source.m || anchor_params.r != source.r)
        throw ConflictError("map_constituent: subtree at '" + anchor_path + "' is RM(" +
                            std::to_string(anchor_params.m) + "," + std::to_string(anchor_params.r) +
                            "), source is RM(" + std::to_string(source.m) + "," +
                            std::to_string(source.r) + ")");

    FrozenSet transferred;
    for (const auto& entry : source.entries) {
        const std::string path = anchor_path + entry.path;
        const int idx = target.tree.index_of(path);
        Mlp& dst = target.net_at(idx, entry.role);
        if (dst.in_dim != entry.net.in_dim || dst.hidden != entry.net.hidden ||
            dst.out_dim != entry.net.out_dim)
            throw CheckpointError("map_constituent: network shape mismatch at '" + path + "'");
        const double dropout = dst.dropout_rate;
        const bool train_mode = dst.train_mode;
        dst = entry.net;
        dst.dropout_rate = dropout;
        dst.train_mode = train_mode;
        transferred.insert({path, entry.role});
    }
    for (const auto& key : transferred) {
        target.frozen.insert(key);
        target.transferred.insert(key);
    }
    return transferred;
}

// Pick one anchor per constituent: the first preorder subtree with matching
// parameters that does not overlap an already-chosen anchor. Explicit
// anchors are honored after validation.
inline std::vector<std::string> choose_anchors(const CodeTree& tree,
                                               const std::vector<ConstituentSpec>& specs) {
    std::vector<std::string> chosen;
    for (const auto& spec : specs) {
        std::optional<std::string> pick;
        if (spec.anchor) {
            int idx = -1;
            try {
                idx = tree.index_of(*spec.anchor);
            } catch (const std::invalid_argument&) {
                throw ConflictError("anchor '" + *spec.anchor + "' is not a node of the target tree");
            }
            if (!(tree.at(idx).params == spec.params))
                throw ConflictError("anchor '" + *spec.anchor + "' does not carry RM(" +
                                    std::to_string(spec.params.m) + "," +
                                    std::to_string(spec.params.r) + ")");
            pick = *spec.anchor;
        } else {
            for (const auto& node : tree.nodes) {
                if (!(node.params == spec.params)) continue;
                bool overlaps = false;
                for (const auto& prev : chosen) overlaps |= detail::paths_overlap(prev, node.path);
                if (!overlaps) {
                    pick = node.path;
                    break;
                }
            }
            if (!pick)
                throw ConflictError("no non-overlapping subtree for constituent RM(" +
                                    std::to_string(spec.params.m) + "," +
                                    std::to_string(spec.params.r) + ")");
        }
        for (const auto& prev : chosen)
            if (detail::paths_overlap(prev, *pick))
                throw ConflictError("anchors '" + prev + "' and '" + *pick + "' overlap");
        chosen.push_back(*pick);
    }
    return chosen;
}

// ---------------------------------------------------------------------------
// Training loop

struct EpochMetrics {
    int epoch = 0;
    double dec_loss = 0.0;
    double enc_loss = 0.0;
    double val_ber = 1.0;
};

struct TrainResult {
    Checkpoint best;
    std::vector<EpochMetrics> history;  // one row per trained epoch
    std::vector<double> val_history;    // index 0 is the untrained model
    double initial_probe_loss = 0.0;    // BCE of the untrained model on a fixed probe set
    double final_probe_loss = 0.0;      // BCE of the best model on the same probe set
    std::vector<int> unfreeze_epochs;   // empty when there are no constituents
};

// Called after each trained epoch with the live codec; lets callers audit
// mid-training state (e.g. that frozen parameters have not moved).
using EpochObserver = std::function<void(int epoch, const NeuralCodec&)>;

namespace detail {

struct ParamSnapshot {
    std::vector<NodeNets> nets;
    FrozenSet frozen;
};

inline ParamSnapshot snapshot_params(const NeuralCodec& codec) {
    return {codec.nets, codec.frozen};
}

inline void restore_params(NeuralCodec& codec, const ParamSnapshot& snap) {
    codec.nets = snap.nets;
    codec.frozen = snap.frozen;
}

inline Matrix random_bit_matrix(Eigen::Index rows, Eigen::Index cols, Philox& rng) {
    Matrix bits(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) bits(i, j) = static_cast<double>(rng.next_bit());
    return bits;
}

// Encode -> normalize -> noise -> LLR -> decode, one minibatch, eval mode.
inline Matrix decode_pipeline(const NeuralCodec& codec, const Matrix& msgs, double sigma,
                              Philox& noise_rng) {
    Matrix x = ko_encode_raw(codec, msgs);
    normalize_power(x);
    awgn_inplace(x, sigma, noise_rng);
    return ko_decode_hybrid(codec, llr_from_awgn(x, sigma));
}

inline double count_bit_errors(const Matrix& soft, const Matrix& msgs) {
    double errors = 0.0;
    for (Eigen::Index i = 0; i < soft.rows(); ++i)
        for (Eigen::Index j = 0; j < soft.cols(); ++j)
            errors += (soft(i, j) < 0.0 ? 1.0 : 0.0) != msgs(i, j) ? 1.0 : 0.0;
    return errors;
}

inline ComponentStatus component_status(const NeuralCodec& codec, const std::string& path, Role role) {
    const std::pair<std::string, Role> key{path, role};
    if (codec.frozen.count(key)) return ComponentStatus::Frozen;
    if (codec.transferred.count(key)) return ComponentStatus::UnfrozenPretrained;
    return ComponentStatus::New;
}

inline TrainResult run_training(NeuralCodec& codec, const TrainConfig& cfg,
                                const std::vector<FrozenSet>& constituent_groups,
                                const EpochObserver& observer = {}) {
    const int total_epochs = cfg.epochs;
    const int constituents = static_cast<int>(constituent_groups.size());
    const double rate = static_cast<double>(codec.k()) / static_cast<double>(codec.n());
    const double sigma_dec = snr_to_sigma(cfg.snr_dec_db, rate);
    const double sigma_enc = snr_to_sigma(cfg.snr_enc_db, rate);
    const double sigma_val = snr_to_sigma(cfg.snr_dec_db + cfg.val_snr_offset_db, rate);
    const int chunks = cfg.batch / cfg.minibatch;
    const Philox master(cfg.seed);

    TrainResult result;
    if (constituents > 0) result.unfreeze_epochs = unfreeze_schedule(constituents, total_epochs);

    const SchedulePair dec_schedules{
        {cfg.eta_max_new, std::max<std::int64_t>(1, std::int64_t{total_epochs} * cfg.dec_steps_per_epoch)},
        {cfg.eta_max_pretrained,
         std::max<std::int64_t>(1, std::int64_t{total_epochs} * cfg.dec_steps_per_epoch)}};
    const SchedulePair enc_schedules{
        {cfg.eta_max_new, std::max<std::int64_t>(1, std::int64_t{total_epochs} * cfg.enc_steps_per_epoch)},
        {cfg.eta_max_pretrained,
         std::max<std::int64_t>(1, std::int64_t{total_epochs} * cfg.enc_steps_per_epoch)}};

    std::map<std::pair<int, Role>, AdamState> adam;
    for (int idx : codec.tree.branch_nodes())
        for (Role role : kAllRoles) adam.emplace(std::pair{idx, role}, AdamState::zeros_like(codec.net_at(idx, role)));

    // Fixed validation and probe sets.
    const Eigen::Index k = static_cast<Eigen::Index>(codec.k());
    Philox val_msg_rng = master.derive(Philox::mix({kSaltValidation, 0}));
    const Matrix val_msgs = random_bit_matrix(cfg.val_messages, k, val_msg_rng);
    Philox probe_msg_rng = master.derive(Philox::mix({kSaltProbe, 0}));
    const Matrix probe_msgs = random_bit_matrix(cfg.batch, k, probe_msg_rng);

    auto chunked_eval = [&](const Matrix& msgs, double sigma, std::uint64_t noise_salt,
                            bool as_loss) -> double {
        set_train_mode(codec, false, false);
        double acc = 0.0;
        Eigen::Index done = 0;
        int chunk_index = 0;
        while (done < msgs.rows()) {
            const Eigen::Index take = std::min<Eigen::Index>(cfg.minibatch, msgs.rows() - done);
            const Matrix chunk = msgs.middleRows(done, take);
            Philox noise_rng = master.derive(Philox::mix({noise_salt, static_cast<std::uint64_t>(chunk_index)}));
            const Matrix soft = decode_pipeline(codec, chunk, sigma, noise_rng);
            acc += as_loss ? bce_loss(soft, chunk) * static_cast<double>(soft.size())
                           : count_bit_errors(soft, chunk);
            done += take;
            ++chunk_index;
        }
        return acc / (static_cast<double>(msgs.rows()) * static_cast<double>(k));
    };
    auto validation_ber = [&]() { return chunked_eval(val_msgs, sigma_val, Philox::mix({kSaltValidation, 1}), false); };
    auto probe_loss = [&]() { return chunked_eval(probe_msgs, sigma_dec, Philox::mix({kSaltProbe, 1}), true); };

    result.initial_probe_loss = probe_loss();
    result.val_history.push_back(validation_ber());
    ParamSnapshot best_snapshot = snapshot_params(codec);
    double best_ber = result.val_history[0];
    std::uint32_t best_epoch = 0;

    // One alternating phase: dec trains DecLeft/DecRight, enc trains Enc.
    auto run_phase = [&](int epoch, bool encoder_phase, int steps, double sigma,
                         const SchedulePair& schedules, std::int64_t& step_counter) -> double {
        if (steps == 0) return 0.0;
        set_train_mode(codec, encoder_phase, !encoder_phase);
        const std::uint64_t phase_id = encoder_phase ? 1 : 0;
        double loss_sum = 0.0;
        for (int step = 0; step < steps; ++step) {
            CodecGrads grads = CodecGrads::zeros_like(codec);
            double step_loss = 0.0;
            for (int chunk = 0; chunk < chunks; ++chunk) {
                const std::uint64_t ids[4] = {static_cast<std::uint64_t>(epoch), phase_id,
                                              static_cast<std::uint64_t>(step),
                                              static_cast<std::uint64_t>(chunk)};
                Philox msg_rng = master.derive(Philox::mix({kSaltMessages, ids[0], ids[1], ids[2], ids[3]}));
                Philox noise_rng = master.derive(Philox::mix({kSaltNoise, ids[0], ids[1], ids[2], ids[3]}));
                Philox drop_rng = master.derive(Philox::mix({kSaltDropout, ids[0], ids[1], ids[2], ids[3]}));
                const Matrix msgs = random_bit_matrix(cfg.minibatch, k, msg_rng);

                EncCache enc_cache;
                Matrix x = ko_encode_raw(codec, msgs, encoder_phase ? &enc_cache : nullptr,
                                         encoder_phase ? &drop_rng : nullptr);
                const double scale = normalize_power(x);
                Matrix clean;
                if (encoder_phase) clean = x;  // normalized word, pre-noise
                awgn_inplace(x, sigma, noise_rng);
                const Matrix llr = llr_from_awgn(x, sigma);
                DecCache dec_cache;
                const Matrix soft =
                    ko_decode_hybrid(codec, llr, &dec_cache, encoder_phase ? nullptr : &drop_rng);

                step_loss += bce_loss(soft, msgs) / static_cast<double>(chunks);
                const Matrix d_soft =
                    bce_grad(soft, msgs, static_cast<double>(cfg.batch) * static_cast<double>(k));
                const Matrix d_llr = ko_decode_backward(codec, dec_cache, d_soft, grads);
                if (encoder_phase) {
                    // Chain back through the channel and normalization.
                    const Matrix d_y = (2.0 / (sigma * sigma)) * d_llr;
                    const Matrix d_x = normalize_power_backward(clean, scale, d_y);
                    ko_encode_backward(codec, enc_cache, d_x, grads);
                }
            }
            for (int idx : codec.tree.branch_nodes()) {
                const std::string& path = codec.tree.at(idx).path;
                for (Role role : kAllRoles) {
                    const bool enc_role = role == Role::Enc;
                    if (enc_role != encoder_phase) continue;
                    const ComponentStatus status = component_status(codec, path, role);
                    if (status == ComponentStatus::Frozen) continue;  // bit-identical by skipping
                    const double lr = component_lr(status, step_counter, schedules);
                    adam_step(codec.net_at(idx, role), adam.at({idx, role}), grads.at(idx, role), lr);
                }
            }
            ++step_counter;
            loss_sum += step_loss;
        }
        return loss_sum / static_cast<double>(steps);
    };

    std::int64_t dec_step_counter = 0;
    std::int64_t enc_step_counter = 0;
    for (int epoch = 1; epoch <= total_epochs; ++epoch) {
        for (int j = 0; j < constituents; ++j)
            if (result.unfreeze_epochs[static_cast<std::size_t>(j)] == epoch)
                for (const auto& key : constituent_groups[static_cast<std::size_t>(j)])
                    codec.frozen.erase(key);

        EpochMetrics metrics;
        metrics.epoch = epoch;
        metrics.dec_loss =
            run_phase(epoch, false, cfg.dec_steps_per_epoch, sigma_dec, dec_schedules, dec_step_counter);
        metrics.enc_loss =
            run_phase(epoch, true, cfg.enc_steps_per_epoch, sigma_enc, enc_schedules, enc_step_counter);
        metrics.val_ber = validation_ber();
        result.val_history.push_back(metrics.val_ber);
        result.history.push_back(metrics);

        if (metrics.val_ber < best_ber) {
            best_ber = metrics.val_ber;
            best_epoch = static_cast<std::uint32_t>(epoch);
            best_snapshot = snapshot_params(codec);
        }
        if (observer) observer(epoch, codec);
    }

    restore_params(codec, best_snapshot);
    set_train_mode(codec, false, false);
    result.final_probe_loss = probe_loss();

    result.best = checkpoint_from_codec(codec);
    result.best.best_epoch = best_epoch;
    result.best.best_val_ber = best_ber;
    result.best.seed = cfg.seed;
    result.best.epochs_trained = static_cast<std::uint32_t>(total_epochs);
    result.best.val_history = result.val_history;
    return result;
}

}  // namespace detail

struct AssembledCodec {
    NeuralCodec codec;
    std::vector<std::string> anchors;
    std::vector<FrozenSet> constituent_keys;  // one group per constituent, unfreeze order
};

// Phase 2: fresh codec, random init, constituents mapped and frozen.
inline AssembledCodec assemble_hiko(int m, int r, const std::vector<Checkpoint>& sources,
                                    const std::vector<ConstituentSpec>& specs, const TrainConfig& cfg) {
    if (sources.size() != specs.size())
        throw std::invalid_argument("assemble_hiko: sources and specs must pair up");
    AssembledCodec out;
    Philox init_rng = Philox(cfg.seed).derive(Philox::mix({detail::kSaltInit}));
    out.codec =
        make_codec(m, r, cfg.enc_hidden, cfg.dec_hidden, cfg.dropout, init_rng, cfg.init_out_scale);
    out.anchors = choose_anchors(out.codec.tree, specs);
    for (std::size_t j = 0; j < sources.size(); ++j) {
        if (sources[j].m != specs[j].params.m || sources[j].r != specs[j].params.r)
            throw CheckpointError("constituent checkpoint '" + specs[j].checkpoint_id + "' is RM(" +
                                  std::to_string(sources[j].m) + "," + std::to_string(sources[j].r) +
                                  "), declared RM(" + std::to_string(specs[j].params.m) + "," +
                                  std::to_string(specs[j].params.r) + ")");
        out.constituent_keys.push_back(map_constituent(out.codec, sources[j], out.anchors[j]));
    }
    return out;
}

// Phase 1: train one constituent code from random initialization.
inline TrainResult train_constituent(int m, int r, const TrainConfig& cfg) {
    cfg.validate();
    Philox init_rng = Philox(cfg.seed).derive(Philox::mix({detail::kSaltInit}));
    NeuralCodec codec =
        make_codec(m, r, cfg.enc_hidden, cfg.dec_hidden, cfg.dropout, init_rng, cfg.init_out_scale);
    return detail::run_training(codec, cfg, {});
}

// Phase 3: progressive unfreezing over an assembled codec. The codec is left
// holding the best model.
inline TrainResult train_hiko(NeuralCodec& codec, const TrainConfig& cfg,
                              const std::vector<FrozenSet>& constituent_keys,
                              const EpochObserver& observer = {}) {
    cfg.validate();
    return detail::run_training(codec, cfg, constituent_keys, observer);
}

}  // namespace hiko
