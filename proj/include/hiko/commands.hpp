// Command implementations behind the CLI: config parsing with strict key
// checking, the five run modes, and the CSV/JSON artifact writers. The CLI
// binary is a thin argv wrapper over these.
#pragma once

#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hiko/checkpoint.hpp"
#include "hiko/eval.hpp"
#include "hiko/io.hpp"
#include "hiko/training.hpp"

namespace hiko {

using nlohmann::json;

namespace cfg {

inline json parse_config(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
}

inline void require_keys(const json& doc, std::initializer_list<const char*> allowed,
                         const std::string& scope = "") {
    if (!doc.is_object()) throw ConfigError("config" + scope + " must be a JSON object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) known |= it.key() == key;
        if (!known) throw ConfigError("unknown key '" + it.key() + "'" + scope);
    }
}

template <typename T>
T required(const json& doc, const char* key) {
    if (!doc.contains(key)) throw ConfigError(std::string("missing required key '") + key + "'");
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value for key '") + key + "'");
    }
}

template <typename T>
T value_or(const json& doc, const char* key, T fallback) {
    if (!doc.contains(key)) return fallback;
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value for key '") + key + "'");
    }
}

}  // namespace cfg

// --seed / --workers from the command line take precedence over the config.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
};

namespace detail {

inline TrainConfig parse_train_config(const json& doc, const CliOverrides& overrides) {
    TrainConfig cfg;
    cfg.epochs = cfg::value_or(doc, "epochs", cfg.epochs);
    cfg.batch = cfg::value_or(doc, "batch", cfg.batch);
    cfg.minibatch = cfg::value_or(doc, "minibatch", cfg.minibatch);
    cfg.snr_enc_db = cfg::value_or(doc, "snr_enc_db", cfg.snr_enc_db);
    cfg.snr_dec_db = cfg::value_or(doc, "snr_dec_db", cfg.snr_dec_db);
    cfg.dec_steps_per_epoch = cfg::value_or(doc, "dec_steps_per_epoch", cfg.dec_steps_per_epoch);
    cfg.enc_steps_per_epoch = cfg::value_or(doc, "enc_steps_per_epoch", cfg.enc_steps_per_epoch);
    cfg.eta_max_new = cfg::value_or(doc, "eta_max_new", cfg.eta_max_new);
    cfg.eta_max_pretrained = cfg::value_or(doc, "eta_max_pretrained", cfg.eta_max_pretrained);
    cfg.enc_hidden = cfg::value_or(doc, "enc_hidden", cfg.enc_hidden);
    cfg.dec_hidden = cfg::value_or(doc, "dec_hidden", cfg.dec_hidden);
    cfg.dropout = cfg::value_or(doc, "dropout", cfg.dropout);
    cfg.val_messages = cfg::value_or(doc, "val_messages", cfg.val_messages);
    cfg.val_snr_offset_db = cfg::value_or(doc, "val_snr_offset_db", cfg.val_snr_offset_db);
    cfg.init_out_scale = cfg::value_or(doc, "init_out_scale", cfg.init_out_scale);
    if (overrides.seed)
        cfg.seed = *overrides.seed;
    else
        cfg.seed = cfg::required<std::uint64_t>(doc, "seed");
    cfg.validate();
    return cfg;
}

inline std::string metrics_csv(const std::vector<EpochMetrics>& history) {
    std::string out = "epoch,dec_loss,enc_loss,val_ber\n";
    for (const auto& row : history) {
        out += std::to_string(row.epoch);
        out += ',' + io::format_double(row.dec_loss);
        out += ',' + io::format_double(row.enc_loss);
        out += ',' + io::format_double(row.val_ber);
        out += '\n';
    }
    return out;
}

inline Checkpoint load_constituent(const std::string& path) {
    try {
        return load_checkpoint(path);
    } catch (const IoError& e) {
        throw CheckpointError(e.what());  // missing/unreadable constituent is a checkpoint failure
    }
}

}  // namespace detail

inline std::string ber_points_csv(const std::vector<BerPoint>& points) {
    std::string out = "snr_db,bits,bit_errors,blocks,block_errors,ber,bler\n";
    for (const auto& p : points) {
        out += io::format_double(p.snr_db);
        out += ',' + std::to_string(p.bits_tested);
        out += ',' + std::to_string(p.bit_errors);
        out += ',' + std::to_string(p.blocks_tested);
        out += ',' + std::to_string(p.block_errors);
        out += ',' + io::format_double(p.ber);
        out += ',' + io::format_double(p.bler);
        out += '\n';
    }
    return out;
}

inline std::string ber_points_json(const std::vector<BerPoint>& points) {
    json doc = json::array();
    for (const auto& p : points)
        doc.push_back({{"snr_db", p.snr_db},
                       {"bits_tested", p.bits_tested},
                       {"bit_errors", p.bit_errors},
                       {"blocks_tested", p.blocks_tested},
                       {"block_errors", p.block_errors},
                       {"ber", p.ber},
                       {"bler", p.bler}});
    return doc.dump(2) + "\n";
}

inline std::string histogram_csv(const DistanceHistogram& hist) {
    std::string out = "bin_left,bin_right,count\n";
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
        out += io::format_double(hist.bin_edges[b]);
        out += ',' + io::format_double(hist.bin_edges[b + 1]);
        out += ',' + std::to_string(hist.counts[b]);
        out += '\n';
    }
    return out;
}

inline std::string histogram_json(const DistanceHistogram& hist) {
    json doc = {{"n_pairs", hist.n_pairs}, {"mean", hist.mean},       {"std", hist.std_dev},
                {"min", hist.min},         {"max", hist.max},         {"bin_edges", hist.bin_edges},
                {"counts", hist.counts}};
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// train-constituent

inline int run_train_constituent(const json& doc, const std::filesystem::path& out_dir,
                                 const CliOverrides& overrides = {}) {
    cfg::require_keys(doc, {"m", "r", "epochs", "batch", "minibatch", "snr_enc_db", "snr_dec_db",
                            "dec_steps_per_epoch", "enc_steps_per_epoch", "eta_max_new",
                            "eta_max_pretrained", "seed", "enc_hidden", "dec_hidden", "dropout",
                            "val_messages", "val_snr_offset_db", "init_out_scale", "text_checkpoint"});
    const int m = cfg::required<int>(doc, "m");
    const int r = cfg::required<int>(doc, "r");
    const TrainConfig cfg = detail::parse_train_config(doc, overrides);
    code_params(m, r);  // domain check before any work

    const TrainResult result = train_constituent(m, r, cfg);
    std::filesystem::create_directories(out_dir);
    save_checkpoint(result.best, out_dir / "checkpoint.hiko");
    io::atomic_write_file(out_dir / "metrics.csv", detail::metrics_csv(result.history));
    if (cfg::value_or(doc, "text_checkpoint", false))
        io::atomic_write_file(out_dir / "checkpoint.json", checkpoint_to_json(result.best));
    std::cout << "trained KO(" << m << "," << r << "): best epoch " << result.best.best_epoch
              << ", validation BER " << result.best.best_val_ber << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train-hiko

inline int run_train_hiko(const json& doc, const std::filesystem::path& out_dir,
                          const CliOverrides& overrides = {}) {
    cfg::require_keys(doc, {"m", "r", "constituents", "epochs", "batch", "minibatch", "snr_enc_db",
                            "snr_dec_db", "dec_steps_per_epoch", "enc_steps_per_epoch", "eta_max_new",
                            "eta_max_pretrained", "seed", "enc_hidden", "dec_hidden", "dropout",
                            "val_messages", "val_snr_offset_db", "init_out_scale", "text_checkpoint"});
    const int m = cfg::required<int>(doc, "m");
    const int r = cfg::required<int>(doc, "r");
    const TrainConfig cfg = detail::parse_train_config(doc, overrides);
    code_params(m, r);

    if (!doc.contains("constituents") || !doc.at("constituents").is_array())
        throw ConfigError("missing required key 'constituents' (array)");
    std::vector<ConstituentSpec> specs;
    std::vector<Checkpoint> sources;
    for (const auto& entry : doc.at("constituents")) {
        cfg::require_keys(entry, {"m", "r", "checkpoint", "anchor"}, " in constituents[]");
        ConstituentSpec spec;
        spec.params = code_params(cfg::required<int>(entry, "m"), cfg::required<int>(entry, "r"));
        spec.checkpoint_id = cfg::required<std::string>(entry, "checkpoint");
        if (entry.contains("anchor")) spec.anchor = cfg::required<std::string>(entry, "anchor");
        sources.push_back(detail::load_constituent(spec.checkpoint_id));
        specs.push_back(std::move(spec));
    }

    AssembledCodec assembled = assemble_hiko(m, r, sources, specs, cfg);
    const std::vector<int> unfreeze =
        specs.empty() ? std::vector<int>{} : unfreeze_schedule(static_cast<int>(specs.size()), cfg.epochs);
    const TrainResult result = train_hiko(assembled.codec, cfg, assembled.constituent_keys);

    std::filesystem::create_directories(out_dir);
    save_checkpoint(result.best, out_dir / "checkpoint.hiko");
    io::atomic_write_file(out_dir / "metrics.csv", detail::metrics_csv(result.history));
    if (cfg::value_or(doc, "text_checkpoint", false))
        io::atomic_write_file(out_dir / "checkpoint.json", checkpoint_to_json(result.best));

    std::string audit;
    for (std::size_t j = 0; j < specs.size(); ++j) {
        audit += "constituent " + std::to_string(j) + ": RM(" + std::to_string(specs[j].params.m) +
                 "," + std::to_string(specs[j].params.r) + ") checkpoint=" + specs[j].checkpoint_id +
                 " anchor=\"" + assembled.anchors[j] + "\"\n";
    }
    audit += "unfreeze epochs:";
    for (int epoch : unfreeze) audit += ' ' + std::to_string(epoch);
    audit += '\n';
    io::atomic_write_file(out_dir / "audit.log", audit);
    std::cout << audit;
    std::cout << "trained HiKO(" << m << "," << r << "): best epoch " << result.best.best_epoch
              << ", validation BER " << result.best.best_val_ber << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval-ber

inline int run_eval_ber(const json& doc, const std::filesystem::path& out_dir,
                        const CliOverrides& overrides = {}) {
    cfg::require_keys(doc, {"codec", "m", "r", "snrs_db", "min_bits", "min_errors", "convention",
                            "seed", "workers"});
    const std::string codec_spec = cfg::required<std::string>(doc, "codec");
    const auto snrs = cfg::required<std::vector<double>>(doc, "snrs_db");
    const auto min_bits = cfg::value_or<std::uint64_t>(doc, "min_bits", 1000000);
    const auto min_errors = cfg::value_or<std::uint64_t>(doc, "min_errors", 100);
    const std::string convention_name = cfg::value_or<std::string>(doc, "convention", "ebn0");
    if (convention_name != "ebn0" && convention_name != "esn0")
        throw ConfigError("bad value for key 'convention' (want \"ebn0\" or \"esn0\")");
    const SnrConvention conv =
        convention_name == "ebn0" ? SnrConvention::EbN0 : SnrConvention::EsN0;
    const std::uint64_t seed =
        overrides.seed ? *overrides.seed : cfg::required<std::uint64_t>(doc, "seed");
    int workers = cfg::value_or<int>(doc, "workers", 0);
    if (overrides.workers) workers = *overrides.workers;
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    if (min_bits < 10000) throw ConfigError("min_bits must be at least 10^4");
    if (snrs.empty()) throw ConfigError("snrs_db must be non-empty");

    CodecOps ops;
    if (codec_spec == "rm") {
        ops = rm_codec_ops(cfg::required<int>(doc, "m"), cfg::required<int>(doc, "r"));
    } else {
        const Checkpoint ckpt = detail::load_constituent(codec_spec);
        if (doc.contains("m") && cfg::required<int>(doc, "m") != ckpt.m)
            throw CheckpointError("checkpoint is RM(" + std::to_string(ckpt.m) + ",...), config says m=" +
                                  std::to_string(cfg::required<int>(doc, "m")));
        if (doc.contains("r") && cfg::required<int>(doc, "r") != ckpt.r)
            throw CheckpointError("checkpoint order mismatch");
        ops = hybrid_codec_ops(codec_from_checkpoint(ckpt));
    }

    const std::vector<BerPoint> points = ber_curve(ops, snrs, min_bits, min_errors, seed, conv, workers);
    std::filesystem::create_directories(out_dir);
    io::atomic_write_file(out_dir / "ber.csv", ber_points_csv(points));
    io::atomic_write_file(out_dir / "ber.json", ber_points_json(points));
    for (const auto& p : points)
        std::cout << "snr " << p.snr_db << " dB: ber " << p.ber << " (" << p.bit_errors << "/"
                  << p.bits_tested << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval-distance

inline int run_eval_distance(const json& doc, const std::filesystem::path& out_dir,
                             const CliOverrides& overrides = {}) {
    cfg::require_keys(doc, {"source", "quantize", "m", "r", "n", "count", "n_pairs", "bins", "seed"});
    const std::string source = cfg::required<std::string>(doc, "source");
    const auto n_pairs = cfg::value_or<std::size_t>(doc, "n_pairs", 10000);
    const int bins = cfg::value_or<int>(doc, "bins", 64);
    const std::uint64_t seed =
        overrides.seed ? *overrides.seed : cfg::required<std::uint64_t>(doc, "seed");
    if (n_pairs < 1000) throw ConfigError("n_pairs must be at least 10^3");

    Philox rng(seed, detail::kSaltDistance);
    PairDistanceSampler sampler;
    if (source == "rm") {
        sampler = codec_distance_sampler(rm_codec_ops(cfg::required<int>(doc, "m"),
                                                      cfg::required<int>(doc, "r")));
    } else if (source == "gaussian") {
        const auto n = cfg::required<std::size_t>(doc, "n");
        const auto count = cfg::value_or<std::size_t>(doc, "count", 1024);
        Philox book_rng = rng.derive(1);
        sampler = codebook_distance_sampler(gaussian_codebook(n, count, book_rng));
    } else {
        const Checkpoint ckpt = detail::load_constituent(source);
        CodecOps ops = hybrid_codec_ops(codec_from_checkpoint(ckpt));
        if (cfg::value_or(doc, "quantize", false)) ops = quantized_ops(ops);
        sampler = codec_distance_sampler(std::move(ops));
    }

    const DistanceHistogram hist = pairwise_distances(sampler, n_pairs, rng.derive(2), bins);
    std::filesystem::create_directories(out_dir);
    io::atomic_write_file(out_dir / "distance.csv", histogram_csv(hist));
    io::atomic_write_file(out_dir / "distance.json", histogram_json(hist));
    std::cout << "pairs " << hist.n_pairs << ": mean " << hist.mean << ", std " << hist.std_dev
              << ", range [" << hist.min << ", " << hist.max << "]\n";
    return 0;
}

// ---------------------------------------------------------------------------
// param-count

inline int run_param_count(const json& doc, const std::filesystem::path& out_dir,
                           const CliOverrides& = {}) {
    cfg::require_keys(doc, {"checkpoint", "m", "r", "enc_hidden", "dec_hidden"});
    int m = 0, r = 0, enc_hidden = 32, dec_hidden = 120;
    if (doc.contains("checkpoint")) {
        const Checkpoint ckpt = detail::load_constituent(cfg::required<std::string>(doc, "checkpoint"));
        m = ckpt.m;
        r = ckpt.r;
        enc_hidden = ckpt.enc_hidden;
        dec_hidden = ckpt.dec_hidden;
    } else {
        m = cfg::required<int>(doc, "m");
        r = cfg::required<int>(doc, "r");
        enc_hidden = cfg::value_or(doc, "enc_hidden", enc_hidden);
        dec_hidden = cfg::value_or(doc, "dec_hidden", dec_hidden);
    }

    const CodeTree tree = build_plotkin_tree(m, r);
    std::string csv = "path,role,in_dim,hidden,out_dim,params\n";
    std::size_t total = 0;
    for (int idx : tree.branch_nodes()) {
        const auto l = static_cast<std::size_t>(tree.at(idx).params.n / 2);
        const std::string& path = tree.at(idx).path;
        const struct {
            const char* role;
            std::size_t in, hidden, out;
            bool alpha;
        } rows[3] = {{"enc", 2 * l, static_cast<std::size_t>(enc_hidden), l, true},
                     {"dec_left", 2 * l, static_cast<std::size_t>(dec_hidden), l, false},
                     {"dec_right", 4 * l, static_cast<std::size_t>(dec_hidden), l, false}};
        for (const auto& row : rows) {
            const std::size_t count = param_count_general(row.in, row.hidden, row.out, row.alpha);
            total += count;
            csv += (path.empty() ? std::string("(root)") : path) + ',' + row.role + ',' +
                   std::to_string(row.in) + ',' + std::to_string(row.hidden) + ',' +
                   std::to_string(row.out) + ',' + std::to_string(count) + '\n';
            std::cout << "node '" << path << "' " << row.role << ": " << count << " parameters\n";
        }
    }
    std::cout << "total: " << total << " parameters\n";
    std::filesystem::create_directories(out_dir);
    io::atomic_write_file(out_dir / "params.csv", csv);
    return 0;
}

// ---------------------------------------------------------------------------
// Dispatcher used by the CLI binary; maps typed failures onto the exit-code
// contract: 0 ok, 2 config, 3 structural conflict, 4 checkpoint/IO.

inline int dispatch_command(const std::string& command, const std::filesystem::path& config_path,
                            const std::filesystem::path& out_dir, const CliOverrides& overrides) {
    try {
        json doc;
        try {
            doc = cfg::parse_config(io::read_file(config_path));
        } catch (const IoError& e) {
            throw ConfigError(e.what());  // unreadable config file
        }
        if (command == "train-constituent") return run_train_constituent(doc, out_dir, overrides);
        if (command == "train-hiko") return run_train_hiko(doc, out_dir, overrides);
        if (command == "eval-ber") return run_eval_ber(doc, out_dir, overrides);
        if (command == "eval-distance") return run_eval_distance(doc, out_dir, overrides);
        if (command == "param-count") return run_param_count(doc, out_dir, overrides);
        throw ConfigError("unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const ConflictError& e) {
        std::cerr << "error: conflict: " << e.what() << "\n";
        return 3;
    } catch (const CheckpointError& e) {
        std::cerr << "error: checkpoint: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace hiko
