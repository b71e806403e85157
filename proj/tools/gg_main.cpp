// Command-line pipeline: dataset synthesis, the three training stages, the
// two policy-search agents, the adaptation experiment, and a results table.
// Every command reads and writes one run directory and derives all
// randomness from master_seed, so re-running any command with the same
// config and seed reproduces its outputs byte-for-byte (the dataset
// manifest's timestamp is the single exception).

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gg/config.hpp"
#include "gg/dataset.hpp"

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr const char* kUsage = R"(usage: gg <command> [options] [key=value ...]

commands:
  gen-data             synthesize target + gripper datasets into the run dir
  train --stage STAGE  train one stage: ae1 (targets), ae2 (grippers),
                       ae3 (joint latents; needs ae1 + ae2 checkpoints)
  rl --agent AGENT     optimize one grasp: latent (compressed-code search,
                       needs all three checkpoints) or baseline (pose search)
  adapt                paired swap experiment over many seeds (needs all
                       three checkpoints)
  eval                 print the results table from whatever artifacts exist

options:
  --config PATH   flat key=value config file (later sources win: file,
                  then key=value args, then --seed/--out)
  --seed U64      override master_seed
  --out DIR       override out_dir (the run directory)

exit codes: 0 ok, 1 usage, 2 validation/runtime failure,
            3 non-convergence (rl/adapt only)
)";

struct CliArgs {
    std::string command;
    std::string stage;
    std::string agent;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::vector<std::string> overrides;
};

CliArgs parse_args(int argc, char** argv) {
    if (argc < 2) throw UsageError("a command is required");
    CliArgs a;
    a.command = argv[1];
    for (int i = 2; i < argc; ++i) {
        const std::string arg = argv[i];
        const auto next = [&](const char* what) {
            if (++i >= argc) throw UsageError(std::string(what) + " needs a value");
            return std::string(argv[i]);
        };
        if (arg == "--config") {
            a.config_path = next("--config");
        } else if (arg == "--seed") {
            const std::string raw = next("--seed");
            try {
                std::size_t used = 0;
                a.seed = std::stoull(raw, &used);
                if (used != raw.size()) throw std::invalid_argument(raw);
            } catch (const std::exception&) {
                throw UsageError("--seed needs an unsigned integer, got '" + raw + "'");
            }
        } else if (arg == "--out") {
            a.out_dir = next("--out");
        } else if (arg == "--stage") {
            a.stage = next("--stage");
        } else if (arg == "--agent") {
            a.agent = next("--agent");
        } else if (arg.rfind("--", 0) == 0) {
            throw UsageError("unknown flag '" + arg + "'");
        } else if (arg.find('=') != std::string::npos) {
            a.overrides.push_back(arg);
        } else {
            throw UsageError("unexpected argument '" + arg + "'");
        }
    }
    if (a.command == "train") {
        if (a.stage != "ae1" && a.stage != "ae2" && a.stage != "ae3")
            throw UsageError("train needs --stage ae1|ae2|ae3");
    } else if (!a.stage.empty()) {
        throw UsageError("--stage only applies to the train command");
    }
    if (a.command == "rl") {
        if (a.agent != "latent" && a.agent != "baseline") throw UsageError("rl needs --agent latent|baseline");
    } else if (!a.agent.empty()) {
        throw UsageError("--agent only applies to the rl command");
    }
    return a;
}

gg::ExperimentConfig build_config(const CliArgs& a) {
    gg::ExperimentConfig cfg;
    if (!a.config_path.empty()) gg::apply_config_file(cfg, a.config_path);
    for (const auto& ov : a.overrides) gg::apply_config_override(cfg, ov);
    if (a.seed) cfg.master_seed = *a.seed;
    if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
    gg::validate_config(cfg);
    return cfg;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

// The effective merged config, persisted next to each command's outputs.
void persist_config(const gg::ExperimentConfig& cfg, const std::string& command_tag) {
    write_text_file(cfg.out_dir + "/" + command_tag + "_config.txt", gg::serialize_config(cfg));
}

// --- minimal JSON emission (objects we also read back with a flat scan) ---

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

std::string jnum(double v) { return gg::config_detail::format_f64(v); }

class JsonObject {
public:
    JsonObject& field(const std::string& key, const std::string& raw_value) {
        if (!body_.empty()) body_ += ", ";
        body_ += "\"" + json_escape(key) + "\": " + raw_value;
        return *this;
    }
    JsonObject& num(const std::string& key, double v) { return field(key, jnum(v)); }
    JsonObject& integer(const std::string& key, std::int64_t v) { return field(key, std::to_string(v)); }
    JsonObject& uinteger(const std::string& key, std::uint64_t v) { return field(key, std::to_string(v)); }
    JsonObject& boolean(const std::string& key, bool v) { return field(key, v ? "true" : "false"); }
    JsonObject& str(const std::string& key, const std::string& v) {
        return field(key, "\"" + json_escape(v) + "\"");
    }
    std::string str() const { return "{" + body_ + "}"; }

private:
    std::string body_;
};

// Pulls one top-level numeric value out of JSON this tool itself emitted.
// Not a general parser: keys are matched textually, so callers must ask for
// keys that appear exactly once.
std::optional<double> scan_json_number(const std::string& text, const std::string& key) {
    const std::string needle = "\"" + key + "\":";
    const auto at = text.find(needle);
    if (at == std::string::npos) return std::nullopt;
    if (text.find(needle, at + 1) != std::string::npos)
        throw std::runtime_error("json key '" + key + "' is not unique");
    const char* start = text.c_str() + at + needle.size();
    char* end = nullptr;
    const double v = std::strtod(start, &end);
    if (end == start) return std::nullopt;
    return v;
}

std::optional<std::string> read_file_if_exists(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// --- artifact paths within the run directory ---

std::string targets_path(const gg::ExperimentConfig& c) { return c.out_dir + "/targets.ggds"; }
std::string grippers_path(const gg::ExperimentConfig& c) { return c.out_dir + "/grippers.ggds"; }
std::string checkpoint_path(const gg::ExperimentConfig& c, const std::string& stage) {
    return c.out_dir + "/" + stage + ".ggnn";
}

std::vector<gg::TargetSample> load_targets(const gg::ExperimentConfig& c) {
    const std::string path = targets_path(c);
    if (!fs::exists(path))
        throw std::invalid_argument("target dataset (targets.ggds) not found in '" + c.out_dir +
                                    "'; run 'gen-data' first");
    return gg::read_target_dataset(path);
}

std::vector<gg::GripperSample> load_grippers(const gg::ExperimentConfig& c) {
    const std::string path = grippers_path(c);
    if (!fs::exists(path))
        throw std::invalid_argument("gripper dataset (grippers.ggds) not found in '" + c.out_dir +
                                    "'; run 'gen-data' first");
    return gg::read_gripper_dataset(path);
}

gg::nn::Checkpoint load_stage_checkpoint(const gg::ExperimentConfig& c, const std::string& stage,
                                         const std::string& stage_name, const std::string& needed_by) {
    const std::string path = checkpoint_path(c, stage);
    if (!fs::exists(path))
        throw std::invalid_argument(needed_by + " needs the " + stage_name + " checkpoint (" + stage +
                                    ".ggnn); run 'train --stage " + stage + "' first");
    return gg::nn::Checkpoint::load(path);
}

const gg::TargetSample& pick_target(const std::vector<gg::TargetSample>& data, std::int64_t idx,
                                    const char* key) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= data.size())
        throw std::invalid_argument(std::string(key) + " index " + std::to_string(idx) +
                                    " is out of range (dataset has " + std::to_string(data.size()) +
                                    " targets)");
    return data[static_cast<std::size_t>(idx)];
}

const gg::GripperSample& pick_gripper(const std::vector<gg::GripperSample>& data, std::int64_t idx,
                                      const char* key) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= data.size())
        throw std::invalid_argument(std::string(key) + " index " + std::to_string(idx) +
                                    " is out of range (dataset has " + std::to_string(data.size()) +
                                    " grippers)");
    return data[static_cast<std::size_t>(idx)];
}

// --- commands ---

int cmd_gen_data(const gg::ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const auto targets = gg::generate_target_dataset(static_cast<std::size_t>(cfg.targets),
                                                     gg::derive_seed(cfg.master_seed, "dataset-targets"),
                                                     static_cast<int>(cfg.perturbs_per_base));
    const auto grippers = gg::generate_gripper_dataset(static_cast<std::size_t>(cfg.grippers),
                                                       gg::derive_seed(cfg.master_seed, "dataset-grippers"));
    gg::write_target_dataset(targets, targets_path(cfg));
    gg::write_gripper_dataset(grippers, grippers_path(cfg));

    JsonObject manifest;
    manifest.str("command", "gen-data")
        .integer("targets", static_cast<std::int64_t>(targets.size()))
        .integer("grippers", static_cast<std::int64_t>(grippers.size()))
        .uinteger("master_seed", cfg.master_seed)
        .integer("resolution", targets[0].grid.n)
        .str("target_file", "targets.ggds")
        .str("gripper_file", "grippers.ggds")
        .integer("created_unix", static_cast<std::int64_t>(std::time(nullptr)));
    write_text_file(cfg.out_dir + "/manifest.json", manifest.str() + "\n");
    persist_config(cfg, "gen_data");
    std::printf("gen-data: %zu targets, %zu grippers (%d^3) -> %s\n", targets.size(), grippers.size(),
                targets[0].grid.n, cfg.out_dir.c_str());
    return 0;
}

int finish_training_stage(const gg::ExperimentConfig& cfg, const std::string& stage, bool nan_aborted,
                          const std::string& headline) {
    persist_config(cfg, "train_" + stage);
    if (nan_aborted) {
        std::fprintf(stderr, "error: %s training diverged (loss went non-finite); lower %s_lr\n",
                     stage.c_str(), stage.c_str());
        return 2;
    }
    std::printf("%s\n", headline.c_str());
    return 0;
}

int cmd_train(const gg::ExperimentConfig& cfg, const std::string& stage) {
    fs::create_directories(cfg.out_dir);
    if (stage == "ae1") {
        const auto data = load_targets(cfg);
        const auto r = gg::train_ae1(data, gg::ae1_train_config(cfg), cfg.out_dir + "/ae1_metrics.csv");
        r.checkpoint.save(checkpoint_path(cfg, "ae1"));
        JsonObject s;
        s.str("stage", "ae1")
            .num("voxel_acc_pct", r.best_val_acc)
            .num("final_val_loss", r.final_val_loss)
            .num("prop_rel_err", r.final_prop_relerr)
            .integer("epochs_run", r.epochs_run)
            .boolean("nan_aborted", r.nan_aborted);
        write_text_file(cfg.out_dir + "/ae1_summary.json", s.str() + "\n");
        char line[160];
        std::snprintf(line, sizeof(line), "train ae1: voxel accuracy %.2f%% after %d epochs",
                      r.best_val_acc, r.epochs_run);
        return finish_training_stage(cfg, stage, r.nan_aborted, line);
    }
    if (stage == "ae2") {
        const auto data = load_grippers(cfg);
        const auto r = gg::train_ae2(data, gg::ae2_train_config(cfg), cfg.out_dir + "/ae2_metrics.csv");
        r.checkpoint.save(checkpoint_path(cfg, "ae2"));
        JsonObject s;
        s.str("stage", "ae2")
            .num("combined_acc_pct", r.best.combined)
            .num("geo_acc_pct", r.best.geo_acc)
            .num("pose_ok_rate_pct", r.best.pose_ok_rate)
            .num("pose_norm_err", r.best.mean_pose_norm_err)
            .num("pose_pos_err_voxels", r.best.mean_pos_err_voxels)
            .num("pose_quat_angle_deg", r.best.mean_quat_angle_deg)
            .integer("epochs_run", r.epochs_run)
            .boolean("nan_aborted", r.nan_aborted);
        write_text_file(cfg.out_dir + "/ae2_summary.json", s.str() + "\n");
        char line[160];
        std::snprintf(line, sizeof(line), "train ae2: combined accuracy %.2f%% after %d epochs",
                      r.best.combined, r.epochs_run);
        return finish_training_stage(cfg, stage, r.nan_aborted, line);
    }
    // ae3: encode the paired datasets through the frozen first two stages.
    const auto ck1 = load_stage_checkpoint(cfg, "ae1", "target-stage", "the joint stage");
    const auto ck2 = load_stage_checkpoint(cfg, "ae2", "gripper-stage", "the joint stage");
    const auto targets = load_targets(cfg);
    const auto grippers = load_grippers(cfg);
    gg::Ae1 enc1(ck1);
    gg::Ae2 enc2(ck2);
    const auto latents = gg::build_latent_dataset(targets, grippers, enc1, enc2);
    gg::write_latent_dataset(latents, cfg.out_dir + "/latents.ggds");
    const auto r = gg::train_ae3(latents, ck2, gg::ae3_train_config(cfg), cfg.out_dir + "/ae3_metrics.csv");
    r.checkpoint.save(checkpoint_path(cfg, "ae3"));
    JsonObject s;
    s.str("stage", "ae3")
        .num("latent_acc_pct", r.best_val_acc)
        .num("final_val_loss", r.final_val_loss)
        .num("round_trip_rel_err", r.final_rel_err)
        .integer("epochs_run", r.epochs_run)
        .boolean("nan_aborted", r.nan_aborted);
    write_text_file(cfg.out_dir + "/ae3_summary.json", s.str() + "\n");
    char line[160];
    std::snprintf(line, sizeof(line), "train ae3: latent-element accuracy %.2f%% after %d epochs",
                  r.best_val_acc, r.epochs_run);
    return finish_training_stage(cfg, stage, r.nan_aborted, line);
}

double tail_success_rate(const std::vector<char>& successes, int window) {
    if (successes.empty()) return 0.0;
    const std::size_t n = std::min<std::size_t>(successes.size(), static_cast<std::size_t>(window));
    double hits = 0.0;
    for (std::size_t i = successes.size() - n; i < successes.size(); ++i) hits += successes[i] ? 1.0 : 0.0;
    return hits / static_cast<double>(n);
}

int report_rl_run(const gg::ExperimentConfig& cfg, const std::string& tag, const gg::PowerRunResult& res) {
    JsonObject s;
    s.str("agent", tag)
        .integer("target_index", cfg.rl_target)
        .integer("gripper_index", cfg.rl_gripper)
        .integer("episodes_run", res.episodes_run)
        .integer("episodes_to_threshold", res.episodes_to_threshold)
        .boolean("converged", res.converged)
        .integer("updates_applied", res.updates_applied)
        .num("final_success_rate", tail_success_rate(res.successes, static_cast<int>(cfg.rl_success_window)));
    write_text_file(cfg.out_dir + "/rl_" + tag + "_summary.json", s.str() + "\n");
    persist_config(cfg, "rl_" + tag);
    if (!res.converged) {
        std::printf("rl %s: episode cap (%d) reached without filling the success window\n", tag.c_str(),
                    res.episodes_run);
        return 3;
    }
    std::printf("rl %s: success threshold after %d episodes (%d run)\n", tag.c_str(),
                res.episodes_to_threshold, res.episodes_run);
    return 0;
}

int cmd_rl(const gg::ExperimentConfig& cfg, const std::string& agent) {
    fs::create_directories(cfg.out_dir);
    const auto targets = load_targets(cfg);
    const auto grippers = load_grippers(cfg);
    const auto& target = pick_target(targets, cfg.rl_target, "rl_target");
    const auto& gripper = pick_gripper(grippers, cfg.rl_gripper, "rl_gripper");
    const gg::GraspRlConfig g = gg::grasp_rl_config(cfg);

    if (agent == "latent") {
        const auto ck1 = load_stage_checkpoint(cfg, "ae1", "target-stage", "the latent agent");
        const auto ck2 = load_stage_checkpoint(cfg, "ae2", "gripper-stage", "the latent agent");
        const auto ck3 = load_stage_checkpoint(cfg, "ae3", "joint-stage", "the latent agent");
        gg::LatentGraspAgent a(ck1, ck2, ck3, g);
        a.set_pair(target, gripper);
        const auto res = a.run(gg::derive_seed(cfg.master_seed, "rl-latent"),
                               cfg.out_dir + "/rl_latent_episodes.csv");
        return report_rl_run(cfg, "latent", res);
    }
    gg::BaselineGraspAgent a(gg::pose_spread(grippers), g);
    a.set_pair(target, gripper);
    const auto res = a.run(gg::derive_seed(cfg.master_seed, "rl-baseline"),
                           cfg.out_dir + "/rl_baseline_episodes.csv");
    return report_rl_run(cfg, "baseline", res);
}

int cmd_adapt(const gg::ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const auto ck1 = load_stage_checkpoint(cfg, "ae1", "target-stage", "the adaptation experiment");
    const auto ck2 = load_stage_checkpoint(cfg, "ae2", "gripper-stage", "the adaptation experiment");
    const auto ck3 = load_stage_checkpoint(cfg, "ae3", "joint-stage", "the adaptation experiment");
    const auto targets = load_targets(cfg);
    const auto grippers = load_grippers(cfg);
    const gg::PairRef before{pick_target(targets, cfg.adapt_before_target, "adapt_before_target"),
                             pick_gripper(grippers, cfg.adapt_before_gripper, "adapt_before_gripper")};
    const gg::PairRef after{pick_target(targets, cfg.adapt_after_target, "adapt_after_target"),
                            pick_gripper(grippers, cfg.adapt_after_gripper, "adapt_after_gripper")};

    gg::AdaptationConfig ac;
    ac.rl = gg::grasp_rl_config(cfg);
    ac.n_seeds = static_cast<int>(cfg.adapt_seeds);
    ac.master_seed = gg::derive_seed(cfg.master_seed, "adapt");
    const auto rep = gg::adaptation_experiment(before, after, ck1, ck2, ck3, gg::pose_spread(grippers), ac,
                                               cfg.out_dir + "/adapt_");

    std::string seeds_json;
    for (const auto& sa : rep.seeds) {
        JsonObject o;
        o.uinteger("seed", sa.seed)
            .integer("latent_before", sa.latent_before)
            .integer("latent_after", sa.latent_after)
            .integer("baseline_before", sa.baseline_before)
            .integer("baseline_after", sa.baseline_after)
            .boolean("latent_converged", sa.latent_converged)
            .boolean("baseline_converged", sa.baseline_converged)
            .num("improvement_pct", sa.improvement_pct);
        if (!seeds_json.empty()) seeds_json += ", ";
        seeds_json += o.str();
    }
    JsonObject rep_json;
    rep_json.field("seeds", "[" + seeds_json + "]")
        .integer("comparable_seeds", rep.comparable_seeds)
        .integer("latent_faster_count", rep.latent_faster_count)
        .num("median_improvement_pct", rep.median_improvement_pct);
    write_text_file(cfg.out_dir + "/adapt_report.json", rep_json.str() + "\n");
    persist_config(cfg, "adapt");

    std::printf("adapt: %d/%zu seeds comparable, latent faster on %d, median improvement %.1f%%\n",
                rep.comparable_seeds, rep.seeds.size(), rep.latent_faster_count,
                rep.median_improvement_pct);
    if (rep.comparable_seeds == 0) {
        std::fprintf(stderr, "adapt: no seed converged for both agents in both phases\n");
        return 3;
    }
    return 0;
}

int cmd_eval(const gg::ExperimentConfig& cfg) {
    struct Row {
        std::string metric;
        std::string value;
    };
    std::vector<Row> rows;
    const auto add_summary_metric = [&](const std::string& file, const std::string& key,
                                        const std::string& label) {
        const auto text = read_file_if_exists(cfg.out_dir + "/" + file);
        std::string shown = "n/a";
        if (text) {
            if (const auto v = scan_json_number(*text, key)) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.2f", *v);
                shown = buf;
            }
        }
        rows.push_back({label, shown});
    };
    add_summary_metric("ae1_summary.json", "voxel_acc_pct", "target voxel accuracy (%)");
    add_summary_metric("ae2_summary.json", "combined_acc_pct", "gripper combined accuracy (%)");
    add_summary_metric("ae3_summary.json", "latent_acc_pct", "joint latent-element accuracy (%)");

    const auto adapt_text = read_file_if_exists(cfg.out_dir + "/adapt_report.json");
    if (adapt_text) {
        const auto median = scan_json_number(*adapt_text, "median_improvement_pct");
        const auto faster = scan_json_number(*adapt_text, "latent_faster_count");
        const auto comparable = scan_json_number(*adapt_text, "comparable_seeds");
        char buf[48];
        if (median) {
            std::snprintf(buf, sizeof(buf), "%.2f", *median);
            rows.push_back({"adaptation median improvement (%)", buf});
        } else {
            rows.push_back({"adaptation median improvement (%)", "n/a"});
        }
        if (faster && comparable) {
            std::snprintf(buf, sizeof(buf), "%d/%d", static_cast<int>(*faster),
                          static_cast<int>(*comparable));
            rows.push_back({"latent faster (comparable seeds)", buf});
        }
    } else {
        rows.push_back({"adaptation median improvement (%)", "n/a"});
    }

    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.metric.size());
    std::string csv = "metric,value\n";
    for (const auto& r : rows) {
        std::printf("%-*s  %s\n", static_cast<int>(width), r.metric.c_str(), r.value.c_str());
        csv += "\"" + r.metric + "\"," + r.value + "\n";
    }
    fs::create_directories(cfg.out_dir);
    write_text_file(cfg.out_dir + "/eval.csv", csv);
    persist_config(cfg, "eval");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        if (argc >= 2) {
            const std::string first = argv[1];
            if (first == "--help" || first == "-h" || first == "help") {
                std::printf("%s", kUsage);
                return 0;
            }
        }
        const CliArgs args = parse_args(argc, argv);
        const gg::ExperimentConfig cfg = build_config(args);
        if (args.command == "gen-data") return cmd_gen_data(cfg);
        if (args.command == "train") return cmd_train(cfg, args.stage);
        if (args.command == "rl") return cmd_rl(cfg, args.agent);
        if (args.command == "adapt") return cmd_adapt(cfg);
        if (args.command == "eval") return cmd_eval(cfg);
        throw UsageError("unknown command '" + args.command + "'");
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n\n%s", e.what(), kUsage);
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
