#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rss_sentinel/io.hpp"
#include "rss_sentinel/pipeline.hpp"

namespace fs = std::filesystem;
using namespace rss_sentinel;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

struct ConfigOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool fusion_bypass = false;
};

void add_config_options(CLI::App* cmd, ConfigOptions& o) {
    cmd->add_option("--config", o.config_path, "JSON config; the built-in desk-scale scenario when omitted");
    cmd->add_option("--override", o.overrides, "dotted.key=value applied on top of the config (repeatable)");
    cmd->add_option("--seed", o.seed, "master seed; derives every stage seed");
    cmd->add_option("--out", o.out_dir, "output directory (default: config output_dir)");
    cmd->add_flag("--fusion-bypass", o.fusion_bypass, "use normalized features in place of the fusion network");
}

PipelineConfig load_config(const ConfigOptions& o) {
    io::json j;
    if (o.config_path.empty()) {
        j = config_to_json(default_config());
    } else {
        if (!fs::is_regular_file(o.config_path)) throw ConfigError("--config", "cannot open '" + o.config_path + "'");
        j = io::read_json(o.config_path);
    }
    for (const auto& a : o.overrides) apply_override(j, a);
    PipelineConfig cfg = config_from_json(j);
    if (o.seed) apply_master_seed(cfg, *o.seed);
    if (o.fusion_bypass) cfg.fusion.bypass = true;
    if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
    spdlog::debug("resolved config: {}", config_to_json(cfg).dump());
    return cfg;
}

std::string fmt4(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("rss_sentinel");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("RSS_SENTINEL_LOG");
    const std::string level = env ? env : "info";
    if (level == "error")
        spdlog::set_level(spdlog::level::err);
    else if (level == "info")
        spdlog::set_level(spdlog::level::info);
    else if (level == "debug")
        spdlog::set_level(spdlog::level::debug);
    else
        throw ConfigError("RSS_SENTINEL_LOG", "expected error, info or debug, got '" + level + "'");
}

int cmd_simulate(const ConfigOptions& o, const std::string& stage_name) {
    const PipelineConfig cfg = load_config(o);
    const Stage stage = stage_name == "online" ? Stage::online : Stage::offline;
    const RssTrace trace = simulate_stage(cfg, stage);
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    io::write_trace_csv(trace, dir / (stage_name + "_trace.csv"));
    io::write_states_csv(trace, dir / (stage_name + "_states.csv"));
    spdlog::info("simulate: {} samples over {} paths -> {}", trace.samples.size(), trace.num_paths, dir.string());
    return 0;
}

int cmd_extract(const ConfigOptions& o, const std::string& trace_path, const std::string& states_path,
                const std::string& name) {
    const PipelineConfig cfg = load_config(o);
    const RssTrace trace = io::read_trace_csv(trace_path, states_path);
    const FeatureMatrix f = extract_windows(trace, cfg.windowing);
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    io::write_features_csv(f, dir / name);
    spdlog::info("extract: {} windows x {} features -> {}", f.rows(), f.values.cols(), (dir / name).string());
    return 0;
}

int cmd_fuse_train(const ConfigOptions& o, const std::string& source_path, const std::string& target_path) {
    const PipelineConfig cfg = load_config(o);
    const FeatureMatrix raw_source = io::read_features_csv(source_path);
    if (!raw_source.has_labels()) throw ConfigError("--source", "source features need a label column");
    std::optional<FeatureMatrix> raw_target;
    if (!target_path.empty()) raw_target = io::read_features_csv(target_path);

    FeatureMatrix source, target;
    if (raw_target) {
        auto pair = normalize_pair(cfg, raw_source, *raw_target);
        source = std::move(pair.source);
        target = std::move(pair.target);
    } else {
        source = normalize_pair(cfg, raw_source, raw_source).source;
    }

    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    if (cfg.fusion.bypass) {
        io::write_fused_csv(identity_fusion(source), dir / "fused_source.csv");
        if (raw_target) io::write_fused_csv(identity_fusion(target), dir / "fused_target.csv");
        spdlog::info("fuse-train: bypass, wrote normalized features");
        return 0;
    }
    const TrainResult trained = train_fusion(cfg, source);
    io::json model = io::fusion_net_to_json(trained.net);
    model["loss_history"] = trained.loss_history;
    io::write_json(model, dir / "fusion_model.json");
    io::write_fused_csv(fuse(trained.net, source), dir / "fused_source.csv");
    if (raw_target) io::write_fused_csv(fuse(trained.net, target), dir / "fused_target.csv");
    spdlog::info("fuse-train: final loss {}", trained.loss_history.empty() ? 0.0 : trained.loss_history.back());
    return 0;
}

int cmd_detect(const ConfigOptions& o, const std::string& source_path, const std::string& target_path) {
    const PipelineConfig cfg = load_config(o);
    const FusionFeatureMatrix source = io::read_fused_csv(source_path);
    const FusionFeatureMatrix target = io::read_fused_csv(target_path);
    if (source.labels.empty()) throw ConfigError("--source", "source features need a label column");
    const MultiKernel mk = resolve_kernels(cfg.kernels, source.values);
    const DetectionReport report = detect(cfg, source, target);
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    io::write_json(io::report_to_json(report), dir / "report.json");
    if (report.result) io::write_matrix_csv(report.result->confusion, dir / "confusion.csv");
    io::write_json(io::transfer_model_to_json(report.model, mk), dir / "transfer_model.json");
    io::write_labels_csv(report.final_labels, dir / "predictions.csv");
    std::cout << summary_line(report) << "\n";
    return 0;
}

int cmd_pipeline(const ConfigOptions& o) {
    const PipelineConfig cfg = load_config(o);
    spdlog::info("pipeline: {} paths, {} states, bypass={}", cfg.environment.num_paths(), cfg.num_states(),
                 cfg.fusion.bypass);
    const PipelineResult result = run_pipeline(cfg);
    for (std::size_t i = 0; i < result.report.per_iteration.size(); ++i) {
        const auto& it = result.report.per_iteration[i];
        spdlog::debug("iteration {}: mmd={} changed={} d_sub={} da={}", i + 1, it.mixed_mmd_total,
                      it.label_change_fraction, it.d_sub, fmt4(it.da));
    }
    write_pipeline_outputs(result, cfg, cfg.output_dir);
    spdlog::info("pipeline: wrote {}", (fs::path(cfg.output_dir) / "report.json").string());
    std::cout << summary_line(result.report) << "\n";
    return 0;
}

int cmd_evaluate(const std::string& truth_path, const std::string& pred_path, int classes, const std::string& out) {
    const std::vector<int> truth = io::read_labels_csv(truth_path);
    const std::vector<int> pred = io::read_labels_csv(pred_path);
    const Metrics m = metrics(truth, pred, classes);
    std::cout << "FP=" << fmt4(m.fp) << " FN=" << fmt4(m.fn) << " DA=" << fmt4(m.da) << "\n";
    const fs::path dir = out;
    fs::create_directories(dir);
    io::write_matrix_csv(m.confusion, dir / "confusion.csv");
    io::write_json(io::metrics_to_json(m), dir / "metrics.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rss-sentinel: device-free intrusion detection over WLAN RSS with multi-kernel transfer"};
    app.require_subcommand(1);

    ConfigOptions opts;
    std::string stage = "offline";
    auto* sim = app.add_subcommand("simulate", "write a synthetic RSS trace and its state file");
    add_config_options(sim, opts);
    sim->add_option("--stage", stage, "offline or online")->check(CLI::IsMember({"offline", "online"}));

    std::string trace_path, states_path, features_name = "features.csv";
    auto* ext = app.add_subcommand("extract", "window a trace into raw statistical features");
    add_config_options(ext, opts);
    ext->add_option("--trace", trace_path, "trace CSV")->required();
    ext->add_option("--states", states_path, "state CSV; adds a label column");
    ext->add_option("--name", features_name, "output file name inside --out");

    std::string source_path, target_path;
    auto* fus = app.add_subcommand("fuse-train", "normalize, train the fusion network and fuse both domains");
    add_config_options(fus, opts);
    fus->add_option("--source", source_path, "labeled raw source features CSV")->required();
    fus->add_option("--target", target_path, "raw target features CSV");

    auto* det = app.add_subcommand("detect", "iterative transfer and classification on fused features");
    add_config_options(det, opts);
    det->add_option("--source", source_path, "labeled fused source CSV")->required();
    det->add_option("--target", target_path, "fused target CSV; a label column is used for metrics")->required();

    auto* pipe = app.add_subcommand("pipeline", "simulate, extract, fuse, detect and write every artifact");
    add_config_options(pipe, opts);

    std::string truth_path, pred_path, eval_out = ".";
    int classes = 0;
    auto* eval = app.add_subcommand("evaluate", "FP, FN, DA and confusion matrix of a prediction file");
    eval->add_option("--truth", truth_path, "true labels CSV (last column)")->required();
    eval->add_option("--pred", pred_path, "predicted labels CSV (last column)")->required();
    eval->add_option("--classes", classes, "number of states K")->required()->check(CLI::PositiveNumber);
    eval->add_option("--out", eval_out, "directory for confusion.csv and metrics.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        configure_logging();
        if (sim->parsed()) return cmd_simulate(opts, stage);
        if (ext->parsed()) return cmd_extract(opts, trace_path, states_path, features_name);
        if (fus->parsed()) return cmd_fuse_train(opts, source_path, target_path);
        if (det->parsed()) return cmd_detect(opts, source_path, target_path);
        if (pipe->parsed()) return cmd_pipeline(opts);
        if (eval->parsed()) return cmd_evaluate(truth_path, pred_path, classes, eval_out);
    } catch (const ConfigError& e) {
        std::cerr << "error: invalid config: " << e.what() << "\n";
        return kExitValidation;
    } catch (const io::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}
