#include "rss_sentinel/pipeline.hpp"

#include <cstdio>
#include <set>

#include "rss_sentinel/random.hpp"

namespace rss_sentinel {
namespace {

using io::json;

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!keys.count(k)) throw ConfigError(path.empty() ? k : path + "." + k, "unknown key");
}

const json& object_at(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    return j;
}

template <typename T>
void read(const json& j, const char* key, const std::string& path, T& dst) {
    if (!j.contains(key)) return;
    const std::string field = path + "." + key;
    try {
        const auto& v = j.at(key);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(field, "expected a boolean");
        } else if constexpr (std::is_arithmetic_v<T>) {
            if (!v.is_number()) throw ConfigError(field, "expected a number");
            if constexpr (std::is_integral_v<T>)
                if (!v.is_number_integer()) throw ConfigError(field, "expected an integer");
        }
        dst = v.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(field, e.what());
    }
}

template <typename Fn>
void section(const json& root, const char* key, Fn&& fn) {
    if (!root.contains(key)) return;
    const json& s = object_at(root.at(key), key);
    try {
        fn(s);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
    }
}

Schedule default_schedule(const PipelineConfig& cfg) {
    Schedule s;
    for (int state = 0; state < cfg.num_states(); ++state) s.emplace_back(state, cfg.scenario.seconds_per_state);
    return s;
}

DetectionReport detect_with(const PipelineConfig& cfg, const MultiKernel& mk, const FusionFeatureMatrix& source,
                            const FusionFeatureMatrix& target) {
    IterationConfig it = cfg.iteration;
    it.classifier.svm.seed = cfg.seeds.classifier;
    return run_detection({source.values, source.labels, Domain::source}, {target.values, target.labels, Domain::target},
                         mk, cfg.transfer.lambda, cfg.transfer.d_sub, it, cfg.num_states());
}

template <typename Fn>
void run_stage(const char* stage, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
    reject_unknown(j, "", {"environment", "scenario", "windowing", "normalization", "fusion", "kernels", "transfer",
                           "iteration", "seeds", "output_dir"});
    if (!j.contains("environment")) throw ConfigError("environment", "missing required block");

    PipelineConfig cfg;
    try {
        cfg.environment = io::environment_from_json(object_at(j.at("environment"), "environment"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        const std::string what = e.what();
        throw ConfigError("environment", what.rfind("environment", 0) == 0 ? what.substr(what.find(':') + 2) : what);
    }

    section(j, "scenario", [&](const json& s) {
        reject_unknown(s, "scenario", {"seconds_per_state", "schedule", "online_shift"});
        read(s, "seconds_per_state", "scenario", cfg.scenario.seconds_per_state);
        if (cfg.scenario.seconds_per_state < 1) throw ConfigError("scenario.seconds_per_state", "must be >= 1");
        if (s.contains("schedule")) {
            Schedule sched;
            for (const auto& seg : s.at("schedule")) {
                if (!seg.is_array() || seg.size() != 2)
                    throw ConfigError("scenario.schedule", "expected [state, duration_s] pairs");
                sched.emplace_back(seg[0].get<int>(), seg[1].get<std::int64_t>());
            }
            cfg.scenario.schedule = sched;
        }
        if (s.contains("online_shift")) {
            const auto& sh = object_at(s.at("online_shift"), "scenario.online_shift");
            reject_unknown(sh, "scenario.online_shift", {"offset_db", "extra_sigma_db"});
            read(sh, "offset_db", "scenario.online_shift", cfg.scenario.online_shift.offset_db);
            read(sh, "extra_sigma_db", "scenario.online_shift", cfg.scenario.online_shift.extra_sigma_db);
            if (!(cfg.scenario.online_shift.extra_sigma_db >= 0.0))
                throw ConfigError("scenario.online_shift.extra_sigma_db", "must be >= 0");
        }
    });

    section(j, "windowing", [&](const json& s) {
        reject_unknown(s, "windowing", {"window_len", "stride"});
        read(s, "window_len", "windowing", cfg.windowing.window_len);
        read(s, "stride", "windowing", cfg.windowing.stride);
        cfg.windowing.validate();
    });

    if (j.contains("normalization")) {
        const auto& v = j.at("normalization");
        if (v == "row")
            cfg.normalization = Normalization::row;
        else if (v == "column")
            cfg.normalization = Normalization::column;
        else
            throw ConfigError("normalization", "expected \"row\" or \"column\"");
    }

    section(j, "fusion", [&](const json& s) {
        reject_unknown(s, "fusion", {"d_fused", "bypass", "train"});
        read(s, "d_fused", "fusion", cfg.fusion.d_fused);
        read(s, "bypass", "fusion", cfg.fusion.bypass);
        if (cfg.fusion.d_fused < 1) throw ConfigError("fusion.d_fused", "must be >= 1");
        if (s.contains("train")) {
            const auto& t = object_at(s.at("train"), "fusion.train");
            reject_unknown(t, "fusion.train", {"learning_rate", "momentum", "epochs", "batch_size", "clip_norm"});
            read(t, "learning_rate", "fusion.train", cfg.fusion.train.learning_rate);
            read(t, "momentum", "fusion.train", cfg.fusion.train.momentum);
            read(t, "epochs", "fusion.train", cfg.fusion.train.epochs);
            read(t, "batch_size", "fusion.train", cfg.fusion.train.batch_size);
            read(t, "clip_norm", "fusion.train", cfg.fusion.train.clip_norm);
            cfg.fusion.train.validate();
        }
    });

    section(j, "kernels", [&](const json& s) {
        reject_unknown(s, "kernels", {"kernels", "weights", "gamma_mode"});
        if (s.contains("gamma_mode")) cfg.kernels.gamma_mode = gamma_mode_from_string(s.at("gamma_mode").get<std::string>());
        if (s.contains("kernels"))
            for (const auto& k : s.at("kernels")) {
                KernelEntry e;
                e.kind = kernel_kind_from_string(k.at("kind").get<std::string>());
                if (k.contains("gamma") && !(k.at("gamma").is_string() && k.at("gamma") == "median")) {
                    if (!k.at("gamma").is_number()) throw ConfigError("kernels.kernels.gamma", "expected a number or \"median\"");
                    e.gamma = k.at("gamma").get<double>();
                }
                cfg.kernels.kernels.push_back(e);
            }
        if (s.contains("weights")) cfg.kernels.weights = s.at("weights").get<std::vector<double>>();
        const std::size_t g = cfg.kernels.kernels.empty() ? std::size(kAllKernelKinds) : cfg.kernels.kernels.size();
        if (!cfg.kernels.weights.empty() && cfg.kernels.weights.size() != g)
            throw ConfigError("kernels.weights", "expected one weight per kernel");
    });

    section(j, "transfer", [&](const json& s) {
        reject_unknown(s, "transfer", {"lambda", "d_sub"});
        read(s, "lambda", "transfer", cfg.transfer.lambda);
        read(s, "d_sub", "transfer", cfg.transfer.d_sub);
        if (!(cfg.transfer.lambda > 0.0)) throw ConfigError("transfer.lambda", "must be > 0");
        if (cfg.transfer.d_sub < 1) throw ConfigError("transfer.d_sub", "must be >= 1");
    });

    section(j, "iteration", [&](const json& s) {
        reject_unknown(s, "iteration", {"max_iterations", "label_change_tol", "classifier", "knn_k", "svm",
                                          "embedding_scale"});
        read(s, "max_iterations", "iteration", cfg.iteration.max_iterations);
        read(s, "label_change_tol", "iteration", cfg.iteration.label_change_tol);
        if (s.contains("classifier"))
            cfg.iteration.classifier.kind = classifier_from_string(s.at("classifier").get<std::string>());
        read(s, "knn_k", "iteration", cfg.iteration.classifier.knn_k);
        if (s.contains("embedding_scale"))
            cfg.iteration.embedding_scale = embedding_scale_from_string(s.at("embedding_scale").get<std::string>());
        if (cfg.iteration.classifier.knn_k < 1) throw ConfigError("iteration.knn_k", "must be >= 1");
        if (s.contains("svm")) {
            const auto& v = object_at(s.at("svm"), "iteration.svm");
            reject_unknown(v, "iteration.svm", {"reg_strength", "epochs", "learning_rate"});
            read(v, "reg_strength", "iteration.svm", cfg.iteration.classifier.svm.reg_strength);
            read(v, "epochs", "iteration.svm", cfg.iteration.classifier.svm.epochs);
            read(v, "learning_rate", "iteration.svm", cfg.iteration.classifier.svm.learning_rate);
            cfg.iteration.classifier.svm.validate();
        }
        cfg.iteration.validate();
    });

    section(j, "seeds", [&](const json& s) {
        reject_unknown(s, "seeds", {"sim_offline", "sim_online", "fusion", "classifier"});
        read(s, "sim_offline", "seeds", cfg.seeds.sim_offline);
        read(s, "sim_online", "seeds", cfg.seeds.sim_online);
        read(s, "fusion", "seeds", cfg.seeds.fusion);
        read(s, "classifier", "seeds", cfg.seeds.classifier);
    });

    if (j.contains("output_dir")) {
        if (!j.at("output_dir").is_string()) throw ConfigError("output_dir", "expected a string");
        cfg.output_dir = j.at("output_dir").get<std::string>();
    }
    if (cfg.scenario.schedule)
        for (const auto& [state, dur] : *cfg.scenario.schedule) {
            if (state < 0 || state >= cfg.num_states()) throw ConfigError("scenario.schedule", "state out of range");
            if (dur < 1) throw ConfigError("scenario.schedule", "durations must be >= 1");
        }
    return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
    json j;
    j["environment"] = io::environment_to_json(cfg.environment);
    json scenario = {{"seconds_per_state", cfg.scenario.seconds_per_state},
                     {"online_shift",
                      {{"offset_db", cfg.scenario.online_shift.offset_db},
                       {"extra_sigma_db", cfg.scenario.online_shift.extra_sigma_db}}}};
    if (cfg.scenario.schedule) {
        json sched = json::array();
        for (const auto& [state, dur] : *cfg.scenario.schedule) sched.push_back({state, dur});
        scenario["schedule"] = sched;
    }
    j["scenario"] = scenario;
    j["windowing"] = {{"window_len", cfg.windowing.window_len}, {"stride", cfg.windowing.stride}};
    j["normalization"] = cfg.normalization == Normalization::row ? "row" : "column";
    j["fusion"] = {{"d_fused", cfg.fusion.d_fused},
                   {"bypass", cfg.fusion.bypass},
                   {"train",
                    {{"learning_rate", cfg.fusion.train.learning_rate},
                     {"momentum", cfg.fusion.train.momentum},
                     {"epochs", cfg.fusion.train.epochs},
                     {"batch_size", cfg.fusion.train.batch_size},
                     {"clip_norm", cfg.fusion.train.clip_norm}}}};
    json kernels = json::array();
    for (const auto& k : cfg.kernels.kernels)
        kernels.push_back({{"kind", std::string(to_string(k.kind))}, {"gamma", k.gamma ? json(*k.gamma) : json("median")}});
    j["kernels"] = {{"gamma_mode", std::string(to_string(cfg.kernels.gamma_mode))}};
    if (!cfg.kernels.kernels.empty()) j["kernels"]["kernels"] = kernels;
    if (!cfg.kernels.weights.empty()) j["kernels"]["weights"] = cfg.kernels.weights;
    j["transfer"] = {{"lambda", cfg.transfer.lambda}, {"d_sub", cfg.transfer.d_sub}};
    j["iteration"] = {{"max_iterations", cfg.iteration.max_iterations},
                      {"label_change_tol", cfg.iteration.label_change_tol},
                      {"classifier", std::string(to_string(cfg.iteration.classifier.kind))},
                      {"knn_k", cfg.iteration.classifier.knn_k},
                      {"embedding_scale", std::string(to_string(cfg.iteration.embedding_scale))},
                      {"svm",
                       {{"reg_strength", cfg.iteration.classifier.svm.reg_strength},
                        {"epochs", cfg.iteration.classifier.svm.epochs},
                        {"learning_rate", cfg.iteration.classifier.svm.learning_rate}}}};
    j["seeds"] = {{"sim_offline", cfg.seeds.sim_offline},
                  {"sim_online", cfg.seeds.sim_online},
                  {"fusion", cfg.seeds.fusion},
                  {"classifier", cfg.seeds.classifier}};
    j["output_dir"] = cfg.output_dir;
    return j;
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(assignment, "override must look like key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError(key, "empty path component");
        if (!node->is_object()) throw ConfigError(key, "path crosses a non-object value");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

void apply_master_seed(PipelineConfig& cfg, std::uint64_t seed) {
    cfg.seeds.sim_offline = mix_seed(seed, 101);
    cfg.seeds.sim_online = mix_seed(seed, 102);
    cfg.seeds.fusion = mix_seed(seed, 103);
    cfg.seeds.classifier = mix_seed(seed, 104);
}

PipelineConfig default_config() {
    PipelineConfig cfg;
    cfg.environment = default_environment();
    return cfg;
}

Schedule stage_schedule(const PipelineConfig& cfg) {
    return cfg.scenario.schedule ? *cfg.scenario.schedule : default_schedule(cfg);
}

RssTrace simulate_stage(const PipelineConfig& cfg, Stage stage) {
    if (stage == Stage::offline) return simulate_schedule(cfg.environment, stage_schedule(cfg), {}, cfg.seeds.sim_offline);
    return simulate_schedule(cfg.environment, stage_schedule(cfg), cfg.scenario.online_shift, cfg.seeds.sim_online);
}

NormalizedPair normalize_pair(const PipelineConfig& cfg, const FeatureMatrix& raw_source,
                              const FeatureMatrix& raw_target) {
    if (cfg.normalization == Normalization::row) return {normalize(raw_source), normalize(raw_target)};
    const ColumnRange range = fit_column_range(raw_source);
    return {normalize_columns(raw_source, range), normalize_columns(raw_target, range)};
}

TrainResult train_fusion(const PipelineConfig& cfg, const FeatureMatrix& normalized_source) {
    const FusionNet net = init_network(normalized_source.paths, cfg.num_states(), cfg.fusion.d_fused, cfg.seeds.fusion);
    TrainConfig tc = cfg.fusion.train;
    tc.shuffle_seed = cfg.seeds.fusion;
    return train(net, normalized_source, tc);
}

MultiKernel resolve_kernels(const KernelConfig& cfg, const Eigen::Ref<const Eigen::MatrixXd>& source_fused) {
    std::vector<KernelEntry> entries = cfg.kernels;
    if (entries.empty())
        for (KernelKind k : kAllKernelKinds) entries.push_back({k, std::nullopt});
    std::optional<double> median;
    MultiKernel mk;
    for (const auto& e : entries) {
        double gamma = 1.0;
        if (e.gamma) {
            gamma = *e.gamma;
        } else if (e.kind != KernelKind::linear) {
            if (!median) median = median_distance(source_fused);
            gamma = gamma_for(e.kind, *median, cfg.gamma_mode);
        }
        mk.kernels.push_back({e.kind, gamma});
    }
    mk.weights = cfg.weights.empty() ? std::vector<double>(entries.size(), 1.0 / static_cast<double>(entries.size()))
                                     : cfg.weights;
    mk.validate();
    return mk;
}

DetectionReport detect(const PipelineConfig& cfg, const FusionFeatureMatrix& source,
                       const FusionFeatureMatrix& target) {
    return detect_with(cfg, resolve_kernels(cfg.kernels, source.values), source, target);
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    PipelineResult r;
    run_stage("simulate", [&] {
        r.offline = simulate_stage(cfg, Stage::offline);
        r.online = simulate_stage(cfg, Stage::online);
    });
    FeatureMatrix raw_source, raw_target;
    run_stage("extract", [&] {
        raw_source = extract_windows(r.offline, cfg.windowing);
        raw_target = extract_windows(r.online, cfg.windowing);
    });
    run_stage("normalize", [&] {
        auto [src, tgt] = normalize_pair(cfg, raw_source, raw_target);
        r.source_features = std::move(src);
        r.target_features = std::move(tgt);
    });
    run_stage("fusion", [&] {
        if (cfg.fusion.bypass) {
            r.fused_source = identity_fusion(r.source_features);
            r.fused_target = identity_fusion(r.target_features);
            return;
        }
        auto trained = train_fusion(cfg, r.source_features);
        r.loss_history = std::move(trained.loss_history);
        r.fused_source = fuse(trained.net, r.source_features);
        r.fused_target = fuse(trained.net, r.target_features);
        r.net = std::move(trained.net);
    });
    run_stage("kernels", [&] { r.kernels = resolve_kernels(cfg.kernels, r.fused_source.values); });
    run_stage("detect", [&] { r.report = detect_with(cfg, r.kernels, r.fused_source, r.fused_target); });
    return r;
}

void write_pipeline_outputs(const PipelineResult& result, const PipelineConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    io::write_json(config_to_json(cfg), dir / "config.resolved.json");
    io::write_json(io::report_to_json(result.report), dir / "report.json");
    if (result.report.result) io::write_matrix_csv(result.report.result->confusion, dir / "confusion.csv");
    io::write_json(io::transfer_model_to_json(result.report.model, result.kernels), dir / "transfer_model.json");
    if (result.net) {
        json model = io::fusion_net_to_json(*result.net);
        model["loss_history"] = result.loss_history;
        io::write_json(model, dir / "fusion_model.json");
    }
    io::write_labels_csv(result.report.final_labels, dir / "predictions.csv");
}

std::string summary_line(const DetectionReport& report) {
    auto fmt = [](const std::optional<double>& v) {
        if (!v) return std::string("n/a");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", *v);
        return std::string(buf);
    };
    std::optional<double> da, fp, fn;
    if (report.result) {
        da = report.result->da;
        fp = report.result->fp;
        fn = report.result->fn;
    }
    return "DA=" + fmt(da) + " FP=" + fmt(fp) + " FN=" + fmt(fn) + " iters=" + std::to_string(report.iterations_run);
}

}  // namespace rss_sentinel
