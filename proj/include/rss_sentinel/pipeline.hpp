#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rss_sentinel/detector.hpp"
#include "rss_sentinel/features.hpp"
#include "rss_sentinel/fusion.hpp"
#include "rss_sentinel/io.hpp"
#include "rss_sentinel/kernels.hpp"
#include "rss_sentinel/sim.hpp"

namespace rss_sentinel {

// Invalid configuration; field() names the offending key path.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// A pipeline stage failed; stage() is one of simulate, extract, normalize,
// fusion, kernels, detect.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& cause)
        : std::runtime_error("stage " + stage + ": " + cause), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct ScenarioConfig {
    std::int64_t seconds_per_state = 1200;
    std::optional<Schedule> schedule;  // overrides the state sweep when set
    DomainShift online_shift{-4.0, 1.5};
};

enum class Normalization { row, column };

struct FusionConfig {
    int d_fused = 32;
    TrainConfig train;
    bool bypass = false;
};

struct KernelEntry {
    KernelKind kind = KernelKind::gaussian;
    std::optional<double> gamma;  // empty: derived from the source median distance
};

struct KernelConfig {
    std::vector<KernelEntry> kernels;  // empty: all five kinds
    std::vector<double> weights;       // empty: uniform
    GammaMode gamma_mode = GammaMode::calibrated;
};

struct TransferConfig {
    double lambda = kDefaultLambda;
    int d_sub = kDefaultSubspaceDim;
};

struct SeedConfig {
    std::uint64_t sim_offline = 1;
    std::uint64_t sim_online = 2;
    std::uint64_t fusion = 3;
    std::uint64_t classifier = 4;
};

struct PipelineConfig {
    EnvironmentSpec environment;
    ScenarioConfig scenario;
    WindowingConfig windowing;
    Normalization normalization = Normalization::row;
    FusionConfig fusion;
    KernelConfig kernels;
    TransferConfig transfer;
    IterationConfig iteration;
    SeedConfig seeds;
    std::string output_dir = "out";

    int num_states() const { return environment.num_states(); }
};

PipelineConfig config_from_json(const io::json& j);
io::json config_to_json(const PipelineConfig& cfg);

// Applies `dotted.key=value`; the value is parsed as JSON and falls back to a string.
void apply_override(io::json& j, const std::string& assignment);

// Derives every stage seed from one master seed.
void apply_master_seed(PipelineConfig& cfg, std::uint64_t seed);

// Desk-scale scenario: default environment, L = 20, lambda = 0.1.
PipelineConfig default_config();

enum class Stage { offline, online };

Schedule stage_schedule(const PipelineConfig& cfg);
RssTrace simulate_stage(const PipelineConfig& cfg, Stage stage);

struct NormalizedPair {
    FeatureMatrix source;
    FeatureMatrix target;
};

NormalizedPair normalize_pair(const PipelineConfig& cfg, const FeatureMatrix& raw_source,
                              const FeatureMatrix& raw_target);

TrainResult train_fusion(const PipelineConfig& cfg, const FeatureMatrix& normalized_source);

MultiKernel resolve_kernels(const KernelConfig& cfg, const Eigen::Ref<const Eigen::MatrixXd>& source_fused);

DetectionReport detect(const PipelineConfig& cfg, const FusionFeatureMatrix& source,
                       const FusionFeatureMatrix& target);

struct PipelineResult {
    RssTrace offline;
    RssTrace online;
    FeatureMatrix source_features;  // normalized
    FeatureMatrix target_features;
    std::optional<FusionNet> net;
    std::vector<double> loss_history;
    FusionFeatureMatrix fused_source;
    FusionFeatureMatrix fused_target;
    MultiKernel kernels;
    DetectionReport report;
};

PipelineResult run_pipeline(const PipelineConfig& cfg);

// report.json, confusion.csv, transfer_model.json, fusion_model.json (unless
// bypassed), predictions.csv and config.resolved.json.
void write_pipeline_outputs(const PipelineResult& result, const PipelineConfig& cfg,
                            const std::filesystem::path& dir);

std::string summary_line(const DetectionReport& report);

}  // namespace rss_sentinel
