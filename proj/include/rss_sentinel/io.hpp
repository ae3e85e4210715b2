#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rss_sentinel/classify.hpp"
#include "rss_sentinel/detector.hpp"
#include "rss_sentinel/features.hpp"
#include "rss_sentinel/fusion.hpp"
#include "rss_sentinel/kernels.hpp"
#include "rss_sentinel/sim.hpp"
#include "rss_sentinel/transfer.hpp"

namespace rss_sentinel::io {

using json = nlohmann::ordered_json;

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Shortest round-trip decimal text, independent of the C locale.
std::string format_double(double v);
double parse_double(std::string_view text, const std::string& source, std::size_t line);

// CSV `timestamp_s,path_id,rss_dbm`.
void write_trace_csv(const RssTrace& trace, const std::filesystem::path& path);
// CSV `timestamp_s,state_id`.
void write_states_csv(const RssTrace& trace, const std::filesystem::path& path);
// Reads the samples; `states_path` may be empty.
RssTrace read_trace_csv(const std::filesystem::path& trace_path, const std::filesystem::path& states_path = {});

// A `#` line with the block layout, path count and window length, then
// `f_0..f_{d-1}[,label]`.
void write_features_csv(const FeatureMatrix& features, const std::filesystem::path& path);
FeatureMatrix read_features_csv(const std::filesystem::path& path);

// `x_0..x_{d-1}[,label]`.
void write_fused_csv(const FusionFeatureMatrix& fused, const std::filesystem::path& path);
FusionFeatureMatrix read_fused_csv(const std::filesystem::path& path);

// One label per data line, taken from the last column; a non-numeric first line is a header.
std::vector<int> read_labels_csv(const std::filesystem::path& path);
void write_labels_csv(std::span<const int> labels, const std::filesystem::path& path);

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);

json environment_to_json(const EnvironmentSpec& env);
EnvironmentSpec environment_from_json(const json& j);

json fusion_net_to_json(const FusionNet& net);
FusionNet fusion_net_from_json(const json& j);

json multi_kernel_to_json(const MultiKernel& mk);
std::string kernel_config_hash(const MultiKernel& mk);

json transfer_model_to_json(const TransferModel& model, const MultiKernel& mk);
TransferModel transfer_model_from_json(const json& j);

json knn_to_json(const KnnModel& model);
KnnModel knn_from_json(const json& j);
json svm_to_json(const LinearSvmModel& model);
LinearSvmModel svm_from_json(const json& j);

json metrics_to_json(const Metrics& m);
json report_to_json(const DetectionReport& report);

void write_json(const json& j, const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);

}  // namespace rss_sentinel::io
