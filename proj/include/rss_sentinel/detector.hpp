#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rss_sentinel/classify.hpp"
#include "rss_sentinel/kernels.hpp"
#include "rss_sentinel/transfer.hpp"

namespace rss_sentinel {

enum class Domain { source, target };

// Fusion features of one stage. Source labels are ground truth; target labels,
// when present, are used for reporting only.
struct DomainDataset {
    Eigen::MatrixXd features;
    std::vector<int> labels;
    Domain domain = Domain::source;
};

// How embedded coordinates are scaled before classification. `whitened` uses
// K*W as is (unit B-variance per axis); `eigen_weighted` multiplies axis k by
// 1/sqrt(z_k), so axes with a better variance-to-discrepancy ratio weigh more.
enum class EmbeddingScale { eigen_weighted, whitened };

const char* to_string(EmbeddingScale s);
EmbeddingScale embedding_scale_from_string(const std::string& name);

struct IterationConfig {
    int max_iterations = 10;
    double label_change_tol = 0.01;
    ClassifierConfig classifier;
    EmbeddingScale embedding_scale = EmbeddingScale::eigen_weighted;

    void validate() const;
};

// State 0 is silence; every other state is an intrusion.
struct Metrics {
    std::optional<double> fp;  // empty when there are no true-silence windows
    std::optional<double> fn;  // empty when there are no true-intrusion windows
    double da = 0.0;
    Eigen::MatrixXd confusion;       // row i: P(predicted j | true i)
    std::vector<bool> row_support;   // false for true states that never occur
};

Metrics metrics(std::span<const int> truth, std::span<const int> predicted, int num_states);

struct IterationRecord {
    double mixed_mmd_total = 0.0;  // embedded-space mixed MMD under the linear kernel
    double label_change_fraction = 0.0;
    int d_sub = 0;
    std::optional<double> da;
};

struct DetectionReport {
    int num_states = 0;
    std::vector<int> initial_labels;  // classifier on untransferred features
    std::vector<int> final_labels;
    std::optional<Metrics> baseline;  // metrics of initial_labels
    std::optional<Metrics> result;    // metrics of final_labels
    std::vector<IterationRecord> per_iteration;
    int iterations_run = 0;
    bool converged = false;
    TransferModel model;              // the last solved transfer
};

DetectionReport run_detection(const DomainDataset& source, const DomainDataset& target, const MultiKernel& mk,
                              double lambda, int d_sub, const IterationConfig& cfg, int num_states);

}  // namespace rss_sentinel
