#pragma once

#include <array>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rss_sentinel/sim.hpp"

namespace rss_sentinel {

inline constexpr int kFeaturesPerPath = 8;

enum class WindowFeature : int {
    mean = 0,
    variance,
    max,
    min,
    range,
    median,
    mode,
    prob_above_mean,
};

inline constexpr std::array<std::string_view, kFeaturesPerPath> kFeatureNames = {
    "mean", "variance", "max", "min", "range", "median", "mode", "prob_above_mean"};

struct WindowingConfig {
    int window_len = 20;
    int stride = 0;  // 0 means non-overlapping (stride = window_len)

    int effective_stride() const { return stride > 0 ? stride : window_len; }
    void validate() const;
};

// Rows are windows. Columns are 8 contiguous blocks of length `paths`, in
// WindowFeature order: block b, path j lives at column b * paths + j.
struct FeatureMatrix {
    Eigen::MatrixXd values;
    int paths = 0;
    int window_len = 0;
    bool normalized = false;
    std::vector<int> labels;  // empty when unlabeled

    Eigen::Index rows() const { return values.rows(); }
    bool has_labels() const { return !labels.empty(); }
};

// The eight statistics of one window, in WindowFeature order.
std::array<double, kFeaturesPerPath> window_statistics(const std::vector<double>& window);

FeatureMatrix extract_windows(const RssTrace& trace, const WindowingConfig& cfg);

// Per-row min-max scaling; a constant row maps to zeros.
FeatureMatrix normalize(const FeatureMatrix& features);

struct ColumnRange {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

ColumnRange fit_column_range(const FeatureMatrix& features);

// Per-column min-max scaling against a fitted range, clamped to [0, 1].
FeatureMatrix normalize_columns(const FeatureMatrix& features, const ColumnRange& range);

}  // namespace rss_sentinel
