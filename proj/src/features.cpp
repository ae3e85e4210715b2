#include "rss_sentinel/features.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace rss_sentinel {

void WindowingConfig::validate() const {
    if (window_len < 2) throw std::invalid_argument("windowing: window_len must be >= 2");
    if (stride < 0) throw std::invalid_argument("windowing: stride must be >= 1 (or 0 for non-overlapping)");
}

std::array<double, kFeaturesPerPath> window_statistics(const std::vector<double>& window) {
    const auto n = static_cast<double>(window.size());
    double sum = 0.0;
    for (double v : window) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    std::size_t above = 0;
    for (double v : window) {
        ss += (v - mean) * (v - mean);
        if (v > mean) ++above;
    }

    std::vector<double> sorted(window);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t len = sorted.size();
    const double median = len % 2 == 1 ? sorted[len / 2] : 0.5 * (sorted[len / 2 - 1] + sorted[len / 2]);

    // Ties go to the smallest value: the scan is ascending and only a strictly larger count wins.
    double mode = sorted.front();
    std::size_t best = 0;
    for (std::size_t i = 0; i < len;) {
        std::size_t j = i;
        while (j < len && sorted[j] == sorted[i]) ++j;
        if (j - i > best) {
            best = j - i;
            mode = sorted[i];
        }
        i = j;
    }

    return {mean,
            ss / n,
            sorted.back(),
            sorted.front(),
            sorted.back() - sorted.front(),
            median,
            mode,
            static_cast<double>(above) / n};
}

FeatureMatrix extract_windows(const RssTrace& trace, const WindowingConfig& cfg) {
    cfg.validate();
    const int p = trace.num_paths;
    if (p <= 0) throw std::invalid_argument("extract: trace has no paths");

    // Per-path series keyed by timestamp.
    std::vector<std::map<std::int64_t, double>> series(static_cast<std::size_t>(p));
    for (const auto& s : trace.samples) {
        if (s.path_id < 0 || s.path_id >= p)
            throw std::invalid_argument("extract: path_id " + std::to_string(s.path_id) + " out of range");
        if (!series[static_cast<std::size_t>(s.path_id)].emplace(s.timestamp_s, s.rss_dbm).second)
            throw std::invalid_argument("extract: duplicate sample for path " + std::to_string(s.path_id) +
                                        " at t=" + std::to_string(s.timestamp_s));
    }
    std::vector<std::int64_t> stamps;
    for (const auto& [t, v] : series[0]) stamps.push_back(t);
    for (int j = 1; j < p; ++j) {
        const auto& sj = series[static_cast<std::size_t>(j)];
        if (sj.size() != stamps.size() ||
            !std::equal(stamps.begin(), stamps.end(), sj.begin(), [](std::int64_t t, const auto& kv) {
                return t == kv.first;
            }))
            throw std::invalid_argument("extract: paths 0 and " + std::to_string(j) +
                                        " have different timestamp sets");
    }
    const auto total = static_cast<std::int64_t>(stamps.size());
    const int len = cfg.window_len;
    if (total < len)
        throw std::invalid_argument("extract: trace has " + std::to_string(total) +
                                    " samples per path, fewer than window_len " + std::to_string(len));

    std::map<std::int64_t, int> state_at;
    for (const auto& m : trace.true_state) state_at[m.timestamp_s] = m.state_id;
    const bool labeled = !state_at.empty();
    int max_state = 0;
    for (const auto& [t, s] : state_at) max_state = std::max(max_state, s);

    const int stride = cfg.effective_stride();
    const auto n_windows = (total - len) / stride + 1;

    std::vector<std::vector<double>> dense(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j)
        for (const auto& [t, v] : series[static_cast<std::size_t>(j)]) dense[static_cast<std::size_t>(j)].push_back(v);

    FeatureMatrix out;
    out.paths = p;
    out.window_len = len;
    out.values.resize(n_windows, kFeaturesPerPath * p);
    std::vector<double> window(static_cast<std::size_t>(len));
    for (std::int64_t w = 0; w < n_windows; ++w) {
        const std::int64_t start = w * stride;
        for (int j = 0; j < p; ++j) {
            const auto& d = dense[static_cast<std::size_t>(j)];
            std::copy(d.begin() + start, d.begin() + start + len, window.begin());
            const auto stats = window_statistics(window);
            for (int b = 0; b < kFeaturesPerPath; ++b) out.values(w, b * p + j) = stats[static_cast<std::size_t>(b)];
        }
        if (labeled) {
            std::vector<int> votes(static_cast<std::size_t>(max_state + 1), 0);
            for (std::int64_t k = start; k < start + len; ++k) {
                const auto it = state_at.find(stamps[static_cast<std::size_t>(k)]);
                if (it != state_at.end()) ++votes[static_cast<std::size_t>(it->second)];
            }
            // max_element returns the first maximum: ties go to the smaller state id.
            out.labels.push_back(static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()));
        }
    }
    return out;
}

FeatureMatrix normalize(const FeatureMatrix& features) {
    if (features.values.size() == 0) throw std::invalid_argument("normalize: empty feature matrix");
    if (features.normalized) throw std::invalid_argument("normalize: matrix is already normalized");
    FeatureMatrix out = features;
    for (Eigen::Index r = 0; r < out.values.rows(); ++r) {
        auto row = out.values.row(r);
        const double lo = row.minCoeff();
        const double hi = row.maxCoeff();
        if (hi > lo)
            row = (row.array() - lo) / (hi - lo);
        else
            row.setZero();
    }
    out.normalized = true;
    return out;
}

ColumnRange fit_column_range(const FeatureMatrix& features) {
    if (features.values.size() == 0) throw std::invalid_argument("normalize: empty feature matrix");
    return {features.values.colwise().minCoeff().transpose(), features.values.colwise().maxCoeff().transpose()};
}

FeatureMatrix normalize_columns(const FeatureMatrix& features, const ColumnRange& range) {
    if (features.values.size() == 0) throw std::invalid_argument("normalize: empty feature matrix");
    if (features.normalized) throw std::invalid_argument("normalize: matrix is already normalized");
    if (range.lo.size() != features.values.cols() || range.hi.size() != features.values.cols())
        throw std::invalid_argument("normalize: column range width mismatch");
    FeatureMatrix out = features;
    for (Eigen::Index c = 0; c < out.values.cols(); ++c) {
        const double span = range.hi(c) - range.lo(c);
        auto col = out.values.col(c);
        if (span > 0.0)
            col = ((col.array() - range.lo(c)) / span).cwiseMax(0.0).cwiseMin(1.0);
        else
            col.setZero();
    }
    out.normalized = true;
    return out;
}

}  // namespace rss_sentinel
