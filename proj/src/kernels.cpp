#include "rss_sentinel/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rss_sentinel {

std::string_view to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::linear: return "linear";
        case KernelKind::gaussian: return "gaussian";
        case KernelKind::laplace: return "laplace";
        case KernelKind::inverse_square_distance: return "inverse-square-distance";
        case KernelKind::inverse_distance: return "inverse-distance";
    }
    return "unknown";
}

KernelKind kernel_kind_from_string(std::string_view name) {
    for (KernelKind k : kAllKernelKinds)
        if (to_string(k) == name) return k;
    throw std::invalid_argument("kernels: unknown kernel kind '" + std::string(name) + "'");
}

std::string_view to_string(GammaMode mode) {
    return mode == GammaMode::calibrated ? "calibrated" : "paper_literal";
}

GammaMode gamma_mode_from_string(std::string_view name) {
    if (name == "calibrated") return GammaMode::calibrated;
    if (name == "paper_literal") return GammaMode::paper_literal;
    throw std::invalid_argument("kernels: unknown gamma_mode '" + std::string(name) + "'");
}

void KernelSpec::validate() const {
    if (kind != KernelKind::linear && !(gamma > 0.0 && std::isfinite(gamma)))
        throw std::invalid_argument("kernels: gamma must be > 0 for the " + std::string(to_string(kind)) + " kernel");
}

void MultiKernel::validate() const {
    if (kernels.empty()) throw std::invalid_argument("kernels: multi-kernel has no kernels");
    if (kernels.size() != weights.size())
        throw std::invalid_argument("kernels: kernel and weight counts differ");
    double total = 0.0;
    for (std::size_t g = 0; g < kernels.size(); ++g) {
        kernels[g].validate();
        if (!(weights[g] >= 0.0)) throw std::invalid_argument("kernels: weights must be nonnegative");
        total += weights[g];
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("kernels: weights must sum to 1");
}

namespace {

double from_distance(const KernelSpec& spec, double sq) {
    switch (spec.kind) {
        case KernelKind::gaussian: return std::exp(-spec.gamma * sq);
        case KernelKind::laplace: return std::exp(-std::sqrt(spec.gamma) * std::sqrt(sq));
        case KernelKind::inverse_square_distance: return 1.0 / (spec.gamma * sq + 1.0);
        case KernelKind::inverse_distance: return 1.0 / (spec.gamma * std::sqrt(sq) + 1.0);
        case KernelKind::linear: break;
    }
    throw std::logic_error("kernels: linear kernel is not distance based");
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("kernels: vector lengths differ");
    if (spec.kind == KernelKind::linear) return x.dot(y);
    return from_distance(spec, (x - y).squaredNorm());
}

double kernel_eval(const MultiKernel& mk, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y) {
    double acc = 0.0;
    for (std::size_t g = 0; g < mk.kernels.size(); ++g) acc += mk.weights[g] * kernel_eval(mk.kernels[g], x, y);
    return acc;
}

double median_distance(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
    const Eigen::Index n = rows.rows();
    if (n < 2) throw std::invalid_argument("kernels: median distance needs at least 2 rows");
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((rows.row(i) - rows.row(j)).norm());
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
    double m = d[mid];
    if (d.size() % 2 == 0) m = 0.5 * (m + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid)));
    if (!(m > 0.0)) throw std::invalid_argument("kernels: median pairwise distance is zero");
    return m;
}

double gamma_for(KernelKind kind, double median, GammaMode mode) {
    if (mode == GammaMode::paper_literal) return median;
    switch (kind) {
        case KernelKind::inverse_distance: return 1.0 / median;
        case KernelKind::linear: return 1.0;
        default: return 1.0 / (median * median);
    }
}

MultiKernel median_multi_kernel(const Eigen::Ref<const Eigen::MatrixXd>& source, GammaMode mode,
                                std::optional<std::vector<double>> weights) {
    const double m = median_distance(source);
    MultiKernel mk;
    for (KernelKind kind : kAllKernelKinds) mk.kernels.push_back({kind, gamma_for(kind, m, mode)});
    mk.weights = weights ? *weights : std::vector<double>(mk.kernels.size(), 1.0 / static_cast<double>(mk.kernels.size()));
    mk.validate();
    return mk;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& a,
                              const Eigen::Ref<const Eigen::MatrixXd>& b) {
    if (a.cols() != b.cols()) throw std::invalid_argument("kernels: feature widths differ");
    spec.validate();
    if (spec.kind == KernelKind::linear) return a * b.transpose();
    Eigen::MatrixXd out(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            out(i, j) = from_distance(spec, (a.row(i) - b.row(j)).squaredNorm());
    return out;
}

Eigen::MatrixXd kernel_matrix(const MultiKernel& mk, const Eigen::Ref<const Eigen::MatrixXd>& a,
                              const Eigen::Ref<const Eigen::MatrixXd>& b) {
    mk.validate();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), b.rows());
    for (std::size_t g = 0; g < mk.kernels.size(); ++g)
        if (mk.weights[g] != 0.0) out += mk.weights[g] * kernel_matrix(mk.kernels[g], a, b);
    return out;
}

GramMatrix multi_gram(const MultiKernel& mk, const Eigen::Ref<const Eigen::MatrixXd>& source,
                      const Eigen::Ref<const Eigen::MatrixXd>& target) {
    if (source.cols() != target.cols()) throw std::invalid_argument("kernels: source and target widths differ");
    Eigen::MatrixXd stacked(source.rows() + target.rows(), source.cols());
    stacked << source, target;
    Eigen::MatrixXd k = kernel_matrix(mk, stacked, stacked);
    // The linear product path can leave rounding asymmetry.
    k = 0.5 * (k + k.transpose()).eval();
    return {std::move(k), source.rows(), target.rows()};
}

}  // namespace rss_sentinel
