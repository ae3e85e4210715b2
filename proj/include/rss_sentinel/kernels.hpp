#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rss_sentinel {

enum class KernelKind { linear, gaussian, laplace, inverse_square_distance, inverse_distance };

inline constexpr KernelKind kAllKernelKinds[] = {KernelKind::linear, KernelKind::gaussian, KernelKind::laplace,
                                                 KernelKind::inverse_square_distance,
                                                 KernelKind::inverse_distance};

std::string_view to_string(KernelKind kind);
KernelKind kernel_kind_from_string(std::string_view name);

struct KernelSpec {
    KernelKind kind = KernelKind::gaussian;
    double gamma = 1.0;  // ignored by the linear kernel

    void validate() const;
};

// Convex combination sum_g weights[g] * kernels[g].
struct MultiKernel {
    std::vector<KernelSpec> kernels;
    std::vector<double> weights;

    void validate() const;
};

// How the median pairwise distance m becomes a kernel scale.
enum class GammaMode {
    calibrated,     // 1/m^2 for gaussian, laplace and inverse-square; 1/m for inverse-distance
    paper_literal,  // gamma = m for every kind
};

std::string_view to_string(GammaMode mode);
GammaMode gamma_mode_from_string(std::string_view name);

double kernel_eval(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

double kernel_eval(const MultiKernel& mk, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& y);

// Median Euclidean distance over all unordered pairs of distinct row indices.
// Throws when the median is zero.
double median_distance(const Eigen::Ref<const Eigen::MatrixXd>& rows);

double gamma_for(KernelKind kind, double median, GammaMode mode);

// All five kinds with scales derived from `source`; uniform weights unless given.
MultiKernel median_multi_kernel(const Eigen::Ref<const Eigen::MatrixXd>& source, GammaMode mode,
                                std::optional<std::vector<double>> weights = std::nullopt);

// Source rows first, then target rows.
struct GramMatrix {
    Eigen::MatrixXd values;
    Eigen::Index n_s = 0;
    Eigen::Index n_t = 0;

    Eigen::Index size() const { return n_s + n_t; }
};

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& a,
                              const Eigen::Ref<const Eigen::MatrixXd>& b);

Eigen::MatrixXd kernel_matrix(const MultiKernel& mk, const Eigen::Ref<const Eigen::MatrixXd>& a,
                              const Eigen::Ref<const Eigen::MatrixXd>& b);

GramMatrix multi_gram(const MultiKernel& mk, const Eigen::Ref<const Eigen::MatrixXd>& source,
                      const Eigen::Ref<const Eigen::MatrixXd>& target);

}  // namespace rss_sentinel
