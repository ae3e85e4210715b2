#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rss_sentinel/kernels.hpp"

namespace rss_sentinel {

// Coefficients whose trace against a stacked Gram gives one MMD term.
// class_index 0 is the marginal term; k >= 1 is the conditional term of
// state k - 1 (state 0 is silence).
struct MmdCoefficientMatrix {
    Eigen::MatrixXd values;
    int class_index = 0;
};

// Signed indicator a with L = a a^T: 1/n_s on source rows, -1/n_t on target rows.
Eigen::VectorXd marginal_indicator(Eigen::Index n_s, Eigen::Index n_t);

// Same for class k; all zero when either domain has no member of the class.
Eigen::VectorXd class_indicator(std::span<const int> labels_s, std::span<const int> labels_t, int k);

MmdCoefficientMatrix build_L0(Eigen::Index n_s, Eigen::Index n_t);

MmdCoefficientMatrix build_Lk(std::span<const int> labels_s, std::span<const int> labels_t, int k);

// L_0 + sum_{k=1..K} L_k.
Eigen::MatrixXd build_L_total(std::span<const int> labels_s, std::span<const int> labels_t, int num_states);

// Biased MMD^2 by explicit kernel double sums.
double mmd_direct(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& a,
                  const Eigen::Ref<const Eigen::MatrixXd>& b);
double mmd_direct(const MultiKernel& mk, const Eigen::Ref<const Eigen::MatrixXd>& a,
                  const Eigen::Ref<const Eigen::MatrixXd>& b);

struct MixedMmd {
    double total = 0.0;
    std::vector<double> terms;  // index 0 marginal, k conditional for state k - 1
};

// tr(K L_k) for k = 0..K and their sum.
MixedMmd mixed_mmd(const Eigen::Ref<const Eigen::MatrixXd>& gram, std::span<const int> labels_s,
                   std::span<const int> labels_t, int num_states);

inline MixedMmd mixed_mmd(const GramMatrix& gram, std::span<const int> labels_s, std::span<const int> labels_t,
                          int num_states) {
    return mixed_mmd(gram.values, labels_s, labels_t, num_states);
}

}  // namespace rss_sentinel
