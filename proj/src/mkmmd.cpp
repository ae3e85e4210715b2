#include "rss_sentinel/mkmmd.hpp"

#include <stdexcept>
#include <string>

namespace rss_sentinel {

Eigen::VectorXd marginal_indicator(Eigen::Index n_s, Eigen::Index n_t) {
    if (n_s < 1 || n_t < 1) throw std::invalid_argument("mmd: n_s and n_t must both be >= 1");
    Eigen::VectorXd a(n_s + n_t);
    a.head(n_s).setConstant(1.0 / static_cast<double>(n_s));
    a.tail(n_t).setConstant(-1.0 / static_cast<double>(n_t));
    return a;
}

Eigen::VectorXd class_indicator(std::span<const int> labels_s, std::span<const int> labels_t, int k) {
    if (k < 1) throw std::invalid_argument("mmd: class index must be >= 1, got " + std::to_string(k));
    const int state = k - 1;
    const auto n_s = static_cast<Eigen::Index>(labels_s.size());
    const auto n_t = static_cast<Eigen::Index>(labels_t.size());
    Eigen::Index count_s = 0;
    Eigen::Index count_t = 0;
    for (int y : labels_s) count_s += y == state;
    for (int y : labels_t) count_t += y == state;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n_s + n_t);
    if (count_s == 0 || count_t == 0) return a;
    for (Eigen::Index i = 0; i < n_s; ++i)
        if (labels_s[static_cast<std::size_t>(i)] == state) a(i) = 1.0 / static_cast<double>(count_s);
    for (Eigen::Index i = 0; i < n_t; ++i)
        if (labels_t[static_cast<std::size_t>(i)] == state) a(n_s + i) = -1.0 / static_cast<double>(count_t);
    return a;
}

MmdCoefficientMatrix build_L0(Eigen::Index n_s, Eigen::Index n_t) {
    const Eigen::VectorXd a = marginal_indicator(n_s, n_t);
    return {a * a.transpose(), 0};
}

MmdCoefficientMatrix build_Lk(std::span<const int> labels_s, std::span<const int> labels_t, int k) {
    const Eigen::VectorXd a = class_indicator(labels_s, labels_t, k);
    return {a * a.transpose(), k};
}

Eigen::MatrixXd build_L_total(std::span<const int> labels_s, std::span<const int> labels_t, int num_states) {
    const auto n_s = static_cast<Eigen::Index>(labels_s.size());
    const auto n_t = static_cast<Eigen::Index>(labels_t.size());
    Eigen::MatrixXd total = build_L0(n_s, n_t).values;
    for (int k = 1; k <= num_states; ++k) {
        const Eigen::VectorXd a = class_indicator(labels_s, labels_t, k);
        if (!a.isZero(0.0)) total.noalias() += a * a.transpose();
    }
    return total;
}

double mmd_direct(const KernelSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& a,
                  const Eigen::Ref<const Eigen::MatrixXd>& b) {
    MultiKernel mk{{spec}, {1.0}};
    return mmd_direct(mk, a, b);
}

double mmd_direct(const MultiKernel& mk, const Eigen::Ref<const Eigen::MatrixXd>& a,
                  const Eigen::Ref<const Eigen::MatrixXd>& b) {
    if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("mmd: empty sample set");
    if (a.cols() != b.cols()) throw std::invalid_argument("mmd: sample widths differ");
    mk.validate();
    double aa = 0.0;
    double bb = 0.0;
    double ab = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.rows(); ++j) aa += kernel_eval(mk, a.row(i).transpose(), a.row(j).transpose());
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j) bb += kernel_eval(mk, b.row(i).transpose(), b.row(j).transpose());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j) ab += kernel_eval(mk, a.row(i).transpose(), b.row(j).transpose());
    const auto na = static_cast<double>(a.rows());
    const auto nb = static_cast<double>(b.rows());
    return aa / (na * na) + bb / (nb * nb) - 2.0 * ab / (na * nb);
}

MixedMmd mixed_mmd(const Eigen::Ref<const Eigen::MatrixXd>& gram, std::span<const int> labels_s,
                   std::span<const int> labels_t, int num_states) {
    const auto n = static_cast<Eigen::Index>(labels_s.size() + labels_t.size());
    if (gram.rows() != n || gram.cols() != n)
        throw std::invalid_argument("mmd: Gram is " + std::to_string(gram.rows()) + "x" + std::to_string(gram.cols()) +
                                    " but there are " + std::to_string(n) + " labels");
    for (std::span<const int> labels : {labels_s, labels_t})
        for (int y : labels)
            if (y < 0 || y >= num_states) throw std::invalid_argument("mmd: label out of range");
    MixedMmd out;
    // tr(K a a^T) = a^T K a.
    const Eigen::VectorXd a0 = marginal_indicator(static_cast<Eigen::Index>(labels_s.size()),
                                                  static_cast<Eigen::Index>(labels_t.size()));
    out.terms.push_back(a0.dot(gram * a0));
    for (int k = 1; k <= num_states; ++k) {
        const Eigen::VectorXd a = class_indicator(labels_s, labels_t, k);
        out.terms.push_back(a.isZero(0.0) ? 0.0 : a.dot(gram * a));
    }
    for (double t : out.terms) out.total += t;
    return out;
}

}  // namespace rss_sentinel
