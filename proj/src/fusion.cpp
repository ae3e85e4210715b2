#include "rss_sentinel/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "rss_sentinel/random.hpp"

namespace rss_sentinel {
namespace {

using BranchActs = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct BranchCache {
    BranchActs z1;  // 4 x p
    BranchActs z2;  // 8 x p
};

struct RowCache {
    std::array<BranchCache, kBranches> branches;
    Eigen::VectorXd concat;  // 64
    Eigen::VectorXd hidden;  // pre-ReLU fusion layer
    Eigen::VectorXd fusion;
    Eigen::VectorXd probs;
};

double relu(double v) { return v > 0.0 ? v : 0.0; }

template <typename Span>
auto flat(Span& m) {
    return std::span(m.data(), static_cast<std::size_t>(m.size()));
}

// Conv stage 1 and 2 of one branch over a length-p block.
Eigen::Matrix<double, kConv2Channels, 1> run_branch(const BranchParams& bp,
                                                    const Eigen::Ref<const Eigen::VectorXd>& block,
                                                    BranchCache& cache) {
    const auto p = block.size();
    cache.z1.resize(kConv1Channels, p);
    for (int c = 0; c < kConv1Channels; ++c)
        for (Eigen::Index i = 0; i < p; ++i) {
            double acc = bp.conv1_b(c);
            for (int t = 0; t < kKernelWidth; ++t) {
                const Eigen::Index src = i + t - 1;
                if (src >= 0 && src < p) acc += bp.conv1_w(c, t) * block(src);
            }
            cache.z1(c, i) = acc;
        }
    cache.z2.resize(kConv2Channels, p);
    Eigen::Matrix<double, kConv2Channels, 1> pooled;
    for (int o = 0; o < kConv2Channels; ++o) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < p; ++i) {
            double acc = bp.conv2_b(o);
            for (int c = 0; c < kConv1Channels; ++c)
                for (int t = 0; t < kKernelWidth; ++t) {
                    const Eigen::Index src = i + t - 1;
                    if (src >= 0 && src < p) acc += bp.conv2_w(o, c * kKernelWidth + t) * relu(cache.z1(c, src));
                }
            cache.z2(o, i) = acc;
            sum += relu(acc);
        }
        pooled(o) = sum / static_cast<double>(p);
    }
    return pooled;
}

void run_row(const FusionNet& net, const Eigen::Ref<const Eigen::VectorXd>& row, bool with_logits,
             RowCache& cache) {
    if (row.size() != net.input_width())
        throw std::invalid_argument("fusion: input length " + std::to_string(row.size()) + " != 8p = " +
                                    std::to_string(net.input_width()));
    if (!row.allFinite()) throw std::invalid_argument("fusion: non-finite input");
    const int p = net.paths;
    cache.concat.resize(kConcatWidth);
    for (int b = 0; b < kBranches; ++b)
        cache.concat.segment<kConv2Channels>(b * kConv2Channels) =
            run_branch(net.params.branches[static_cast<std::size_t>(b)], row.segment(b * p, p),
                       cache.branches[static_cast<std::size_t>(b)]);
    cache.hidden = net.params.fuse_w * cache.concat + net.params.fuse_b;
    cache.fusion = cache.hidden.cwiseMax(0.0);
    if (!with_logits) return;
    const Eigen::VectorXd logits = net.params.out_w * cache.fusion + net.params.out_b;
    const double top = logits.maxCoeff();
    const Eigen::VectorXd e = (logits.array() - top).exp().matrix();
    cache.probs = e / e.sum();
}

double row_loss(const RowCache& cache, int label) {
    return -std::log(std::max(cache.probs(label), std::numeric_limits<double>::min()));
}

void check_labels(std::span<const int> labels, int num_classes) {
    for (int y : labels)
        if (y < 0 || y >= num_classes)
            throw std::invalid_argument("fusion: label " + std::to_string(y) + " out of range 0.." +
                                        std::to_string(num_classes - 1));
}

void accumulate_row_grads(const FusionNet& net, const Eigen::Ref<const Eigen::VectorXd>& row,
                          const RowCache& cache, int label, double scale, FusionParams& g) {
    const auto& prm = net.params;
    const int p = net.paths;
    Eigen::VectorXd dlogits = cache.probs;
    dlogits(label) -= 1.0;
    dlogits *= scale;
    g.out_w.noalias() += dlogits * cache.fusion.transpose();
    g.out_b += dlogits;
    Eigen::VectorXd dhidden = prm.out_w.transpose() * dlogits;
    for (Eigen::Index i = 0; i < dhidden.size(); ++i)
        if (cache.hidden(i) <= 0.0) dhidden(i) = 0.0;
    g.fuse_w.noalias() += dhidden * cache.concat.transpose();
    g.fuse_b += dhidden;
    const Eigen::VectorXd dconcat = prm.fuse_w.transpose() * dhidden;

    for (int b = 0; b < kBranches; ++b) {
        const auto& bp = prm.branches[static_cast<std::size_t>(b)];
        const auto& bc = cache.branches[static_cast<std::size_t>(b)];
        auto& gb = g.branches[static_cast<std::size_t>(b)];
        const auto block = row.segment(b * p, p);
        BranchActs dz2(kConv2Channels, p);
        for (int o = 0; o < kConv2Channels; ++o) {
            const double dpool = dconcat(b * kConv2Channels + o) / static_cast<double>(p);
            for (int i = 0; i < p; ++i) dz2(o, i) = bc.z2(o, i) > 0.0 ? dpool : 0.0;
        }
        BranchActs da1 = BranchActs::Zero(kConv1Channels, p);
        for (int o = 0; o < kConv2Channels; ++o)
            for (int i = 0; i < p; ++i) {
                const double d = dz2(o, i);
                if (d == 0.0) continue;
                gb.conv2_b(o) += d;
                for (int c = 0; c < kConv1Channels; ++c)
                    for (int t = 0; t < kKernelWidth; ++t) {
                        const int src = i + t - 1;
                        if (src < 0 || src >= p) continue;
                        gb.conv2_w(o, c * kKernelWidth + t) += d * relu(bc.z1(c, src));
                        da1(c, src) += d * bp.conv2_w(o, c * kKernelWidth + t);
                    }
            }
        for (int c = 0; c < kConv1Channels; ++c)
            for (int i = 0; i < p; ++i) {
                if (bc.z1(c, i) <= 0.0) continue;
                const double d = da1(c, i);
                gb.conv1_b(c) += d;
                for (int t = 0; t < kKernelWidth; ++t) {
                    const int src = i + t - 1;
                    if (src >= 0 && src < p) gb.conv1_w(c, t) += d * block(src);
                }
            }
    }
}

}  // namespace

FusionParams FusionParams::zeros(int d_fused, int num_classes) {
    FusionParams z;
    for (auto& b : z.branches) {
        b.conv1_w.setZero();
        b.conv1_b.setZero();
        b.conv2_w.setZero();
        b.conv2_b.setZero();
    }
    z.fuse_w.setZero(d_fused, kConcatWidth);
    z.fuse_b.setZero(d_fused);
    z.out_w.setZero(num_classes, d_fused);
    z.out_b.setZero(num_classes);
    return z;
}

std::vector<std::span<double>> FusionParams::tensors() {
    std::vector<std::span<double>> out;
    for (auto& b : branches) {
        out.push_back(flat(b.conv1_w));
        out.push_back(flat(b.conv1_b));
        out.push_back(flat(b.conv2_w));
        out.push_back(flat(b.conv2_b));
    }
    out.push_back(flat(fuse_w));
    out.push_back(flat(fuse_b));
    out.push_back(flat(out_w));
    out.push_back(flat(out_b));
    return out;
}

std::vector<std::span<const double>> FusionParams::tensors() const {
    auto mut = const_cast<FusionParams*>(this)->tensors();
    return {mut.begin(), mut.end()};
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("fusion.train: learning_rate must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("fusion.train: momentum must be in [0,1)");
    if (epochs < 1) throw std::invalid_argument("fusion.train: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("fusion.train: batch_size must be >= 1");
    if (!(clip_norm >= 0.0)) throw std::invalid_argument("fusion.train: clip_norm must be >= 0");
}

FusionNet init_network(int paths, int num_classes, int d_fused, std::uint64_t seed) {
    if (paths < kKernelWidth)
        throw std::invalid_argument("fusion: p = " + std::to_string(paths) + " is smaller than the kernel width 3");
    if (num_classes < 2) throw std::invalid_argument("fusion: K must be >= 2");
    if (d_fused < 1) throw std::invalid_argument("fusion: d_fused must be >= 1");

    FusionNet net{paths, num_classes, d_fused, seed, FusionParams::zeros(d_fused, num_classes)};
    std::mt19937_64 rng(mix_seed(seed, 0));
    auto glorot = [&rng](std::span<double> w, int fan_in, int fan_out) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : w) v = dist(rng);
    };
    for (auto& b : net.params.branches) {
        glorot(flat(b.conv1_w), kKernelWidth, kConv1Channels * kKernelWidth);
        glorot(flat(b.conv2_w), kConv1Channels * kKernelWidth, kConv2Channels * kKernelWidth);
    }
    glorot(flat(net.params.fuse_w), kConcatWidth, d_fused);
    glorot(flat(net.params.out_w), d_fused, num_classes);
    return net;
}

ForwardResult forward(const FusionNet& net, const Eigen::Ref<const Eigen::VectorXd>& row, ForwardMode mode) {
    RowCache cache;
    const bool with_logits = mode == ForwardMode::with_logits;
    run_row(net, row, with_logits, cache);
    ForwardResult out{cache.fusion, std::nullopt};
    if (with_logits) out.probabilities = cache.probs;
    return out;
}

Eigen::Matrix<double, kConv2Channels, 1> branch_output(const FusionNet& net,
                                                        const Eigen::Ref<const Eigen::VectorXd>& row, int branch) {
    if (row.size() != net.input_width()) throw std::invalid_argument("fusion: input length mismatch");
    if (branch < 0 || branch >= kBranches) throw std::invalid_argument("fusion: branch out of range");
    BranchCache cache;
    return run_branch(net.params.branches[static_cast<std::size_t>(branch)],
                      row.segment(branch * net.paths, net.paths), cache);
}

LossAndGrads loss_and_grads(const FusionNet& net, const Eigen::Ref<const Eigen::MatrixXd>& rows,
                            std::span<const int> labels) {
    if (rows.rows() == 0) throw std::invalid_argument("fusion: empty batch");
    if (static_cast<std::size_t>(rows.rows()) != labels.size())
        throw std::invalid_argument("fusion: batch rows and labels differ in length");
    check_labels(labels, net.num_classes);
    LossAndGrads out{0.0, FusionParams::zeros(net.d_fused, net.num_classes)};
    const double scale = 1.0 / static_cast<double>(rows.rows());
    RowCache cache;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        const Eigen::VectorXd row = rows.row(r).transpose();
        run_row(net, row, true, cache);
        const int y = labels[static_cast<std::size_t>(r)];
        out.loss += row_loss(cache, y) * scale;
        accumulate_row_grads(net, row, cache, y, scale, out.grads);
    }
    return out;
}

double batch_loss(const FusionNet& net, const Eigen::Ref<const Eigen::MatrixXd>& rows,
                  std::span<const int> labels) {
    if (rows.rows() == 0) throw std::invalid_argument("fusion: empty batch");
    check_labels(labels, net.num_classes);
    RowCache cache;
    double loss = 0.0;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        run_row(net, rows.row(r).transpose(), true, cache);
        loss += row_loss(cache, labels[static_cast<std::size_t>(r)]);
    }
    return loss / static_cast<double>(rows.rows());
}

TrainResult train(const FusionNet& net, const FeatureMatrix& source, const TrainConfig& cfg) {
    cfg.validate();
    if (!source.has_labels()) throw std::invalid_argument("fusion.train: source features are unlabeled");
    if (!source.normalized) throw std::invalid_argument("fusion.train: source features are not normalized");
    if (source.values.cols() != net.input_width())
        throw std::invalid_argument("fusion.train: feature width does not match the network");

    TrainResult result{net, {}};
    FusionNet& model = result.net;
    FusionParams velocity = FusionParams::zeros(net.d_fused, net.num_classes);
    const auto n = static_cast<std::size_t>(source.rows());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(cfg.shuffle_seed, 1));
    const auto batch = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            Eigen::MatrixXd rows(static_cast<Eigen::Index>(stop - start), source.values.cols());
            std::vector<int> labels;
            for (std::size_t i = start; i < stop; ++i) {
                rows.row(static_cast<Eigen::Index>(i - start)) = source.values.row(static_cast<Eigen::Index>(order[i]));
                labels.push_back(source.labels[order[i]]);
            }
            auto lg = loss_and_grads(model, rows, labels);
            epoch_loss += lg.loss * static_cast<double>(stop - start);
            auto params = model.params.tensors();
            auto vel = velocity.tensors();
            auto grads = lg.grads.tensors();
            double step = cfg.learning_rate;
            if (cfg.clip_norm > 0.0) {
                double sq = 0.0;
                for (const auto& g : grads)
                    for (double v : g) sq += v * v;
                const double norm = std::sqrt(sq);
                if (norm > cfg.clip_norm) step *= cfg.clip_norm / norm;
            }
            for (std::size_t k = 0; k < params.size(); ++k)
                for (std::size_t i = 0; i < params[k].size(); ++i) {
                    vel[k][i] = cfg.momentum * vel[k][i] - step * grads[k][i];
                    params[k][i] += vel[k][i];
                }
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(n));
    }
    return result;
}

FusionFeatureMatrix fuse(const FusionNet& net, const FeatureMatrix& features) {
    if (!features.normalized) throw std::invalid_argument("fusion: features are not normalized");
    if (features.values.cols() != net.input_width())
        throw std::invalid_argument("fusion: feature width " + std::to_string(features.values.cols()) +
                                    " does not match 8p = " + std::to_string(net.input_width()));
    FusionFeatureMatrix out;
    out.values.resize(features.rows(), net.d_fused);
    RowCache cache;
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        run_row(net, features.values.row(r).transpose(), false, cache);
        out.values.row(r) = cache.fusion.transpose();
    }
    out.labels = features.labels;
    return out;
}

FusionFeatureMatrix identity_fusion(const FeatureMatrix& features) {
    if (!features.normalized) throw std::invalid_argument("fusion: features are not normalized");
    return {features.values, features.labels};
}

}  // namespace rss_sentinel
