#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rss_sentinel/features.hpp"

namespace rss_sentinel {

inline constexpr int kBranches = kFeaturesPerPath;
inline constexpr int kKernelWidth = 3;
inline constexpr int kConv1Channels = 4;
inline constexpr int kConv2Channels = 8;
inline constexpr int kConcatWidth = kBranches * kConv2Channels;

// One single-feature branch: conv(1->4, w3, pad 1), ReLU, conv(4->8, w3, pad 1),
// ReLU, global average pool.
struct BranchParams {
    Eigen::Matrix<double, kConv1Channels, kKernelWidth, Eigen::RowMajor> conv1_w;
    Eigen::Matrix<double, kConv1Channels, 1> conv1_b;
    // Row o, column c * kKernelWidth + t.
    Eigen::Matrix<double, kConv2Channels, kConv1Channels * kKernelWidth, Eigen::RowMajor> conv2_w;
    Eigen::Matrix<double, kConv2Channels, 1> conv2_b;
};

struct FusionParams {
    std::array<BranchParams, kBranches> branches;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> fuse_w;  // d_fused x 64
    Eigen::VectorXd fuse_b;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out_w;  // K x d_fused
    Eigen::VectorXd out_b;

    static FusionParams zeros(int d_fused, int num_classes);

    // Every parameter tensor as a flat row-major view, in a fixed order.
    std::vector<std::span<double>> tensors();
    std::vector<std::span<const double>> tensors() const;
};

struct FusionNet {
    int paths = 0;
    int num_classes = 0;
    int d_fused = 0;
    std::uint64_t seed = 0;
    FusionParams params;

    int input_width() const { return kFeaturesPerPath * paths; }
};

struct TrainConfig {
    double learning_rate = 0.05;
    double momentum = 0.9;
    int epochs = 400;
    int batch_size = 16;
    double clip_norm = 1.0;  // global gradient-norm cap per step; 0 disables
    std::uint64_t shuffle_seed = 0;
    bool shuffle = true;

    void validate() const;
};

struct FusionFeatureMatrix {
    Eigen::MatrixXd values;
    std::vector<int> labels;

    Eigen::Index rows() const { return values.rows(); }
};

struct ForwardResult {
    Eigen::VectorXd fusion;
    std::optional<Eigen::VectorXd> probabilities;
};

enum class ForwardMode { with_logits, features_only };

FusionNet init_network(int paths, int num_classes, int d_fused, std::uint64_t seed);

ForwardResult forward(const FusionNet& net, const Eigen::Ref<const Eigen::VectorXd>& row,
                      ForwardMode mode = ForwardMode::with_logits);

// Pooled length-8 output of branch `branch` for a full input row.
Eigen::Matrix<double, kConv2Channels, 1> branch_output(const FusionNet& net,
                                                        const Eigen::Ref<const Eigen::VectorXd>& row,
                                                        int branch);

struct LossAndGrads {
    double loss = 0.0;
    FusionParams grads;
};

// Mean cross-entropy over the batch and its exact gradient.
LossAndGrads loss_and_grads(const FusionNet& net, const Eigen::Ref<const Eigen::MatrixXd>& rows,
                            std::span<const int> labels);

double batch_loss(const FusionNet& net, const Eigen::Ref<const Eigen::MatrixXd>& rows,
                  std::span<const int> labels);

struct TrainResult {
    FusionNet net;
    std::vector<double> loss_history;  // per-epoch mean loss
};

TrainResult train(const FusionNet& net, const FeatureMatrix& source, const TrainConfig& cfg);

FusionFeatureMatrix fuse(const FusionNet& net, const FeatureMatrix& features);

// Ablation path without the network: the normalized features themselves.
FusionFeatureMatrix identity_fusion(const FeatureMatrix& features);

}  // namespace rss_sentinel
