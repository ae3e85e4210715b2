#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rss_sentinel {

struct KnnModel {
    Eigen::MatrixXd train_points;
    std::vector<int> train_labels;
    int k = 5;
};

KnnModel knn_fit(const Eigen::Ref<const Eigen::MatrixXd>& points, std::span<const int> labels, int k = 5);

// Majority vote of the k nearest training points. Vote ties go to the
// smallest state id, distance ties to the lower training index.
std::vector<int> knn_predict(const KnnModel& model, const Eigen::Ref<const Eigen::MatrixXd>& queries);

struct SvmConfig {
    double reg_strength = 1e-3;
    int epochs = 60;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

// One-vs-rest linear scores: score_c(x) = weights.row(c) . x + biases(c).
struct LinearSvmModel {
    Eigen::MatrixXd weights;  // K x d
    Eigen::VectorXd biases;
    SvmConfig config;
};

LinearSvmModel svm_train(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> y, int num_classes,
                         const SvmConfig& cfg);

std::vector<int> svm_predict(const LinearSvmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& queries);

// Sum over classes of mean hinge loss plus (reg/2) ||w_c||^2.
double svm_objective(const LinearSvmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> y);

enum class ClassifierKind { knn, svm };

std::string_view to_string(ClassifierKind kind);
ClassifierKind classifier_from_string(std::string_view name);

struct ClassifierConfig {
    ClassifierKind kind = ClassifierKind::knn;
    int knn_k = 5;
    SvmConfig svm;
};

std::vector<int> fit_predict(const ClassifierConfig& cfg, const Eigen::Ref<const Eigen::MatrixXd>& train,
                             std::span<const int> labels, int num_classes,
                             const Eigen::Ref<const Eigen::MatrixXd>& queries);

}  // namespace rss_sentinel
