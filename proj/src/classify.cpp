#include "rss_sentinel/classify.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "rss_sentinel/random.hpp"

namespace rss_sentinel {
namespace {

void check_training_set(const Eigen::Ref<const Eigen::MatrixXd>& points, std::span<const int> labels) {
    if (points.rows() == 0) throw std::invalid_argument("classify: empty training set");
    if (static_cast<std::size_t>(points.rows()) != labels.size())
        throw std::invalid_argument("classify: training points and labels differ in length");
    for (int y : labels)
        if (y < 0) throw std::invalid_argument("classify: negative label");
}

}  // namespace

KnnModel knn_fit(const Eigen::Ref<const Eigen::MatrixXd>& points, std::span<const int> labels, int k) {
    check_training_set(points, labels);
    if (k < 1 || k > points.rows())
        throw std::invalid_argument("classify: knn k = " + std::to_string(k) + " must be in 1.." +
                                    std::to_string(points.rows()));
    return {points, {labels.begin(), labels.end()}, k};
}

std::vector<int> knn_predict(const KnnModel& model, const Eigen::Ref<const Eigen::MatrixXd>& queries) {
    if (queries.cols() != model.train_points.cols())
        throw std::invalid_argument("classify: query width does not match the training width");
    const auto m = static_cast<std::size_t>(model.train_points.rows());
    const auto k = static_cast<std::size_t>(model.k);
    const int num_labels = *std::max_element(model.train_labels.begin(), model.train_labels.end()) + 1;

    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(queries.rows()));
    std::vector<std::pair<double, std::size_t>> dist(m);
    std::vector<int> votes(static_cast<std::size_t>(num_labels));
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        for (std::size_t i = 0; i < m; ++i)
            dist[i] = {(model.train_points.row(static_cast<Eigen::Index>(i)) - queries.row(q)).squaredNorm(), i};
        // Pair ordering breaks distance ties by training index.
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::fill(votes.begin(), votes.end(), 0);
        for (std::size_t i = 0; i < k; ++i) ++votes[static_cast<std::size_t>(model.train_labels[dist[i].second])];
        out.push_back(static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()));
    }
    return out;
}

void SvmConfig::validate() const {
    if (!(reg_strength > 0.0)) throw std::invalid_argument("classify: svm reg_strength must be > 0");
    if (epochs < 1) throw std::invalid_argument("classify: svm epochs must be >= 1");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("classify: svm learning_rate must be >= 0");
}

LinearSvmModel svm_train(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> y, int num_classes,
                         const SvmConfig& cfg) {
    cfg.validate();
    check_training_set(x, y);
    for (int label : y)
        if (label >= num_classes) throw std::invalid_argument("classify: label out of range");
    if (std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end())
        throw std::invalid_argument("classify: svm needs at least two classes in the training set");

    LinearSvmModel model{Eigen::MatrixXd::Zero(num_classes, x.cols()), Eigen::VectorXd::Zero(num_classes), cfg};
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(cfg.seed, 3));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        const double step = cfg.learning_rate / (1.0 + epoch);
        for (std::size_t i : order) {
            const auto xi = x.row(static_cast<Eigen::Index>(i));
            for (int c = 0; c < num_classes; ++c) {
                const double sign = y[i] == c ? 1.0 : -1.0;
                const double margin = sign * (model.weights.row(c).dot(xi) + model.biases(c));
                model.weights.row(c) *= 1.0 - step * cfg.reg_strength;
                if (margin < 1.0) {
                    model.weights.row(c) += step * sign * xi;
                    model.biases(c) += step * sign;
                }
            }
        }
    }
    return model;
}

std::vector<int> svm_predict(const LinearSvmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& queries) {
    if (queries.cols() != model.weights.cols())
        throw std::invalid_argument("classify: query width does not match the svm width");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(queries.rows()));
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        const Eigen::VectorXd scores = model.weights * queries.row(q).transpose() + model.biases;
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < scores.size(); ++c)
            if (scores(c) > scores(best)) best = c;
        out.push_back(static_cast<int>(best));
    }
    return out;
}

double svm_objective(const LinearSvmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> y) {
    double total = 0.0;
    const auto n = static_cast<double>(x.rows());
    for (Eigen::Index c = 0; c < model.weights.rows(); ++c) {
        double hinge = 0.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double sign = y[static_cast<std::size_t>(i)] == c ? 1.0 : -1.0;
            hinge += std::max(0.0, 1.0 - sign * (model.weights.row(c).dot(x.row(i)) + model.biases(c)));
        }
        total += hinge / n + 0.5 * model.config.reg_strength * model.weights.row(c).squaredNorm();
    }
    return total;
}

std::string_view to_string(ClassifierKind kind) { return kind == ClassifierKind::knn ? "knn" : "svm"; }

ClassifierKind classifier_from_string(std::string_view name) {
    if (name == "knn") return ClassifierKind::knn;
    if (name == "svm") return ClassifierKind::svm;
    throw std::invalid_argument("classify: unknown classifier '" + std::string(name) + "'");
}

std::vector<int> fit_predict(const ClassifierConfig& cfg, const Eigen::Ref<const Eigen::MatrixXd>& train,
                             std::span<const int> labels, int num_classes,
                             const Eigen::Ref<const Eigen::MatrixXd>& queries) {
    if (cfg.kind == ClassifierKind::knn) {
        const int k = std::min<int>(cfg.knn_k, static_cast<int>(train.rows()));
        return knn_predict(knn_fit(train, labels, k), queries);
    }
    return svm_predict(svm_train(train, labels, num_classes, cfg.svm), queries);
}

}  // namespace rss_sentinel
