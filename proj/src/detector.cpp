#include "rss_sentinel/detector.hpp"

#include <stdexcept>
#include <string>

#include "rss_sentinel/mkmmd.hpp"

namespace rss_sentinel {

void IterationConfig::validate() const {
    if (max_iterations < 1) throw std::invalid_argument("iteration: max_iterations must be >= 1");
    if (!(label_change_tol >= 0.0 && label_change_tol < 1.0))
        throw std::invalid_argument("iteration: label_change_tol must be in [0,1)");
}

Metrics metrics(std::span<const int> truth, std::span<const int> predicted, int num_states) {
    if (truth.empty()) throw std::invalid_argument("metrics: empty label vectors");
    if (truth.size() != predicted.size())
        throw std::invalid_argument("metrics: truth has " + std::to_string(truth.size()) + " labels, prediction has " +
                                    std::to_string(predicted.size()));
    for (std::span<const int> v : {truth, predicted})
        for (int s : v)
            if (s < 0 || s >= num_states)
                throw std::invalid_argument("metrics: state " + std::to_string(s) + " out of range 0.." +
                                            std::to_string(num_states - 1));

    Metrics m;
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(num_states, num_states);
    std::size_t silence = 0, false_alarm = 0, intrusion = 0, missed = 0, correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predicted[i];
        counts(t, p) += 1.0;
        correct += t == p;
        if (t == 0) {
            ++silence;
            false_alarm += p != 0;
        } else {
            ++intrusion;
            missed += p == 0;
        }
    }
    if (silence > 0) m.fp = static_cast<double>(false_alarm) / static_cast<double>(silence);
    if (intrusion > 0) m.fn = static_cast<double>(missed) / static_cast<double>(intrusion);
    m.da = static_cast<double>(correct) / static_cast<double>(truth.size());
    m.confusion = Eigen::MatrixXd::Zero(num_states, num_states);
    m.row_support.assign(static_cast<std::size_t>(num_states), false);
    for (int r = 0; r < num_states; ++r) {
        const double support = counts.row(r).sum();
        if (support > 0.0) {
            m.confusion.row(r) = counts.row(r) / support;
            m.row_support[static_cast<std::size_t>(r)] = true;
        }
    }
    return m;
}

namespace {

double change_fraction(const std::vector<int>& a, const std::vector<int>& b) {
    std::size_t changed = 0;
    for (std::size_t i = 0; i < a.size(); ++i) changed += a[i] != b[i];
    return static_cast<double>(changed) / static_cast<double>(a.size());
}

}  // namespace

const char* to_string(EmbeddingScale s) {
    return s == EmbeddingScale::whitened ? "whitened" : "eigen_weighted";
}

EmbeddingScale embedding_scale_from_string(const std::string& name) {
    if (name == "eigen_weighted") return EmbeddingScale::eigen_weighted;
    if (name == "whitened") return EmbeddingScale::whitened;
    throw std::invalid_argument("unknown embedding scale '" + name + "'");
}

DetectionReport run_detection(const DomainDataset& source, const DomainDataset& target, const MultiKernel& mk,
                              double lambda, int d_sub, const IterationConfig& cfg, int num_states) {
    cfg.validate();
    mk.validate();
    if (source.labels.empty()) throw std::invalid_argument("detector: source domain has no labels");
    if (static_cast<std::size_t>(source.features.rows()) != source.labels.size())
        throw std::invalid_argument("detector: source features and labels differ in length");
    if (target.features.rows() == 0) throw std::invalid_argument("detector: target domain is empty");
    if (source.features.cols() != target.features.cols())
        throw std::invalid_argument("detector: source and target feature widths differ");
    const bool has_truth = !target.labels.empty();
    if (has_truth && static_cast<std::size_t>(target.features.rows()) != target.labels.size())
        throw std::invalid_argument("detector: target features and labels differ in length");

    DetectionReport report;
    report.num_states = num_states;
    report.initial_labels = fit_predict(cfg.classifier, source.features, source.labels, num_states, target.features);
    if (has_truth) report.baseline = metrics(target.labels, report.initial_labels, num_states);

    const GramMatrix gram = multi_gram(mk, source.features, target.features);
    std::vector<int> labels = report.initial_labels;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        const Eigen::MatrixXd l_total = build_L_total(source.labels, labels, num_states);
        report.model = solve_transfer(gram, l_total, lambda, d_sub, DimPolicy::clamp);
        const Embedding e = embed(report.model, gram);

        IterationRecord rec;
        rec.d_sub = report.model.d_sub;
        Eigen::MatrixXd stacked(gram.size(), rec.d_sub);
        stacked << e.source, e.target;
        rec.mixed_mmd_total = mixed_mmd(Eigen::MatrixXd(stacked * stacked.transpose()), source.labels, labels,
                                        num_states).total;

        std::vector<int> next;
        if (cfg.embedding_scale == EmbeddingScale::eigen_weighted) {
            const Eigen::VectorXd w = report.model.eigenvalues.cwiseInverse().cwiseSqrt();
            next = fit_predict(cfg.classifier, e.source * w.asDiagonal(), source.labels, num_states,
                               e.target * w.asDiagonal());
        } else {
            next = fit_predict(cfg.classifier, e.source, source.labels, num_states, e.target);
        }
        rec.label_change_fraction = change_fraction(labels, next);
        labels = std::move(next);
        if (has_truth) rec.da = metrics(target.labels, labels, num_states).da;
        report.per_iteration.push_back(rec);
        report.iterations_run = it + 1;
        if (rec.label_change_fraction <= cfg.label_change_tol) {
            report.converged = true;
            break;
        }
    }
    report.final_labels = labels;
    if (has_truth) report.result = metrics(target.labels, labels, num_states);
    return report;
}

}  // namespace rss_sentinel
