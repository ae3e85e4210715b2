#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "rss_sentinel/kernels.hpp"

namespace rss_sentinel {

// Fewer usable generalized directions than requested.
class RankError : public std::runtime_error {
public:
    RankError(int requested, int available)
        : std::runtime_error("transfer: requested d_sub = " + std::to_string(requested) + " but only " +
                             std::to_string(available) + " generalized eigenvalue(s) are nonzero"),
          requested_(requested),
          available_(available) {}

    int requested() const { return requested_; }
    int available() const { return available_; }

private:
    int requested_;
    int available_;
};

inline constexpr double kDefaultLambda = 0.1;
inline constexpr int kDefaultSubspaceDim = 40;
inline constexpr double kRankTolerance = 1e-9;

enum class DimPolicy { exact, clamp };

struct TransferModel {
    Eigen::MatrixXd W;               // (n_s + n_t) x d_sub
    Eigen::VectorXd eigenvalues;     // z = 1 / mu, ascending
    double lambda = kDefaultLambda;
    int d_sub = 0;
    Eigen::Index n_s = 0;
    Eigen::Index n_t = 0;
};

Eigen::MatrixXd centering_matrix(Eigen::Index n);

// Objective matrix K L K + lambda I.
Eigen::MatrixXd objective_matrix(const Eigen::Ref<const Eigen::MatrixXd>& gram,
                                 const Eigen::Ref<const Eigen::MatrixXd>& l_total, double lambda);

// Constraint matrix K H K.
Eigen::MatrixXd constraint_matrix(const Eigen::Ref<const Eigen::MatrixXd>& gram);

// Minimizes tr(W^T (K L K + lambda I) W) subject to W^T K H K W = I by solving
// (K H K) w = mu (K L K + lambda I) w through a Cholesky reduction of the
// positive definite left factor; keeps the d_sub largest mu.
TransferModel solve_transfer(const GramMatrix& gram, const Eigen::Ref<const Eigen::MatrixXd>& l_total, double lambda,
                             int d_sub, DimPolicy policy = DimPolicy::exact);

struct Embedding {
    Eigen::MatrixXd source;
    Eigen::MatrixXd target;
};

Embedding embed(const TransferModel& model, const GramMatrix& gram);

// Gaussian random W rescaled so that W^T K H K W = I; a baseline with the
// same constraint as the solved migration matrix.
Eigen::MatrixXd constrained_random_projection(const GramMatrix& gram, int d_sub, std::uint64_t seed);

}  // namespace rss_sentinel
