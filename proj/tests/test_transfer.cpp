#include <doctest.h>

#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "rss_sentinel/kernels.hpp"
#include "rss_sentinel/mkmmd.hpp"
#include "rss_sentinel/transfer.hpp"
#include "support.hpp"

using namespace rss_sentinel;

namespace {

struct Instance {
    Eigen::MatrixXd s, t;
    std::vector<int> ls, lt;
    GramMatrix gram;
    Eigen::MatrixXd l_total;
};

// Three clustered classes; the target is the source layout shifted and rescaled.
Instance shifted_instance(std::mt19937_64& rng, Eigen::Index ns, Eigen::Index nt, int d = 4) {
    Instance in;
    const Eigen::MatrixXd centers = testing::random_matrix(3, d, rng, 2.0);
    const Eigen::VectorXd shift = testing::random_matrix(d, 1, rng, 1.5).col(0);
    in.ls = testing::random_labels(static_cast<std::size_t>(ns), 3, rng);
    in.lt = testing::random_labels(static_cast<std::size_t>(nt), 3, rng);
    in.s = testing::random_matrix(ns, d, rng, 0.4);
    in.t = testing::random_matrix(nt, d, rng, 0.6);
    for (Eigen::Index i = 0; i < ns; ++i) in.s.row(i) += centers.row(in.ls[static_cast<std::size_t>(i)]);
    for (Eigen::Index i = 0; i < nt; ++i)
        in.t.row(i) += centers.row(in.lt[static_cast<std::size_t>(i)]) + shift.transpose();
    in.gram = multi_gram(median_multi_kernel(in.s, GammaMode::calibrated), in.s, in.t);
    in.l_total = build_L_total(in.ls, in.lt, 3);
    return in;
}

Eigen::MatrixXd explicit_b(const Eigen::MatrixXd& k) {
    const Eigen::Index n = k.rows();
    const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / double(n));
    return k * h * k;
}

double embedded_mmd(const Eigen::MatrixXd& e, const std::vector<int>& ls, const std::vector<int>& lt) {
    return mixed_mmd(Eigen::MatrixXd(e * e.transpose()), ls, lt, 3).total;
}

}  // namespace

TEST_CASE("centering matrix") {
    const Eigen::MatrixXd h2 = centering_matrix(2);
    CHECK(h2(0, 0) == 0.5);
    CHECK(h2(0, 1) == -0.5);
    CHECK(h2(1, 0) == -0.5);
    CHECK(h2(1, 1) == 0.5);
    for (Eigen::Index n : {3, 7, 20}) {
        const Eigen::MatrixXd h = centering_matrix(n);
        CHECK((h * Eigen::VectorXd::Ones(n)).isZero(1e-14));
        CHECK((h * h - h).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(h.isApprox(h.transpose()));
    }
    CHECK_THROWS_AS(centering_matrix(1), std::invalid_argument);
}

TEST_CASE("constraint and objective matrices match their definitions") {
    std::mt19937_64 rng(1);
    const Instance in = shifted_instance(rng, 8, 6);
    const Eigen::MatrixXd& k = in.gram.values;
    CHECK((constraint_matrix(k) - explicit_b(k)).cwiseAbs().maxCoeff() <= 1e-10);
    const Eigen::MatrixXd a = objective_matrix(k, in.l_total, 0.1);
    const Eigen::MatrixXd expect = k * in.l_total * k + 0.1 * Eigen::MatrixXd::Identity(14, 14);
    CHECK((a - expect).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().minCoeff() >= 0.1 - 1e-9);
}

TEST_CASE("selected pairs solve the generalized problem") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const Instance in = shifted_instance(rng, 6 + trial, 5 + trial);
        const double lambda = 0.1;
        const Eigen::MatrixXd& k = in.gram.values;
        const Eigen::MatrixXd a = k * in.l_total * k + lambda * Eigen::MatrixXd::Identity(k.rows(), k.rows());
        const Eigen::MatrixXd b = explicit_b(k);
        const int d = 5;
        const TransferModel m = solve_transfer(in.gram, in.l_total, lambda, d);
        REQUIRE(m.W.cols() == d);
        for (int i = 0; i < d; ++i) {
            const double z = m.eigenvalues(i);
            const Eigen::VectorXd w = m.W.col(i);
            CHECK((a * w - z * b * w).norm() <= 1e-8 * (a.norm() + std::abs(z) * b.norm()));
            CHECK(z > 0.0);
            if (i > 0) CHECK(m.eigenvalues(i - 1) <= z);
        }
        const Eigen::MatrixXd wbw = m.W.transpose() * b * m.W;
        const Eigen::MatrixXd waw = m.W.transpose() * a * m.W;
        CHECK((wbw - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((waw - Eigen::MatrixXd(m.eigenvalues.asDiagonal())).cwiseAbs().maxCoeff() <= 1e-8);

        // Independent solver: B x = mu A x, largest mu <-> smallest z.
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(b, a, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
        const Eigen::VectorXd mu = ges.eigenvalues();
        for (int i = 0; i < d; ++i) CHECK(testing::rel_err(m.eigenvalues(i), 1.0 / mu(mu.size() - 1 - i)) <= 1e-8);
    }
}

TEST_CASE("embedding shape and objective consistency") {
    std::mt19937_64 rng(3);
    const Instance in = shifted_instance(rng, 9, 7);
    const TransferModel m = solve_transfer(in.gram, in.l_total, 0.1, 4);
    const Embedding e = embed(m, in.gram);
    CHECK(e.source.rows() == 9);
    CHECK(e.target.rows() == 7);
    CHECK(e.source.cols() == 4);
    Eigen::MatrixXd stacked(16, 4);
    stacked << e.source, e.target;
    // w^T A w = w^T K L K w + lambda w^T w
    const double lhs = (stacked.transpose() * in.l_total * stacked).trace() + 0.1 * m.W.squaredNorm();
    CHECK(testing::rel_err(lhs, m.eigenvalues.sum()) <= 1e-6);
}

TEST_CASE("rank-deficient constraint reports the available count") {
    Eigen::MatrixXd s(2, 1), t(1, 1);
    s << 1, 2;
    t << 4;
    const GramMatrix g = multi_gram(MultiKernel{{{KernelKind::linear, 1.0}}, {1.0}}, s, t);
    const Eigen::MatrixXd l = build_L0(2, 1).values;
    try {
        solve_transfer(g, l, 0.1, 2);
        FAIL("expected RankError");
    } catch (const RankError& e) {
        CHECK(e.requested() == 2);
        CHECK(e.available() == 1);
    }
    const TransferModel clamped = solve_transfer(g, l, 0.1, 2, DimPolicy::clamp);
    CHECK(clamped.d_sub == 1);
}

TEST_CASE("input validation") {
    std::mt19937_64 rng(4);
    const Instance in = shifted_instance(rng, 5, 4);
    CHECK_THROWS_AS(solve_transfer(in.gram, in.l_total, 0.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(solve_transfer(in.gram, in.l_total, 0.1, 0), std::invalid_argument);
    CHECK_THROWS_AS(solve_transfer(in.gram, in.l_total, 0.1, 9), std::invalid_argument);
    CHECK_THROWS_AS(solve_transfer(in.gram, Eigen::MatrixXd::Zero(3, 3), 0.1, 2), std::invalid_argument);
    GramMatrix bad = in.gram;
    bad.values(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(solve_transfer(bad, in.l_total, 0.1, 2), std::invalid_argument);
}

TEST_CASE("scaling the inputs keeps the linear-kernel embedded subspace") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd s = testing::random_matrix(8, 3, rng);
    const Eigen::MatrixXd t = testing::random_matrix(6, 3, rng);
    const auto ls = testing::random_labels(8, 3, rng);
    const auto lt = testing::random_labels(6, 3, rng);
    const MultiKernel lin{{{KernelKind::linear, 1.0}}, {1.0}};
    const Eigen::MatrixXd l = build_L_total(ls, lt, 3);
    const GramMatrix g1 = multi_gram(lin, s, t);
    const GramMatrix g2 = multi_gram(lin, 3.0 * s, 3.0 * t);
    const TransferModel m1 = solve_transfer(g1, l, 0.1, 3);
    const TransferModel m2 = solve_transfer(g2, l, 0.1, 3);
    const Eigen::MatrixXd e1 = g1.values * m1.W;
    const Eigen::MatrixXd e2 = g2.values * m2.W;
    const Eigen::MatrixXd q1 = Eigen::HouseholderQR<Eigen::MatrixXd>(e1).householderQ() * Eigen::MatrixXd::Identity(14, 3);
    const Eigen::MatrixXd q2 = Eigen::HouseholderQR<Eigen::MatrixXd>(e2).householderQ() * Eigen::MatrixXd::Identity(14, 3);
    const Eigen::VectorXd cosines = Eigen::JacobiSVD<Eigen::MatrixXd>(q1.transpose() * q2).singularValues();
    for (Eigen::Index i = 0; i < cosines.size(); ++i) CHECK(std::acos(std::min(1.0, cosines(i))) <= 1e-6);
}

TEST_CASE("embedded mixed MMD beats a constrained random projection") {
    std::mt19937_64 rng(6);
    int wins = 0;
    const int trials = 40;
    for (int trial = 0; trial < trials; ++trial) {
        const Instance in = shifted_instance(rng, 20, 20);
        const int d = 5;
        const TransferModel m = solve_transfer(in.gram, in.l_total, 0.1, d);
        const Eigen::MatrixXd solved = in.gram.values * m.W;
        const Eigen::MatrixXd random =
            in.gram.values * constrained_random_projection(in.gram, d, static_cast<std::uint64_t>(trial));
        wins += embedded_mmd(solved, in.ls, in.lt) <= embedded_mmd(random, in.ls, in.lt);
    }
    CHECK(wins >= 38);
}

TEST_CASE("true pseudo-labels align better than adversarial ones") {
    std::mt19937_64 rng(7);
    int better = 0;
    const int trials = 10;
    for (int trial = 0; trial < trials; ++trial) {
        const Instance in = shifted_instance(rng, 18, 18);
        std::vector<int> wrong = in.lt;
        for (int& y : wrong) y = (y + 1) % 3;
        const TransferModel good = solve_transfer(in.gram, in.l_total, 0.1, 4);
        const TransferModel bad = solve_transfer(in.gram, build_L_total(in.ls, wrong, 3), 0.1, 4);
        better += embedded_mmd(in.gram.values * good.W, in.ls, in.lt) <
                  embedded_mmd(in.gram.values * bad.W, in.ls, in.lt);
    }
    CHECK(better == trials);
}

TEST_CASE("random projection satisfies the constraint") {
    std::mt19937_64 rng(8);
    const Instance in = shifted_instance(rng, 10, 10);
    const Eigen::MatrixXd r = constrained_random_projection(in.gram, 6, 3);
    const Eigen::MatrixXd rbr = r.transpose() * explicit_b(in.gram.values) * r;
    CHECK((rbr - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-8);
}
