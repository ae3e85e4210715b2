#include "rss_sentinel/transfer.hpp"

#include <algorithm>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "rss_sentinel/random.hpp"

namespace rss_sentinel {

Eigen::MatrixXd centering_matrix(Eigen::Index n) {
    if (n < 2) throw std::invalid_argument("transfer: centering matrix needs n >= 2");
    Eigen::MatrixXd h = Eigen::MatrixXd::Constant(n, n, -1.0 / static_cast<double>(n));
    h.diagonal().array() += 1.0;
    return h;
}

Eigen::MatrixXd objective_matrix(const Eigen::Ref<const Eigen::MatrixXd>& gram,
                                 const Eigen::Ref<const Eigen::MatrixXd>& l_total, double lambda) {
    Eigen::MatrixXd a = gram * l_total * gram;
    a = 0.5 * (a + a.transpose()).eval();
    a.diagonal().array() += lambda;
    return a;
}

Eigen::MatrixXd constraint_matrix(const Eigen::Ref<const Eigen::MatrixXd>& gram) {
    // K H K = (H K)^T (H K) since H is a symmetric projector.
    const Eigen::MatrixXd hk = gram.rowwise() - gram.colwise().mean();
    Eigen::MatrixXd b = hk.transpose() * hk;
    return 0.5 * (b + b.transpose());
}

TransferModel solve_transfer(const GramMatrix& gram, const Eigen::Ref<const Eigen::MatrixXd>& l_total, double lambda,
                             int d_sub, DimPolicy policy) {
    const Eigen::Index n = gram.size();
    if (gram.values.rows() != n || gram.values.cols() != n)
        throw std::invalid_argument("transfer: Gram dimensions do not match n_s + n_t");
    if (l_total.rows() != n || l_total.cols() != n)
        throw std::invalid_argument("transfer: L matrix dimensions do not match the Gram");
    if (!(lambda > 0.0)) throw std::invalid_argument("transfer: lambda must be > 0");
    if (n < 2) throw std::invalid_argument("transfer: need at least two samples");
    if (d_sub < 1) throw std::invalid_argument("transfer: d_sub must be >= 1");
    if (policy == DimPolicy::exact && d_sub > n - 1)
        throw std::invalid_argument("transfer: d_sub must be <= n - 1 = " + std::to_string(n - 1));
    if (!gram.values.allFinite() || !l_total.allFinite())
        throw std::invalid_argument("transfer: non-finite Gram or L matrix");

    const Eigen::MatrixXd a = objective_matrix(gram.values, l_total, lambda);
    const Eigen::MatrixXd b = constraint_matrix(gram.values);

    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw std::runtime_error("transfer: objective matrix is not positive definite");
    const auto lower = llt.matrixL();

    // C = L^-1 B L^-T has the eigenvalues mu of B w = mu A w.
    Eigen::MatrixXd half = lower.solve(b);
    Eigen::MatrixXd c = lower.solve(half.transpose());
    c = 0.5 * (c + c.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    if (eig.info() != Eigen::Success) throw std::runtime_error("transfer: eigen decomposition failed");
    const Eigen::VectorXd& mu = eig.eigenvalues();  // ascending
    const double mu_max = mu(n - 1);
    int available = 0;
    if (mu_max > 0.0)
        for (Eigen::Index i = n - 1; i >= 0 && mu(i) > kRankTolerance * mu_max; --i) ++available;

    int dim = d_sub;
    if (policy == DimPolicy::clamp) dim = std::min<int>({d_sub, available, static_cast<int>(n - 1)});
    if (dim < 1 || available < dim) throw RankError(d_sub, available);

    TransferModel model;
    model.lambda = lambda;
    model.d_sub = dim;
    model.n_s = gram.n_s;
    model.n_t = gram.n_t;
    model.W.resize(n, dim);
    model.eigenvalues.resize(dim);
    Eigen::MatrixXd v(n, dim);
    for (int k = 0; k < dim; ++k) v.col(k) = eig.eigenvectors().col(n - 1 - k);
    // w = L^-T v / sqrt(mu) gives w^T B w = 1 and w^T A w = 1 / mu.
    model.W = lower.transpose().solve(v);
    for (int k = 0; k < dim; ++k) {
        const double m = mu(n - 1 - k);
        model.W.col(k) /= std::sqrt(m);
        model.eigenvalues(k) = 1.0 / m;
    }
    return model;
}

Embedding embed(const TransferModel& model, const GramMatrix& gram) {
    if (gram.n_s != model.n_s || gram.n_t != model.n_t || gram.values.rows() != model.W.rows())
        throw std::invalid_argument("transfer: Gram does not match the model's sample set");
    const Eigen::MatrixXd e = gram.values * model.W;
    return {e.topRows(model.n_s), e.bottomRows(model.n_t)};
}

Eigen::MatrixXd constrained_random_projection(const GramMatrix& gram, int d_sub, std::uint64_t seed) {
    const Eigen::Index n = gram.size();
    if (d_sub < 1 || d_sub > n - 1) throw std::invalid_argument("transfer: random projection dimension out of range");
    std::mt19937_64 rng(mix_seed(seed, 7));
    std::normal_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd r(n, d_sub);
    for (Eigen::Index j = 0; j < d_sub; ++j)
        for (Eigen::Index i = 0; i < n; ++i) r(i, j) = unit(rng);
    const Eigen::MatrixXd b = constraint_matrix(gram.values);
    Eigen::MatrixXd m = r.transpose() * b * r;
    m = 0.5 * (m + m.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.eigenvalues().minCoeff() <= 0.0)
        throw RankError(d_sub, static_cast<int>((eig.eigenvalues().array() > 0.0).count()));
    const Eigen::MatrixXd inv_sqrt =
        eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return r * inv_sqrt;
}

}  // namespace rss_sentinel
