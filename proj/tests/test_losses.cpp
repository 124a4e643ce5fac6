#include "seagrid/errors.hpp"
#include "seagrid/losses.hpp"
#include "support.hpp"

#include <cmath>

#include <doctest.h>

using namespace seagrid;

namespace {

// Plain double-loop NT-Xent, no max subtraction, no vectorisation.
double brute_nt_xent(const Matrix& z, double tau) {
    const int n = static_cast<int>(z.rows());
    std::vector<std::vector<double>> s(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double dot = 0, ni = 0, nj = 0;
            for (int d = 0; d < z.cols(); ++d) {
                dot += z(i, d) * z(j, d);
                ni += z(i, d) * z(i, d);
                nj += z(j, d) * z(j, d);
            }
            s[i][j] = dot / (std::sqrt(ni) * std::sqrt(nj));
        }
    }
    double total = 0;
    for (int i = 0; i < n; ++i) {
        const int pos = (i % 2 == 0) ? i + 1 : i - 1;
        double denom = 0;
        for (int k = 0; k < n; ++k) {
            if (k != i) denom += std::exp(s[i][k] / tau);
        }
        total += -std::log(std::exp(s[i][pos] / tau) / denom);
    }
    return total / n;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

}  // namespace

TEST_CASE("softmax") {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
    auto p = softmax(zero);
    for (int i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(0.25));

    Eigen::VectorXd v(3);
    v << 1, 2, 3;
    const double denom = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    p = softmax(v);
    for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(std::exp(i + 1.0) / denom).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(0.09003057).epsilon(1e-7));
    CHECK(p[2] == doctest::Approx(0.66524096).epsilon(1e-7));

    Eigen::VectorXd shifted = v.array() + 1000.0;
    CHECK((softmax(shifted) - p).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(log_softmax(v)[1] == doctest::Approx(std::log(p[1])));
}

TEST_CASE("weighted cross entropy") {
    const auto w = ClassWeights::seagrass_default();
    Eigen::VectorXd uniform = Eigen::VectorXd::Zero(4);
    CHECK(weighted_ce(uniform, 1, w).loss == doctest::Approx(1.5 * std::log(4.0)).epsilon(1e-12));
    CHECK(weighted_ce(uniform, 1, w).loss == doctest::Approx(2.079442).epsilon(1e-6));

    Eigen::VectorXd confident = Eigen::VectorXd::Zero(4);
    confident[2] = 50.0;
    CHECK(weighted_ce(confident, 2, w).loss < 1e-20);

    CHECK_THROWS_AS(weighted_ce(uniform, 4, w), DataError);
    CHECK_THROWS_AS(weighted_ce(uniform, 0, ClassWeights{{1.0, 0.0, 1.0, 1.0}}), UsageError);
}

TEST_CASE("weighted cross entropy gradient vs finite differences") {
    Rng rng(11);
    std::uniform_int_distribution<int> cdist(2, 6);
    const double eps = 1e-5;
    for (int trial = 0; trial < 100; ++trial) {
        const int c = cdist(rng);
        Eigen::VectorXd logits = testsupport::random_matrix(c, 1, rng, 2.0);
        const ClassId t = std::uniform_int_distribution<int>(0, c - 1)(rng);
        ClassWeights w;
        for (int k = 0; k < c; ++k) w.w.push_back(0.5 + std::uniform_real_distribution<double>(0, 1)(rng));
        const auto lg = weighted_ce(logits, t, w);
        Eigen::VectorXd fd(c);
        for (int k = 0; k < c; ++k) {
            Eigen::VectorXd hi = logits, lo = logits;
            hi[k] += eps;
            lo[k] -= eps;
            fd[k] = (weighted_ce(hi, t, w).loss - weighted_ce(lo, t, w).loss) / (2 * eps);
        }
        const Eigen::VectorXd an = lg.grad;
        CHECK((an - fd).norm() / std::max(an.norm(), fd.norm()) < 1e-6);
    }
}

TEST_CASE("batch cross entropy is the weighted mean of rows") {
    Rng rng(5);
    const Matrix logits = testsupport::random_matrix(5, 4, rng);
    const std::vector<ClassId> t{0, 1, 2, 3, 1};
    const auto w = ClassWeights::seagrass_default();
    double num = 0, den = 0;
    for (int i = 0; i < 5; ++i) {
        num += weighted_ce(logits.row(i).transpose(), t[i], w).loss;
        den += w.w[t[i]];
    }
    const auto batch = weighted_ce_batch(logits, t, w);
    CHECK(batch.loss == doctest::Approx(num / den).epsilon(1e-12));
    const double eps = 1e-5;
    for (int i = 0; i < 5; ++i) {
        for (int k = 0; k < 4; ++k) {
            Matrix hi = logits, lo = logits;
            hi(i, k) += eps;
            lo(i, k) -= eps;
            const double fd = (weighted_ce_batch(hi, t, w).loss - weighted_ce_batch(lo, t, w).loss) / (2 * eps);
            CHECK(rel_err(batch.grad(i, k), fd) < 1e-6);
        }
    }
}

TEST_CASE("nt_xent single pair is exactly zero") {
    Rng rng(1);
    const Matrix z = testsupport::random_matrix(2, 6, rng);
    const auto lg = nt_xent(z, 0.07);
    CHECK(lg.loss == 0.0);
    CHECK(lg.grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nt_xent matches the double loop") {
    Rng rng(2);
    for (int b = 1; b <= 8; ++b) {
        for (int trial = 0; trial < 5; ++trial) {
            const Matrix z = testsupport::random_matrix(2 * b, 5, rng);
            CHECK(std::abs(nt_xent(z, 0.5).loss - brute_nt_xent(z, 0.5)) < 1e-10);
        }
    }
}

TEST_CASE("nt_xent is invariant to row scale") {
    Rng rng(3);
    Matrix z = testsupport::random_matrix(6, 4, rng);
    const double before = nt_xent(z).loss;
    z.row(3) *= 3.7;
    CHECK(std::abs(nt_xent(z).loss - before) < 1e-9);
}

TEST_CASE("nt_xent gradient vs finite differences") {
    Rng rng(4);
    const double eps = 1e-5;
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix z = testsupport::random_matrix(6, 3, rng);
        const auto lg = nt_xent(z, 0.5);
        for (int i = 0; i < z.rows(); ++i) {
            for (int d = 0; d < z.cols(); ++d) {
                Matrix hi = z, lo = z;
                hi(i, d) += eps;
                lo(i, d) -= eps;
                const double fd = (nt_xent(hi, 0.5).loss - nt_xent(lo, 0.5).loss) / (2 * eps);
                CHECK(std::abs(lg.grad(i, d) - fd) < 1e-7 + 1e-5 * std::abs(fd));
            }
        }
    }
}

TEST_CASE("nt_xent rejects bad batches") {
    CHECK_THROWS_AS(nt_xent(Matrix::Ones(3, 2)), DataError);
    Matrix z = Matrix::Ones(4, 2);
    z.row(1).setZero();
    CHECK_THROWS_AS(nt_xent(z), NumericError);
}
