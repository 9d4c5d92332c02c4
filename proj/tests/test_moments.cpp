#include <cmath>
#include <random>

#include "doctest.h"
#include "tbss/errors.hpp"
#include "tbss/moments.hpp"
#include "tbss/spectra.hpp"
#include "test_support.hpp"

using namespace tbss;
using namespace tbss::testing;

namespace {

TensorSample gaussian_sample(const Dims& dims, std::size_t n) {
    TensorSample s(dims, n);
    std::normal_distribution<double> nd;
    for (double& v : s.values()) v = nd(test_rng());
    return s;
}

// 2x2 sources: row 1 standard normal, row 2 +-1 with equal probability.
TensorSample normal_bernoulli(std::size_t n, bool all_bernoulli) {
    TensorSample s({2, 2}, n);
    std::normal_distribution<double> nd;
    std::bernoulli_distribution coin;
    for (std::size_t i = 0; i < n; ++i) {
        auto x = s.observation(i);
        for (std::size_t k = 0; k < 4; ++k) {
            const bool bern = all_bernoulli || k >= 2;
            x[k] = bern ? (coin(test_rng()) ? 1.0 : -1.0) : nd(test_rng());
        }
    }
    return s;
}

}  // namespace

TEST_CASE("m-mode covariance") {
    SUBCASE("zero sample") {
        const TensorSample z({2, 3}, 4);
        CHECK(m_mode_covariance(z, 1).isZero());
    }
    SUBCASE("order 1 is the ordinary covariance with divisor n") {
        const TensorSample s = gaussian_sample({3}, 50);
        const CenteredSample c = center_sample(s);
        Matrix x(50, 3);
        for (std::size_t i = 0; i < 50; ++i)
            for (std::size_t k = 0; k < 3; ++k)
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = c.centered.observation(i)[k];
        CHECK(max_abs_diff(m_mode_covariance(c.centered, 1), x.transpose() * x / 50.0) < 1e-12);
    }
    SUBCASE("matrix left covariance is (1/(nq)) sum X X^T") {
        const TensorSample s = gaussian_sample({3, 4}, 20);
        Matrix acc = Matrix::Zero(3, 3);
        for (std::size_t i = 0; i < 20; ++i) {
            const Matrix x = unfold(s.tensor(i), 1);
            acc += x * x.transpose();
        }
        CHECK(max_abs_diff(m_mode_covariance(s, 1), acc / 80.0) < 1e-12);
    }
    SUBCASE("large sample of independent standardized entries is near identity") {
        const TensorSample s = gaussian_sample({3, 2, 2}, 100000);
        const CenteredSample c = center_sample(s);
        for (std::size_t m = 1; m <= 3; ++m) {
            const Matrix cov = m_mode_covariance(c.centered, m);
            CHECK(max_abs_diff(cov, Matrix::Identity(cov.rows(), cov.cols())) < 0.02);
        }
    }
    SUBCASE("needs two observations") {
        CHECK_THROWS_AS(m_mode_covariance(TensorSample({2, 2}, 1), 1), DimensionError);
    }
    SUBCASE("orthogonal conjugation") {
        const TensorSample s = gaussian_sample({3, 4}, 30);
        const Matrix us[] = {random_orthogonal(3), random_orthogonal(4)};
        const TensorSample t = multi_mode_product(s, us);
        for (std::size_t m = 1; m <= 2; ++m)
            CHECK(max_abs_diff(m_mode_covariance(t, m),
                               us[m - 1] * m_mode_covariance(s, m) * us[m - 1].transpose()) < 1e-10);
    }
}

TEST_CASE("standardization whitens every mode") {
    TensorSample s = gaussian_sample({3, 4, 2}, 400);
    const Matrix mix[] = {random_spd(3), random_matrix(4, 4), random_spd(2)};
    s = multi_mode_product(s, mix);
    const StandardizedSample st = standardize(s);
    CHECK(st.whiteners().size() == 3);
    for (std::size_t m = 1; m <= 3; ++m) {
        const Matrix c = m_mode_covariance(st.data(), m);
        CHECK(max_abs_diff(c, Matrix::Identity(c.rows(), c.cols())) < 1e-9);
        const Matrix& g = st.whiteners()[m - 1];
        CHECK(max_abs_diff(g * st.covariances()[m - 1] * g, Matrix::Identity(g.rows(), g.cols())) < 1e-9);
    }

    const StandardizedSample one = standardize(s, Whitening::single_pass);
    CHECK(one.sweeps() == 1);
    CHECK(one.scheme() == Whitening::single_pass);
}

TEST_CASE("joint whitening of large tensors and its sweep-order independence") {
    // 9 x 8 x 8 = 576 cells takes the sample-level sweep path.
    TensorSample big = gaussian_sample({9, 8, 8}, 700);
    const Matrix mix[] = {random_spd(9), random_spd(8), random_matrix(8, 8)};
    big = multi_mode_product(big, mix);
    const StandardizedSample st = standardize(big);
    for (std::size_t m = 1; m <= 3; ++m) {
        const Matrix c = m_mode_covariance(st.data(), m);
        CHECK(max_abs_diff(c, Matrix::Identity(c.rows(), c.cols())) < 1e-9);
    }

    // The scale split between modes is fixed: equal log-determinants.
    const StandardizedSample small = standardize(multi_mode_product(gaussian_sample({3, 4}, 300),
                                                                     std::vector<Matrix>{random_spd(3), random_spd(4)}));
    const double l1 = std::log(small.whiteners()[0].determinant()) / 3.0;
    const double l2 = std::log(small.whiteners()[1].determinant()) / 4.0;
    CHECK(l1 == doctest::Approx(l2));
}

TEST_CASE("joint whitening copes with badly conditioned mixing") {
    // cond(A) = 1e4 per mode, so the covariance of vec(X) has condition ~1e16.
    Vector sv(3);
    sv << 1.0, 1e-2, 1e-4;
    const Matrix a = random_orthogonal(3) * sv.asDiagonal() * random_orthogonal(3);
    const TensorSample s = multi_mode_product(gaussian_sample({3, 3}, 3000), std::vector<Matrix>{a, a.transpose()});
    const StandardizedSample st = standardize(s);
    for (std::size_t m = 1; m <= 2; ++m) {
        const Matrix c = m_mode_covariance(st.data(), m);
        CHECK(max_abs_diff(c, Matrix::Identity(c.rows(), c.cols())) < 1e-8);
    }
}

TEST_CASE("standardization rejects rank-deficient data") {
    TensorSample s = gaussian_sample({3, 2}, 100);
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto x = s.observation(i);
        x[4] = x[0];  // third row copies the first
        x[5] = x[1];
    }
    CHECK_THROWS_AS(standardize(s), SingularCovarianceError);
}

TEST_CASE("FOBI functionals: order 1 reduces to E(x x^T x x^T) for both variants") {
    const StandardizedSample st = standardize(gaussian_sample({4}, 200));
    const Matrix b0 = m_mode_fobi0(st, 1);
    const Matrix b1 = m_mode_fobi1(st, 1);
    Matrix want = Matrix::Zero(4, 4);
    for (std::size_t i = 0; i < 200; ++i) {
        const Vector x = Eigen::Map<const Vector>(st.data().observation(i).data(), 4);
        want += x.squaredNorm() * x * x.transpose();
    }
    want /= 200.0;
    CHECK(max_abs_diff(b0, want) < 1e-10);
    CHECK(max_abs_diff(b1, want) < 1e-10);
}

TEST_CASE("FOBI functionals match the definitions on a 3x4 sample") {
    const StandardizedSample st = standardize(gaussian_sample({3, 4}, 50));
    for (std::size_t m = 1; m <= 2; ++m) {
        const Eigen::Index p = m == 1 ? 3 : 4;
        const double rho = m == 1 ? 4.0 : 3.0;
        Matrix w0 = Matrix::Zero(p, p), w1 = Matrix::Zero(p, p);
        for (std::size_t i = 0; i < 50; ++i) {
            const Matrix u = unfold(st.data().tensor(i), m);
            const Matrix c = u * u.transpose();
            w0 += c * c;
            w1 += u.squaredNorm() * c;
        }
        w0 /= 50.0 * rho;
        w1 /= 50.0 * rho;
        CHECK(max_abs_diff(m_mode_fobi0(st, m), w0) < 1e-10);
        CHECK(max_abs_diff(m_mode_fobi1(st, m), w1) < 1e-10);
        const MomentSet ms = moment_set(st, m);
        CHECK(max_abs_diff(ms.b0, w0) < 1e-10);
        CHECK(max_abs_diff(ms.b1, w1) < 1e-10);
        CHECK(ms.rho == static_cast<std::size_t>(rho));
        CHECK(max_abs_diff(ms.b0, ms.b0.transpose()) < 1e-10);
    }
    CHECK_THROWS(m_mode_fobi(st, 1, 2));
}

TEST_CASE("modes of length two: B0 and B1 differ by a multiple of the identity") {
    const StandardizedSample st = standardize(gaussian_sample({2, 3, 2}, 300));
    for (std::size_t m : {1u, 3u}) {
        const Matrix d = m_mode_fobi1(st, m) - m_mode_fobi0(st, m);
        CHECK(std::abs(d(0, 1)) < 1e-10);
        CHECK(std::abs(d(0, 0) - d(1, 1)) < 1e-10);
        const EigenSystem e0 = sym_eigen(m_mode_fobi0(st, m));
        const EigenSystem e1 = sym_eigen(m_mode_fobi1(st, m));
        CHECK(max_abs_diff(e0.vectors, e1.vectors) < 1e-8);
    }
}

TEST_CASE("population eigenvalues a_N + mean kurtosis (Monte Carlo)") {
    SUBCASE("all Bernoulli: B0 eigenvalues approach 3") {
        const StandardizedSample st = standardize(normal_bernoulli(200000, true));
        const EigenSystem es = sym_eigen(m_mode_fobi0(st, 1));
        CHECK(es.values(0) == doctest::Approx(3.0).epsilon(0.02));
        CHECK(es.values(1) == doctest::Approx(3.0).epsilon(0.02));
    }
    SUBCASE("normal / Bernoulli rows") {
        const StandardizedSample st = standardize(normal_bernoulli(200000, false));
        const EigenSystem e0 = sym_eigen(m_mode_fobi0(st, 1));
        const EigenSystem e1 = sym_eigen(m_mode_fobi1(st, 1));
        CHECK(std::abs(e0.values(0) - 5.0) < 0.1);
        CHECK(std::abs(e0.values(1) - 3.0) < 0.1);
        CHECK(std::abs(e1.values(0) - 6.0) < 0.1);
        CHECK(std::abs(e1.values(1) - 4.0) < 0.1);
    }
}
