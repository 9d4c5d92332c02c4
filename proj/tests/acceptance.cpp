// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "tbss/asymptotics.hpp"
#include "tbss/distributions.hpp"
#include "tbss/estimators.hpp"
#include "tbss/metrics.hpp"
#include "tbss/moments.hpp"
#include "tbss/rng.hpp"
#include "tbss/simulation.hpp"
#include "tbss/spectra.hpp"
#include "tbss/studies.hpp"

using namespace tbss;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Rows flipped so each row's largest-magnitude entry is positive.
Matrix sign_fixed(Matrix m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Eigen::Index j = 0;
        m.row(i).cwiseAbs().maxCoeff(&j);
        if (m(i, j) < 0) m.row(i) *= -1.0;
    }
    return m;
}

// Classical FOBI written out directly on an n x p data matrix. Runs in
// extended precision: with a mixing of condition ~400 two double-precision
// codes already disagree at ~1e-10 through the rounding of the covariance.
Matrix direct_fobi(const Matrix& xd) {
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const MatL x = xd.cast<long double>();
    const auto n = static_cast<long double>(x.rows());
    const MatL c = x.rowwise() - x.colwise().mean();
    Eigen::SelfAdjointEigenSolver<MatL> se(c.transpose() * c / n);
    const MatL root = se.eigenvectors() * se.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                      se.eigenvectors().transpose();
    const MatL y = c * root;
    MatL b = MatL::Zero(x.cols(), x.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const VecL yi = y.row(i).transpose();
        b += yi.squaredNorm() * yi * yi.transpose();
    }
    Eigen::SelfAdjointEigenSolver<MatL> be(b / n);
    return (be.eigenvectors().rowwise().reverse().transpose() * root).cast<double>();
}

Matrix as_matrix(const TensorSample& s) {
    Matrix x(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(s.cells()));
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t k = 0; k < s.cells(); ++k)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s.observation(i)[k];
    return x;
}

// A grid of catalog laws drawn at random, all distinct when possible.
SourceGrid random_grid(const Dims& dims, Rng& rng) {
    std::vector<std::string> names;
    for (const auto& d : distribution_catalog()) names.push_back(d.name);
    std::vector<std::string> picked;
    const std::size_t cells = dims_product(dims);
    while (picked.size() < cells) {
        std::shuffle(names.begin(), names.end(), rng);
        for (std::size_t i = 0; i < names.size() && picked.size() < cells; ++i) picked.push_back(names[i]);
    }
    return SourceGrid::from_names(dims, picked);
}

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Stats {
    double mean = 0, sd = 0;
    std::size_t count = 0;
    double half_width() const { return 1.96 * sd / std::sqrt(static_cast<double>(count)); }
};

Stats stats(const std::vector<double>& v) {
    Stats s;
    s.count = v.size();
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return s;
}

// Finite metric values grouped by (n, regime, method, variant), replications
// only. Failed fits (NaN) are left out and counted.
std::map<std::tuple<std::size_t, std::string, std::string, std::string>, std::vector<double>> group(
    const ExperimentResult& r, std::size_t* failed = nullptr) {
    std::map<std::tuple<std::size_t, std::string, std::string, std::string>, std::vector<double>> g;
    if (failed) *failed = 0;
    for (const auto& row : r.rows) {
        if (row.replication < 0) continue;
        if (std::isnan(row.metric)) {
            if (failed) ++*failed;
            continue;
        }
        g[{row.n, row.regime, row.method, row.variant}].push_back(row.metric);
    }
    return g;
}

double limit_of(const ExperimentResult& r, std::size_t n, const std::string& method, const std::string& variant) {
    for (const auto& row : r.rows)
        if (row.replication < 0 && row.n == n && row.method == method && row.variant == variant) return row.metric;
    return std::nan("");
}

// 1. Containment of classical FOBI and MFOBI in TFOBI.
Outcome containment() {
    Rng rng(101);
    double worst_fobi = 0, worst_mfobi = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t p = uniform_int(rng, 3, 6);
        const SourceGrid grid = random_grid({p}, rng);
        const TensorSample x = sample_ic(grid, gen_mixing(MixingRegime::gaussian, grid.dims, rng()),
                                         uniform_int(rng, 500, 3000), rng());
        const Matrix ref = sign_fixed(direct_fobi(as_matrix(x)));
        const Matrix got = sign_fixed(tfobi_fit(x).gammas[0]);
        worst_fobi = std::max(worst_fobi, max_abs(got - ref) / max_abs(ref));

        const SourceGrid mgrid = random_grid({uniform_int(rng, 2, 4), uniform_int(rng, 2, 4)}, rng);
        const TensorSample y = sample_ic(mgrid, gen_mixing(MixingRegime::uniform, mgrid.dims, rng()),
                                         uniform_int(rng, 500, 3000), rng());
        const int l = rep % 2, r = (rep / 2) % 2;
        const UnmixingModel a = mfobi_fit(y, l, r);
        const UnmixingModel b = tfobi_fit(y, std::vector<int>{l, r});
        for (std::size_t m = 0; m < 2; ++m)
            worst_mfobi = std::max(worst_mfobi, max_abs(a.gammas[m] - b.gammas[m]) / max_abs(b.gammas[m]));
    }
    return {worst_fobi <= 1e-10 && worst_mfobi <= 1e-10,
            "max relative deviation FOBI " + fmt("%.2e", worst_fobi) + ", MFOBI " + fmt("%.2e", worst_mfobi)};
}

// 2. Identity versus Haar mixing of the same sources.
Outcome equivariance() {
    const SourceGrid grid = separation_grid();
    const MixingSpec identity = gen_mixing(MixingRegime::identity, grid.dims, 0);
    double worst = 0;
    std::size_t skipped = 0;
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
        const TensorSample z = sample_sources(grid, 2000, derive_seed(202, rep));
        const MixingSpec haar = gen_mixing(MixingRegime::haar, grid.dims, derive_seed(203, rep));
        const UnmixingModel a = tfobi_fit(z);
        const UnmixingModel b = tfobi_fit(multi_mode_product(z, haar.omegas));
        if (!a.warnings.empty() || !b.warnings.empty()) {
            ++skipped;
            continue;
        }
        for (std::size_t m = 0; m < 2; ++m)
            worst = std::max(worst, std::abs(mdi(a.gammas[m], identity.omegas[m]).d -
                                             mdi(b.gammas[m], haar.omegas[m]).d));
    }
    return {worst <= 1e-8 && skipped == 0,
            "max per-mode MDI difference " + fmt("%.2e", worst) + " over 50 pairs, " + std::to_string(skipped) +
                " with repeated eigenvalues"};
}

// 3. Eigenvalues of the mode-1 B-matrices.
Outcome eigenvalue_law() {
    const SourceGrid grid = SourceGrid::from_names({2, 2}, {"normal", "normal", "bernoulli", "bernoulli"});
    const StandardizedSample st = standardize(sample_sources(grid, 200000, 303));
    const Vector e0 = sym_eigen(m_mode_fobi0(st, 1)).values;
    const Vector e1 = sym_eigen(m_mode_fobi1(st, 1)).values;
    const double d = std::max({std::abs(e0(0) - 5), std::abs(e0(1) - 3), std::abs(e1(0) - 6), std::abs(e1(1) - 4)});
    std::ostringstream os;
    os << "B0 (" << e0(0) << ", " << e0(1) << "), B1 (" << e1(0) << ", " << e1(1) << "), max error " << d;
    return {d <= 0.1, os.str()};
}

// 4. Modes of length two: both normalizations give the same eigenvectors.
Outcome length_two() {
    Rng rng(404);
    const Dims shapes[] = {{2, 2}, {2, 3}, {4, 2}, {2, 2, 2}, {3, 2, 2}};
    double worst = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const Dims& dims = shapes[rep % 5];
        const SourceGrid grid = random_grid(dims, rng);
        const TensorSample x = sample_ic(grid, gen_mixing(MixingRegime::gaussian, dims, rng()),
                                         uniform_int(rng, 200, 2000), rng());
        const StandardizedSample st = standardize(x);
        for (std::size_t m = 1; m <= dims.size(); ++m) {
            if (dims[m - 1] != 2) continue;
            const Matrix v0 = sym_eigen(m_mode_fobi0(st, m)).vectors;
            const Matrix v1 = sym_eigen(m_mode_fobi1(st, m)).vectors;
            for (Eigen::Index k = 0; k < 2; ++k)
                worst = std::max(worst, 1.0 - std::abs(v0.col(k).dot(v1.col(k))));
            worst = std::max(worst, max_abs(sign_fixed(v0.transpose()) - sign_fixed(v1.transpose())));
        }
    }
    return {worst <= 1e-10, "max eigenvector deviation " + fmt("%.2e", worst) + " over 100 datasets"};
}

double brute_force_mdi(const Matrix& g) {
    const Eigen::Index p = g.rows();
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(p));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double r = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto row = g.row(perm[static_cast<std::size_t>(j)]);
            r += 1.0 - row(j) * row(j) / row.squaredNorm();
        }
        best = std::min(best, r);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(std::clamp(best / static_cast<double>(p - 1), 0.0, 1.0));
}

// 5. Assignment-based MDI against exhaustive search, and exact zeros.
Outcome mdi_correctness() {
    Rng rng(505);
    std::normal_distribution<double> nd;
    double worst = 0, worst_zero = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const auto p = static_cast<Eigen::Index>(2 + rep % 5);
        Matrix g(p, p);
        for (double& v : g.reshaped()) v = nd(rng);
        worst = std::max(worst, std::abs(mdi_of_gain(g).d - brute_force_mdi(g)));

        // C Omega^{-1} with C a signed, scaled permutation.
        Matrix omega(p, p);
        for (double& v : omega.reshaped()) v = nd(rng);
        std::vector<Eigen::Index> perm(static_cast<std::size_t>(p));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix c = Matrix::Zero(p, p);
        for (Eigen::Index i = 0; i < p; ++i)
            c(i, perm[static_cast<std::size_t>(i)]) = (nd(rng) > 0 ? 1.0 : -1.0) * std::exp(nd(rng));
        worst_zero = std::max(worst_zero, mdi(c * omega.inverse(), omega).d);
    }
    return {worst <= 1e-12 && worst_zero <= 1e-12,
            "max |assignment - brute force| " + fmt("%.2e", worst) + ", max MDI of PJD gains " +
                fmt("%.2e", worst_zero)};
}

// 6. Monte-Carlo transformed MDI against its limit, all normalization pairs.
Outcome limit_reproduction() {
    VariantConfig cfg;
    cfg.setting = 2;
    cfg.ns = {128000};
    cfg.reps = 300;
    cfg.seed = 606;
    const ExperimentResult res = run_variant_study(cfg);
    std::size_t failed = 0;
    const auto g = group(res, &failed);
    std::map<std::string, double> mean;
    for (const auto& [key, v] : g) mean[std::get<3>(key)] = stats(v).mean;
    std::ostringstream os;
    bool ok = true;
    for (const std::string v : {"0,0", "1,1"}) {
        const double lim = limit_of(res, 128000, "MFOBI", v);
        const double rel = std::abs(mean[v] - lim) / lim;
        ok = ok && rel <= 0.10;
        os << "(" << v << ") mean " << fmt("%.1f", mean[v]) << " vs limit " << fmt("%.1f", lim) << " ("
           << fmt("%.1f", 100 * rel) << "%); ";
    }
    const bool order = mean["0,0"] < mean["0,1"] && mean["0,0"] < mean["1,0"] && mean["0,1"] < mean["1,1"] &&
                       mean["1,0"] < mean["1,1"];
    os << "mixed " << fmt("%.1f", mean["0,1"]) << " / " << fmt("%.1f", mean["1,0"]) << ", ordering "
       << (order ? "N0 < mixed < N1" : "violated") << "; " << failed << " failed fits";
    return {ok && order, os.str()};
}

// 7. Separation study: MFOBI beats FOBI; FOBI does not depend on the mixing.
Outcome separation() {
    SeparationConfig cfg;
    cfg.ns = {4000, 32000};
    cfg.reps = 200;
    cfg.seed = 707;
    std::size_t failed = 0;
    const auto g = group(run_separation_study(cfg), &failed);
    bool better = true, overlap = true;
    std::ostringstream os;
    for (std::size_t n : cfg.ns) {
        double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
        os << "n=" << n << ":";
        for (MixingRegime r : cfg.regimes) {
            const std::string reg(to_string(r));
            const Stats m = stats(g.at({n, reg, "MFOBI", "0,0"}));
            const Stats f = stats(g.at({n, reg, "FOBI", "0"}));
            better = better && m.mean < f.mean;
            lo = std::max(lo, f.mean - f.half_width());
            hi = std::min(hi, f.mean + f.half_width());
            os << " " << reg << " " << fmt("%.0f", m.mean) << " vs " << fmt("%.0f", f.mean) << ";";
        }
        overlap = overlap && lo <= hi;
        os << " ";
    }
    os << (overlap ? "FOBI CIs overlap" : "FOBI CIs disjoint") << "; " << failed << " numerically singular fits left out";
    return {better && overlap, os.str()};
}

// 8. Classification with TFOBI features.
Outcome classification() {
    ClassificationConfig cfg;
    cfg.pis = {0.2, 0.35, 0.5};
    cfg.regimes = {MixingRegime::haar};
    cfg.reps = 100;
    cfg.seed = 808;
    std::size_t failed = 0;
    const auto g = group(run_classification_study(cfg), &failed);
    bool ok = true;
    std::ostringstream os;
    for (double pi : cfg.pis) {
        std::string label;
        for (const auto& [key, v] : g)
            if (std::get<2>(key) == "TFOBI" && std::abs(std::stod(std::get<3>(key).substr(3)) - pi) < 1e-9)
                label = std::get<3>(key);
        const std::size_t n = cfg.n;
        const double t = stats(g.at({n, "haar", "TFOBI", label})).mean;
        const double f = stats(g.at({n, "haar", "FOBI", label})).mean;
        ok = ok && t > f;
        if (pi == 0.5) ok = ok && t >= 1.0 - pi + 0.05;
        os << "pi=" << pi << " TFOBI " << fmt("%.3f", t) << " FOBI " << fmt("%.3f", f) << "; ";
    }
    os << failed << " failed fits";
    return {ok, os.str()};
}

// 9. Which normalization is asymptotically better.
Outcome superiority() {
    const MomentProfile s1 = variant_setting_grid(1).profile();
    const MomentProfile s2 = variant_setting_grid(2).profile();
    bool settings = true;
    for (std::size_t mode : {1u, 2u})
        for (std::size_t k = 1; k <= 3; ++k)
            for (std::size_t k2 = k + 1; k2 <= 3; ++k2)
                settings = settings && variant_superiority(s1, mode, k, k2) == Superiority::n1_better &&
                           variant_superiority(s2, mode, k, k2) == Superiority::n0_better;

    Rng rng(909);
    std::uniform_real_distribution<double> beta(1.0, 20.0), extra(0.0, 200.0);
    bool length_two = true, agree = true;
    std::size_t pairs = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const Dims dims{uniform_int(rng, 3, 5), uniform_int(rng, 2, 5)};
        MomentProfile m;
        m.dims = dims;
        for (std::size_t i = 0; i < dims_product(dims); ++i) {
            const double b = beta(rng);
            m.beta.push_back(b);
            m.gamma3.push_back(0.0);
            m.omega.push_back(b * b + extra(rng));
        }
        const AsvTable a0 = mfobi_asv(m, 0), a1 = mfobi_asv(m, 1);
        for (std::size_t k = 1; k <= dims[0]; ++k)
            for (std::size_t k2 = 1; k2 <= dims[0]; ++k2) {
                if (k == k2) continue;
                const auto i = static_cast<Eigen::Index>(k - 1), j = static_cast<Eigen::Index>(k2 - 1);
                const double diff = a0.asv(i, j) - a1.asv(i, j);
                const Superiority want =
                    diff > 0 ? Superiority::n1_better : diff < 0 ? Superiority::n0_better : Superiority::equivalent;
                agree = agree && variant_superiority(m, 1, k, k2) == want;
                ++pairs;
            }
        // The same profile with a length-2 row mode.
        MomentProfile t = m;
        t.dims = {2, dims_product(dims) / 2};
        if (dims_product(dims) % 2 == 0) length_two = length_two && variant_superiority(t, 1, 1, 2) == Superiority::equivalent;
    }
    return {settings && length_two && agree,
            std::string("settings ") + (settings ? "ok" : "wrong") + ", length-2 modes " +
                (length_two ? "equivalent" : "not equivalent") + ", " + std::to_string(pairs) + " random pairs " +
                (agree ? "agree" : "disagree") + " with the ASV difference"};
}

// 10. Recovered sources are whitened in every mode.
Outcome whitening_contract() {
    Rng rng(1010);
    const std::size_t caps[] = {4, 3, 2};
    const MixingRegime regimes[] = {MixingRegime::gaussian, MixingRegime::uniform, MixingRegime::haar};
    double worst = 0;
    for (int rep = 0; rep < 20; ++rep) {
        Dims dims;
        const std::size_t order = uniform_int(rng, 1, 3);
        for (std::size_t m = 0; m < order; ++m) dims.push_back(uniform_int(rng, 2, caps[m]));
        const SourceGrid grid = random_grid(dims, rng);
        const TensorSample x =
            sample_ic(grid, gen_mixing(regimes[rep % 3], dims, rng()), uniform_int(rng, 300, 3000), rng());
        std::vector<int> variants;
        for (std::size_t m = 0; m < order; ++m) variants.push_back(static_cast<int>(rng() % 2));
        const UnmixingModel model = tfobi_fit(x, variants);
        const TensorSample z = recover_sources(model, x);
        const TensorSample c = center_sample(z).centered;
        for (std::size_t m = 1; m <= order; ++m) {
            const Matrix cov = m_mode_covariance(c, m);
            worst = std::max(worst, max_abs(cov - Matrix::Identity(cov.rows(), cov.cols())));
        }
    }
    return {worst <= 1e-8, "max |cov - I| " + fmt("%.2e", worst) + " over 20 configurations"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;  // <= 0: no limit beyond "minutes"
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {1, "oracle containment", 10, containment},
        {2, "orthogonal equivariance", 30, equivariance},
        {3, "eigenvalue law", 20, eigenvalue_law},
        {4, "length-2 mode equivalence", 10, length_two},
        {5, "MDI correctness", 30, mdi_correctness},
        {6, "asymptotic limit reproduction", 0, limit_reproduction},
        {7, "separation superiority", 0, separation},
        {8, "classification study", 0, classification},
        {9, "normalization classifier", 5, superiority},
        {10, "whitening contract", 10, whitening_contract},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_s > 0 && secs > c.budget_s) {
            o.pass = false;
            o.detail += "; over the " + fmt("%.0f", c.budget_s) + " s budget";
        }
        failures += !o.pass;
        std::printf("%s %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
