#include "tbss/studies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "tbss/asymptotics.hpp"
#include "tbss/errors.hpp"
#include "tbss/estimators.hpp"
#include "tbss/lda.hpp"
#include "tbss/metrics.hpp"
#include "tbss/moments.hpp"

namespace tbss {

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::ostringstream s;
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    return s.str();
}

std::string join_regimes(const std::vector<MixingRegime>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::string(to_string(v[i]));
    return s;
}

std::string join_names(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

std::vector<ResultRow> flatten(std::vector<std::vector<ResultRow>>& parts) {
    std::vector<ResultRow> out;
    for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(out));
    return out;
}

std::string method_name(std::size_t order) {
    return order == 1 ? "FOBI" : order == 2 ? "MFOBI" : "TFOBI";
}

std::vector<Matrix> identities(const Dims& dims) {
    std::vector<Matrix> out;
    for (std::size_t p : dims)
        out.push_back(Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));
    return out;
}

// Rows of the selected cells (1-based indices) of every observation.
Matrix gather_features(const TensorSample& s, const std::vector<std::size_t>& offsets) {
    Matrix f(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(offsets.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto obs = s.observation(i);
        for (std::size_t j = 0; j < offsets.size(); ++j)
            f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = obs[offsets[j]];
    }
    return f;
}

TensorSample subset(const TensorSample& s, std::span<const std::size_t> idx) {
    TensorSample out(s.dims(), idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto src = s.observation(idx[i]);
        std::copy(src.begin(), src.end(), out.observation(i).begin());
    }
    return out;
}

// Runs one fit-and-score step. A numerically singular or non-converging fit
// is part of the study's outcome (e.g. FOBI under a badly conditioned
// Kronecker mixing), so it becomes a NaN metric instead of aborting the run.
template <class F>
double metric_or_nan(F&& f) {
    try {
        return f();
    } catch (const SingularCovarianceError&) {
    } catch (const ConvergenceError&) {
    }
    return std::numeric_limits<double>::quiet_NaN();
}

void note_failures(ExperimentResult& res) {
    const auto failed = std::ranges::count_if(res.rows, [](const ResultRow& r) { return std::isnan(r.metric); });
    res.config.emplace_back("failed_fits", std::to_string(failed));
}

}  // namespace

std::string variant_label(std::span<const int> variants) {
    std::string s;
    for (std::size_t i = 0; i < variants.size(); ++i) s += (i ? "," : "") + std::to_string(variants[i]);
    return s;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task) {
    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = count;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

ExperimentResult run_separation_study(const SeparationConfig& cfg) {
    const SourceGrid& grid = cfg.grid;
    const std::size_t r = grid.dims.size();
    const std::size_t nn = cfg.ns.size(), nr = cfg.regimes.size();
    const std::size_t tasks = cfg.reps * nn * nr;
    std::vector<std::vector<ResultRow>> parts(tasks);

    parallel_for(tasks, cfg.threads, [&](std::size_t t) {
        const std::size_t ri = t % nr, ni = (t / nr) % nn, rep = t / (nr * nn);
        const std::size_t n = cfg.ns[ni];
        const std::uint64_t source_seed = derive_seed(cfg.seed, 2 * t);
        const std::uint64_t mixing_seed = derive_seed(cfg.seed, 2 * t + 1);
        const MixingSpec mix = gen_mixing(cfg.regimes[ri], grid.dims, mixing_seed);
        const TensorSample x = sample_ic(grid, mix, n, source_seed);

        ResultRow base;
        base.replication = static_cast<long>(rep);
        base.seed = source_seed;
        base.n = n;
        base.regime = std::string(to_string(cfg.regimes[ri]));

        ResultRow row = base;
        row.method = method_name(r);
        row.variant = variant_label(std::vector<int>(r, 0));
        row.metric = metric_or_nan([&] { return kron_mdi(tfobi_fit(x).gammas, mix.omegas, n).transformed; });
        parts[t].push_back(row);

        if (cfg.include_fobi && r > 1) {
            ResultRow frow = base;
            frow.method = "FOBI";
            frow.variant = "0";
            frow.metric = metric_or_nan(
                [&] { return mdi(fobi_fit(x).gammas[0], kronecker(mix.omegas), n).transformed; });
            parts[t].push_back(frow);
        }
    });

    ExperimentResult res;
    res.study = "separation";
    res.config = {{"grid", join_names(grid.names())},
                  {"ns", join_sizes(cfg.ns)},
                  {"regimes", join_regimes(cfg.regimes)},
                  {"reps", std::to_string(cfg.reps)},
                  {"seed", std::to_string(cfg.seed)}};
    res.rows = flatten(parts);
    note_failures(res);

    const MomentProfile prof = grid.profile();
    const double tlimit = tfobi_limit(prof);
    const double flimit = cfg.include_fobi && r > 1 ? fobi_limit(prof) : 0.0;
    const std::vector<int> zeros(r, 0);
    for (std::size_t n : cfg.ns) {
        res.rows.push_back({-1, 0, n, "limit", method_name(r), variant_label(zeros), tlimit});
        if (cfg.include_fobi && r > 1) res.rows.push_back({-1, 0, n, "limit", "FOBI", "0", flimit});
    }
    return res;
}

ExperimentResult run_variant_study(const VariantConfig& cfg) {
    const SourceGrid grid = variant_setting_grid(cfg.setting);
    const std::size_t nn = cfg.ns.size();
    const std::size_t tasks = cfg.reps * nn;
    const std::vector<Matrix> eye = identities(grid.dims);
    std::vector<std::vector<ResultRow>> parts(tasks);

    parallel_for(tasks, cfg.threads, [&](std::size_t t) {
        const std::size_t ni = t % nn, rep = t / nn;
        const std::size_t n = cfg.ns[ni];
        const std::uint64_t seed = derive_seed(cfg.seed, t);
        const TensorSample z = sample_sources(grid, n, seed);
        // Whitening and both B-matrices are shared by all variant pairs.
        std::optional<StandardizedSample> st;
        std::vector<MomentSet> ms;
        try {
            st = standardize(z);
            for (std::size_t m = 1; m <= grid.dims.size(); ++m) ms.push_back(moment_set(*st, m));
        } catch (const SingularCovarianceError&) {
        } catch (const ConvergenceError&) {
        }
        for (const auto& v : cfg.variants) {
            ResultRow row;
            row.replication = static_cast<long>(rep);
            row.seed = seed;
            row.n = n;
            row.regime = "identity";
            row.method = "MFOBI";
            row.variant = variant_label(v);
            row.metric = std::numeric_limits<double>::quiet_NaN();
            if (!ms.empty())
                row.metric = metric_or_nan([&] {
                    std::vector<Matrix> bs;
                    for (std::size_t m = 0; m < ms.size(); ++m) bs.push_back(v[m] == 0 ? ms[m].b0 : ms[m].b1);
                    return kron_mdi(fit_from_standardized(*st, bs, v).gammas, eye, n).transformed;
                });
            parts[t].push_back(std::move(row));
        }
    });

    ExperimentResult res;
    res.study = "variant";
    std::string vs;
    for (const auto& v : cfg.variants) vs += (vs.empty() ? "" : ";") + variant_label(v);
    res.config = {{"setting", std::to_string(cfg.setting)},
                  {"grid", join_names(grid.names())},
                  {"ns", join_sizes(cfg.ns)},
                  {"variants", vs},
                  {"reps", std::to_string(cfg.reps)},
                  {"seed", std::to_string(cfg.seed)}};
    res.rows = flatten(parts);
    note_failures(res);
    const MomentProfile prof = grid.profile();
    for (const auto& v : cfg.variants) {
        const double lim = tfobi_limit(prof, v);
        for (std::size_t n : cfg.ns) res.rows.push_back({-1, 0, n, "limit", "MFOBI", variant_label(v), lim});
    }
    return res;
}

ExperimentResult run_classification_study(const ClassificationConfig& cfg) {
    if (cfg.n_train >= cfg.n || cfg.n_train < 3)
        throw std::invalid_argument("classification study needs 3 <= n_train < n");
    const Dims dims{5, 5, 5};
    const SourceGrid grid = SourceGrid::uniform_grid(dims, "normal");
    const std::size_t np = cfg.pis.size(), nr = cfg.regimes.size();
    const std::size_t tasks = cfg.reps * np * nr;
    std::vector<std::vector<ResultRow>> parts(tasks);

    // Offsets of the 2 x 2 x 2 corner and of the two extreme corner cells.
    std::vector<std::size_t> corner;
    const DataTensor shape(dims);
    for (std::size_t i = 1; i <= 2; ++i)
        for (std::size_t j = 1; j <= 2; ++j)
            for (std::size_t k = 1; k <= 2; ++k) {
                const std::size_t idx[] = {i, j, k};
                corner.push_back(shape.offset(idx));
            }
    const std::size_t first_idx[] = {1, 1, 1}, last_idx[] = {5, 5, 5};
    const std::size_t first = shape.offset(first_idx), last = shape.offset(last_idx);

    parallel_for(tasks, cfg.threads, [&](std::size_t t) {
        const std::size_t ri = t % nr, pi_i = (t / nr) % np, rep = t / (nr * np);
        const double pi = cfg.pis[pi_i];
        const std::uint64_t source_seed = derive_seed(cfg.seed, 3 * t);
        const std::uint64_t mixing_seed = derive_seed(cfg.seed, 3 * t + 1);
        const std::uint64_t split_seed = derive_seed(cfg.seed, 3 * t + 2);

        const auto n2 = static_cast<std::size_t>(std::llround(pi * static_cast<double>(cfg.n)));
        TensorSample z = sample_sources(grid, cfg.n, source_seed);
        std::vector<int> labels(cfg.n, 0);
        for (std::size_t i = 0; i < n2; ++i) {
            labels[i] = 1;
            auto obs = z.observation(i);
            for (std::size_t c : corner) obs[c] += cfg.shift;
        }
        const MixingSpec mix = gen_mixing(cfg.regimes[ri], dims, mixing_seed);
        const TensorSample x = mix.regime == MixingRegime::identity ? z : multi_mode_product(z, mix.omegas);

        std::vector<std::size_t> order(cfg.n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng split_rng = make_rng(split_seed);
        std::shuffle(order.begin(), order.end(), split_rng);
        const std::span<const std::size_t> train_idx(order.data(), cfg.n_train);
        const std::span<const std::size_t> test_idx(order.data() + cfg.n_train, cfg.n - cfg.n_train);
        const TensorSample train = subset(x, train_idx), test = subset(x, test_idx);
        std::vector<int> ytrain, ytest;
        for (std::size_t i : train_idx) ytrain.push_back(labels[i]);
        for (std::size_t i : test_idx) ytest.push_back(labels[i]);

        ResultRow base;
        base.replication = static_cast<long>(rep);
        base.seed = source_seed;
        base.n = cfg.n;
        base.regime = std::string(to_string(cfg.regimes[ri]));
        base.variant = "pi=" + fixed(pi, 2);
        auto emit = [&](const std::string& method, double acc) {
            ResultRow row = base;
            row.method = method;
            row.metric = acc;
            parts[t].push_back(std::move(row));
        };
        auto lda_accuracy = [&](const Matrix& ftrain, const Matrix& ftest) {
            const LdaModel m = lda_fit(ftrain, ytrain);
            return accuracy(lda_predict(m, ftest), ytest);
        };

        const bool both_classes = std::ranges::count(ytrain, 1) > 0 && std::ranges::count(ytrain, 0) > 0;

        // TFOBI: the two extreme corner cells plus the lowest- and
        // highest-kurtosis cells among the remaining ones.
        if (both_classes) {
            emit("TFOBI", metric_or_nan([&] {
                const UnmixingModel tm = tfobi_fit(train);
                const TensorSample str = recover_sources(tm, train), ste = recover_sources(tm, test);
                const DataTensor kurt = component_kurtosis(str);
                std::vector<std::size_t> rest;
                for (std::size_t c = 0; c < kurt.size(); ++c)
                    if (c != first && c != last) rest.push_back(c);
                const auto kv = kurt.values();
                const auto [lo, hi] = std::ranges::minmax_element(rest, {}, [&](std::size_t c) { return kv[c]; });
                const std::vector<std::size_t> feats{first, last, *lo, *hi};
                return lda_accuracy(gather_features(str, feats), gather_features(ste, feats));
            }));

            // FOBI: first two and last two components in kurtosis order.
            emit("FOBI", metric_or_nan([&] {
                const UnmixingModel fm = fobi_fit(train);
                const TensorSample ftr = recover_sources(fm, vectorize(train));
                const TensorSample fte = recover_sources(fm, vectorize(test));
                const std::size_t P = ftr.cells();
                const std::vector<std::size_t> ffeats{0, 1, P - 2, P - 1};
                return lda_accuracy(gather_features(ftr, ffeats), gather_features(fte, ffeats));
            }));

            std::vector<std::size_t> all(train.cells());
            std::iota(all.begin(), all.end(), std::size_t{0});
            emit("NONE", metric_or_nan(
                             [&] { return lda_accuracy(gather_features(train, all), gather_features(test, all)); }));
        }

        const int majority = 2 * std::ranges::count(ytrain, 1) > static_cast<long>(ytrain.size()) ? 1 : 0;
        const std::vector<int> base_pred(ytest.size(), majority);
        emit("BASELINE", accuracy(base_pred, ytest));
    });

    ExperimentResult res;
    res.study = "classification";
    std::string ps;
    for (double pi : cfg.pis) ps += (ps.empty() ? "" : ",") + fixed(pi, 2);
    res.config = {{"pis", ps},
                  {"regimes", join_regimes(cfg.regimes)},
                  {"reps", std::to_string(cfg.reps)},
                  {"n", std::to_string(cfg.n)},
                  {"n_train", std::to_string(cfg.n_train)},
                  {"shift", fixed(cfg.shift, 6)},
                  {"seed", std::to_string(cfg.seed)}};
    res.rows = flatten(parts);
    note_failures(res);
    return res;
}

}  // namespace tbss
