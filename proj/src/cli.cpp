#include "tbss/cli.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "tbss/asymptotics.hpp"
#include "tbss/errors.hpp"
#include "tbss/estimators.hpp"
#include "tbss/io.hpp"
#include "tbss/metrics.hpp"
#include "tbss/studies.hpp"

namespace tbss {

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");
    return f;
}

// Writes to `path`, or to `fallback` when the path is empty.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
    if (path.empty()) {
        body(fallback);
        return;
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    body(f);
    if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

// Prefixes parse errors with the file they came from.
template <class F>
auto parse_file(const std::string& path, F&& reader) {
    std::ifstream f = open_in(path);
    try {
        return reader(f);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.line(), 0);
    }
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw ParseError(std::string(what) + ": '" + item + "' is not an integer", 1, 0);
        }
    }
    return out;
}

struct Options {
    std::string input, model, out, variant = "0", whitening = "joint", config, kind, labels, digits = "3,8";
    std::string method = "tfobi";
    std::vector<std::string> gammas, omegas;
    std::size_t n = 0, mode = 0;
    int asv_variant = 0;
    std::uint64_t seed = 0;
    std::size_t reps = 0;
    unsigned threads = 0;
    bool compare = false, full_reps = false;
};

void cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
    const TensorSample s = parse_file(o.input, read_tensor_sample);
    const std::vector<int> v = parse_int_list(o.variant, "--variant");
    const UnmixingModel m =
        tfobi_fit(s, v, o.whitening == "single_pass" ? Whitening::single_pass : Whitening::joint);
    for (const auto& w : m.warnings) err << "warning: " << w << '\n';
    emit(o.out, out, [&](std::ostream& f) { write_model(f, m); });
}

void cmd_transform(const Options& o, std::ostream& out) {
    const UnmixingModel m = parse_file(o.model, read_model);
    const TensorSample s = parse_file(o.input, read_tensor_sample);
    const TensorSample z = recover_sources(m, s);
    emit(o.out, out, [&](std::ostream& f) { write_tensor_sample(f, z); });
}

void cmd_mdi(const Options& o, std::ostream& out) {
    if (o.gammas.size() != o.omegas.size())
        throw std::invalid_argument("give one --omega file per --gamma file");
    std::vector<Matrix> g, w;
    for (const auto& p : o.gammas) g.push_back(parse_file(p, read_matrix));
    for (const auto& p : o.omegas) w.push_back(parse_file(p, read_matrix));
    const MdiResult r = g.size() == 1 ? mdi(g[0], w[0], o.n) : kron_mdi(g, w, o.n);
    emit(o.out, out, [&](std::ostream& f) {
        f << format_double(r.d) << '\n';
        if (o.n > 0) f << format_double(r.transformed) << '\n';
    });
}

void write_table(std::ostream& f, const AsvTable& t, const char* label, int variant) {
    f << label << " mode " << t.mode << " variant " << variant << " E " << format_double(t.e) << '\n';
    for (Eigen::Index i = 0; i < t.asv.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.asv.cols(); ++j) f << (j ? " " : "") << format_double(t.asv(i, j));
        f << '\n';
    }
}

void cmd_asv(const Options& o, std::ostream& out) {
    const SourceGrid grid = parse_file(o.input, read_grid_spec);
    const MomentProfile prof = grid.profile();
    if (o.asv_variant != 0 && o.asv_variant != 1) throw std::invalid_argument("--variant must be 0 or 1");
    emit(o.out, out, [&](std::ostream& f) {
        if (o.method == "fobi") {
            const AsvTable t = fobi_asv(prof);
            write_table(f, t, "fobi", 0);
            f << "limit " << format_double(t.e) << '\n';
            return;
        }
        if (o.mode > prof.order()) throw DimensionError("--mode exceeds the grid order");
        std::vector<AsvTable> tables;
        for (std::size_t m = 1; m <= prof.order(); ++m) {
            tables.push_back(tfobi_asv(prof, m, o.asv_variant));
            if (o.mode == 0 || o.mode == m) write_table(f, tables.back(), "tfobi", o.asv_variant);
            if (o.compare && (o.mode == 0 || o.mode == m) && prof.order() > 1) {
                const std::size_t p = grid.dims[m - 1];
                for (std::size_t k = 1; k <= p; ++k)
                    for (std::size_t k2 = k + 1; k2 <= p; ++k2)
                        f << "compare mode " << m << " pair " << k << ',' << k2 << ' '
                          << to_string(variant_superiority(prof, m, k, k2)) << '\n';
            }
        }
        f << "limit " << format_double(expected_limit_mdi(tables, prof.dims)) << '\n';
    });
}

template <class Config>
void override_common(const Options& o, Config& cfg) {
    if (!o.config.empty()) apply_config(parse_file(o.config, read_key_values), cfg);
    if (o.seed) cfg.seed = o.seed;
    if (o.reps) cfg.reps = o.reps;
    if (o.full_reps) cfg.reps = 2000;
    if (o.threads) cfg.threads = o.threads;
}

void cmd_study(const Options& o, std::ostream& out, std::ostream& err) {
    ExperimentResult res;
    if (o.kind == "separation") {
        SeparationConfig cfg;
        override_common(o, cfg);
        res = run_separation_study(cfg);
    } else if (o.kind == "variant") {
        VariantConfig cfg;
        override_common(o, cfg);
        res = run_variant_study(cfg);
    } else {
        ClassificationConfig cfg;
        override_common(o, cfg);
        res = run_classification_study(cfg);
    }
    for (const auto& [k, v] : res.config) err << res.study << ": " << k << " = " << v << '\n';
    emit(o.out, out, [&](std::ostream& f) { write_results_csv(f, res); });
}

void cmd_semeion(const Options& o, std::ostream& out, std::ostream& err) {
    const auto records = parse_file(o.input, read_semeion);
    const std::vector<int> digits = parse_int_list(o.digits, "--digits");
    for (int d : digits)
        if (d < 0 || d > 9) throw std::invalid_argument("--digits must be between 0 and 9");
    std::vector<int> labels;
    const TensorSample s = semeion_sample(records, digits, &labels);
    std::map<int, std::size_t> counts;
    for (int d : labels) ++counts[d];
    err << "semeion: " << s.size() << " of " << records.size() << " records kept";
    for (const auto& [d, c] : counts) err << "; digit " << d << ": " << c;
    err << '\n';
    emit(o.out, out, [&](std::ostream& f) { write_tensor_sample(f, s); });
    std::string label_path = o.labels;
    if (label_path.empty() && !o.out.empty()) label_path = o.out + ".labels.csv";
    if (!label_path.empty()) emit(label_path, out, [&](std::ostream& f) { write_label_csv(f, labels); });
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tensor-valued independent component analysis with FOBI-type estimators"};
    app.require_subcommand(1);
    Options o;

    auto* fit = app.add_subcommand("fit", "Fit TFOBI (FOBI for vectors, MFOBI for matrices) to a tensor sample file");
    fit->add_option("input", o.input, "Tensor sample file")->required();
    fit->add_option("--variant", o.variant, "Normalization N per mode, e.g. 0 or 0,1")->capture_default_str();
    fit->add_option("--whitening", o.whitening, "joint or single_pass")
        ->check(CLI::IsMember({"joint", "single_pass"}))
        ->capture_default_str();
    fit->add_option("--out", o.out, "Model file (default: standard output)");

    auto* tr = app.add_subcommand("transform", "Recover the sources of a sample with a fitted model");
    tr->add_option("model", o.model, "Model file")->required();
    tr->add_option("input", o.input, "Tensor sample file")->required();
    tr->add_option("--out", o.out, "Output tensor sample file (default: standard output)");

    auto* md = app.add_subcommand("mdi", "Minimum distance index of unmixing estimates against mixing matrices");
    md->add_option("--gamma", o.gammas, "Unmixing matrix file(s), one per mode")->required();
    md->add_option("--omega", o.omegas, "Mixing matrix file(s), one per mode")->required();
    md->add_option("--n", o.n, "Sample size; also prints n (p - 1) D^2");
    md->add_option("--out", o.out, "Output file");

    auto* as = app.add_subcommand("asv", "Asymptotic variances and the limiting transformed MDI of a source grid");
    as->add_option("grid", o.input, "Grid spec: 'dims p1 ... pr' then distribution names")->required();
    as->add_option("--mode", o.mode, "Print only this mode (default: all)");
    as->add_option("--variant", o.asv_variant, "Normalization N (0 or 1)")->capture_default_str();
    as->add_option("--method", o.method, "tfobi or fobi")->check(CLI::IsMember({"tfobi", "fobi"}))->capture_default_str();
    as->add_flag("--compare", o.compare, "Also print which normalization is asymptotically better per pair");
    as->add_option("--out", o.out, "Output file");

    auto* st = app.add_subcommand("study", "Run a simulation study and write CSV");
    st->add_option("kind", o.kind, "separation, variant or classify")
        ->required()
        ->check(CLI::IsMember({"separation", "variant", "classify"}));
    st->add_option("--config", o.config, "key = value configuration file");
    st->add_option("--seed", o.seed, "Master seed");
    st->add_option("--reps", o.reps, "Replications");
    st->add_option("--threads", o.threads, "Worker threads (default: all cores)");
    st->add_flag("--full-reps", o.full_reps, "Use 2000 replications");
    st->add_option("--out", o.out, "CSV file (default: standard output)");

    auto* se = app.add_subcommand("semeion", "Convert semeion handwritten digit data to a tensor sample file");
    se->add_option("input", o.input, "semeion.data")->required();
    se->add_option("--digits", o.digits, "Digits to keep")->capture_default_str();
    se->add_option("--out", o.out, "Tensor sample file (default: standard output)");
    se->add_option("--labels", o.labels, "Label CSV (default: <out>.labels.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitParse;
    }

    try {
        if (*fit) cmd_fit(o, out, err);
        else if (*tr) cmd_transform(o, out);
        else if (*md) cmd_mdi(o, out);
        else if (*as) cmd_asv(o, out);
        else if (*st) cmd_study(o, out, err);
        else if (*se) cmd_semeion(o, out, err);
    } catch (const IdentifiabilityError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIdentifiability;
    } catch (const SingularCovarianceError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitParse;
    }
    return kExitOk;
}

}  // namespace tbss
