#include "tbss/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "tbss/errors.hpp"

namespace tbss {

namespace {

struct Token {
    std::string_view text;
    std::size_t column = 0;  // 1-based
};

// Line-oriented reader that remembers where each token came from.
class TextReader {
public:
    explicit TextReader(std::istream& in) : in_(in) {}

    // Next line, split on whitespace. Returns false at end of input.
    bool next(std::vector<Token>& tokens) {
        if (!std::getline(in_, line_)) return false;
        ++line_no_;
        if (!line_.empty() && line_.back() == '\r') line_.pop_back();
        tokens.clear();
        std::size_t i = 0;
        while (i < line_.size()) {
            while (i < line_.size() && std::isspace(static_cast<unsigned char>(line_[i]))) ++i;
            const std::size_t start = i;
            while (i < line_.size() && !std::isspace(static_cast<unsigned char>(line_[i]))) ++i;
            if (i > start) tokens.push_back({std::string_view(line_).substr(start, i - start), start + 1});
        }
        return true;
    }

    // Next line with at least one token; throws at end of input.
    std::vector<Token> expect(const std::string& what) {
        std::vector<Token> t;
        while (next(t))
            if (!t.empty()) return t;
        throw ParseError("unexpected end of input, expected " + what, line_no_ + 1, 0);
    }

    std::size_t line() const noexcept { return line_no_; }
    const std::string& text() const noexcept { return line_; }

    [[noreturn]] void fail(const std::string& msg, std::size_t column = 0) const {
        throw ParseError(msg, line_no_, column);
    }

    double number(const Token& t) const {
        double v = 0.0;
        const char* b = t.text.data();
        const char* e = b + t.text.size();
        const auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || ptr != e)
            fail("expected a number, got '" + std::string(t.text) + "'", t.column);
        return v;
    }

    std::size_t count(const Token& t, bool allow_zero = false) const {
        std::size_t v = 0;
        const char* b = t.text.data();
        const char* e = b + t.text.size();
        const auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || ptr != e || (!allow_zero && v == 0))
            fail("expected a positive integer, got '" + std::string(t.text) + "'", t.column);
        return v;
    }

    void require_tokens(const std::vector<Token>& t, std::size_t n, const std::string& what) const {
        if (t.size() != n)
            fail("expected " + std::to_string(n) + " " + what + ", got " + std::to_string(t.size()),
                 t.size() > n ? t[n].column : text().size() + 1);
    }

    void require_keyword(const std::vector<Token>& t, std::string_view kw) const {
        if (t[0].text != kw) fail("expected '" + std::string(kw) + "', got '" + std::string(t[0].text) + "'", t[0].column);
    }

private:
    std::istream& in_;
    std::string line_;
    std::size_t line_no_ = 0;
};

std::vector<double> read_numbers(TextReader& r, std::size_t count, const std::string& what) {
    const auto t = r.expect(what);
    r.require_tokens(t, count, "values");
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = r.number(t[i]);
    return v;
}

Matrix read_rows(TextReader& r, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto v = read_numbers(r, static_cast<std::size_t>(cols), "matrix row " + std::to_string(i + 1));
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(j)];
    }
    return m;
}

void write_values(std::ostream& out, std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_double(v[i]);
    out << '\n';
}

void write_rows(std::ostream& out, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const Vector row = m.row(i).transpose();
        write_values(out, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    }
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(const std::string& s, char extra = ',') {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == extra || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

[[noreturn]] void bad_value(const std::string& key, const ConfigEntry& e, const std::string& why) {
    throw ParseError("config key '" + key + "': " + why, e.line, 0);
}

std::uint64_t as_u64(const std::string& key, const ConfigEntry& e) {
    std::uint64_t v = 0;
    const std::string s = trim(e.value);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, e, "expected a non-negative integer");
    return v;
}

double as_double(const std::string& key, const ConfigEntry& e, const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        bad_value(key, e, "expected a number, got '" + s + "'");
    return v;
}

std::vector<std::size_t> as_sizes(const std::string& key, const ConfigEntry& e) {
    std::vector<std::size_t> out;
    for (const auto& s : split_list(e.value)) {
        const ConfigEntry one{s, e.line};
        const auto v = as_u64(key, one);
        if (v == 0) bad_value(key, e, "values must be positive");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) bad_value(key, e, "empty list");
    return out;
}

std::vector<MixingRegime> as_regimes(const std::string& key, const ConfigEntry& e) {
    std::vector<MixingRegime> out;
    for (const auto& s : split_list(e.value)) {
        try {
            out.push_back(parse_regime(s));
        } catch (const std::invalid_argument& ex) {
            bad_value(key, e, ex.what());
        }
    }
    if (out.empty()) bad_value(key, e, "empty list");
    return out;
}

bool as_bool(const std::string& key, const ConfigEntry& e) {
    const std::string s = trim(e.value);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    bad_value(key, e, "expected true or false");
}

// Keys shared by all studies; returns false when `key` is not one of them.
template <class Config>
bool apply_common(const std::string& key, const ConfigEntry& e, Config& cfg) {
    if (key == "reps") {
        cfg.reps = static_cast<std::size_t>(as_u64(key, e));
        if (cfg.reps == 0) bad_value(key, e, "must be positive");
    } else if (key == "seed") {
        cfg.seed = as_u64(key, e);
    } else if (key == "threads") {
        cfg.threads = static_cast<unsigned>(as_u64(key, e));
    } else if (key == "study") {
        // informational
    } else {
        return false;
    }
    return true;
}

[[noreturn]] void unknown_key(const std::string& key, const ConfigEntry& e, const char* study) {
    throw ParseError("unknown key '" + key + "' for the " + std::string(study) + " study", e.line, 0);
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    if (std::isfinite(v) && s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

TensorSample read_tensor_sample(std::istream& in) {
    TextReader r(in);
    auto t = r.expect("the 'TBSS 1' header");
    if (t.size() != 2 || t[0].text != "TBSS" || t[1].text != "1") r.fail("expected the header 'TBSS 1'", 1);
    t = r.expect("'<n> <r>'");
    r.require_tokens(t, 2, "fields (n and r)");
    const std::size_t n = r.count(t[0]);
    const std::size_t order = r.count(t[1]);
    t = r.expect("the dimensions");
    r.require_tokens(t, order, "dimensions");
    Dims dims;
    for (const auto& tok : t) dims.push_back(r.count(tok));
    TensorSample s(dims, n);
    const std::size_t cells = s.cells();
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = read_numbers(r, cells, "observation " + std::to_string(i + 1));
        std::ranges::copy(v, s.observation(i).begin());
    }
    std::vector<Token> rest;
    while (r.next(rest))
        if (!rest.empty()) r.fail("unexpected data after the last observation", rest[0].column);
    return s;
}

void write_tensor_sample(std::ostream& out, const TensorSample& sample) {
    out << "TBSS 1\n" << sample.size() << ' ' << sample.order() << '\n';
    for (std::size_t m = 0; m < sample.order(); ++m) out << (m ? " " : "") << sample.dims()[m];
    out << '\n';
    for (std::size_t i = 0; i < sample.size(); ++i) write_values(out, sample.observation(i));
}

void write_model(std::ostream& out, const UnmixingModel& model) {
    const std::size_t r = model.order();
    out << "TBSS-MODEL 1\ndims";
    for (std::size_t d : model.dims) out << ' ' << d;
    out << "\nn " << model.n << "\nvariants";
    for (int v : model.variants) out << ' ' << v;
    out << "\nwhitening " << (model.whitening == Whitening::joint ? "joint" : "single_pass") << '\n';
    out << "scale " << format_double(model.scale) << "\nmean\n";
    write_values(out, model.mean.values());
    for (std::size_t m = 0; m < r; ++m) {
        out << "gamma " << (m + 1) << '\n';
        write_rows(out, model.gammas[m]);
        out << "eigenvalues " << (m + 1) << '\n';
        const Vector& ev = model.eigenvalues[m];
        write_values(out, std::span<const double>(ev.data(), static_cast<std::size_t>(ev.size())));
        out << "covariance " << (m + 1) << '\n';
        write_rows(out, model.covariances[m]);
    }
    for (const auto& w : model.warnings) out << "warning " << w << '\n';
    out << "end\n";
}

UnmixingModel read_model(std::istream& in) {
    TextReader r(in);
    auto t = r.expect("the 'TBSS-MODEL 1' header");
    if (t.size() != 2 || t[0].text != "TBSS-MODEL" || t[1].text != "1") r.fail("expected the header 'TBSS-MODEL 1'", 1);
    UnmixingModel m;

    t = r.expect("dims");
    r.require_keyword(t, "dims");
    if (t.size() < 2) r.fail("dims needs at least one size");
    for (std::size_t i = 1; i < t.size(); ++i) m.dims.push_back(r.count(t[i]));
    const std::size_t order = m.dims.size();

    t = r.expect("n");
    r.require_keyword(t, "n");
    r.require_tokens(t, 2, "fields");
    m.n = r.count(t[1], true);

    t = r.expect("variants");
    r.require_keyword(t, "variants");
    r.require_tokens(t, order + 1, "fields");
    for (std::size_t i = 1; i <= order; ++i) {
        if (t[i].text != "0" && t[i].text != "1") r.fail("variant must be 0 or 1", t[i].column);
        m.variants.push_back(t[i].text == "1");
    }

    t = r.expect("whitening");
    r.require_keyword(t, "whitening");
    r.require_tokens(t, 2, "fields");
    if (t[1].text == "joint") m.whitening = Whitening::joint;
    else if (t[1].text == "single_pass") m.whitening = Whitening::single_pass;
    else r.fail("unknown whitening scheme '" + std::string(t[1].text) + "'", t[1].column);

    t = r.expect("scale");
    r.require_keyword(t, "scale");
    r.require_tokens(t, 2, "fields");
    m.scale = r.number(t[1]);
    if (!(m.scale > 0.0)) r.fail("scale must be positive", t[1].column);

    t = r.expect("mean");
    r.require_keyword(t, "mean");
    m.mean = DataTensor(m.dims, read_numbers(r, dims_product(m.dims), "the mean"));

    for (std::size_t k = 1; k <= order; ++k) {
        const auto p = static_cast<Eigen::Index>(m.dims[k - 1]);
        const std::string ks = std::to_string(k);
        for (const char* section : {"gamma", "eigenvalues", "covariance"}) {
            t = r.expect(std::string(section) + " " + ks);
            r.require_keyword(t, section);
            r.require_tokens(t, 2, "fields");
            if (t[1].text != ks) r.fail("expected mode " + ks, t[1].column);
            if (std::string_view(section) == "gamma") {
                m.gammas.push_back(read_rows(r, p, p));
            } else if (std::string_view(section) == "eigenvalues") {
                const auto v = read_numbers(r, static_cast<std::size_t>(p), "eigenvalues");
                m.eigenvalues.push_back(Eigen::Map<const Vector>(v.data(), p));
            } else {
                m.covariances.push_back(read_rows(r, p, p));
            }
        }
    }
    for (;;) {
        t = r.expect("'end'");
        if (t[0].text == "end") break;
        r.require_keyword(t, "warning");
        const std::string& line = r.text();
        m.warnings.push_back(trim(std::string_view(line).substr(t[0].column - 1 + 7)));
    }
    return m;
}

Matrix read_matrix(std::istream& in) {
    TextReader r(in);
    const auto t = r.expect("'<rows> <cols>'");
    r.require_tokens(t, 2, "fields (rows and cols)");
    const auto rows = static_cast<Eigen::Index>(r.count(t[0]));
    const auto cols = static_cast<Eigen::Index>(r.count(t[1]));
    Matrix m = read_rows(r, rows, cols);
    std::vector<Token> rest;
    while (r.next(rest))
        if (!rest.empty()) r.fail("unexpected data after the last row", rest[0].column);
    return m;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    out << m.rows() << ' ' << m.cols() << '\n';
    write_rows(out, m);
}

void write_results_csv(std::ostream& out, const ExperimentResult& result) {
    auto field = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    out << "replication,seed,n,regime,method,variant,metric\n";
    for (const auto& row : result.rows)
        out << row.replication << ',' << row.seed << ',' << row.n << ',' << field(row.regime) << ','
            << field(row.method) << ',' << field(row.variant) << ',' << format_double(row.metric) << '\n';
}

KeyValues read_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        const std::string body = trim(std::string_view(line).substr(0, line.find('#')));
        if (body.empty()) continue;
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", no, 1);
        const std::string key = trim(std::string_view(body).substr(0, eq));
        if (key.empty()) throw ParseError("missing key before '='", no, 1);
        if (kv.contains(key)) throw ParseError("duplicate key '" + key + "'", no, 1);
        kv[key] = {trim(std::string_view(body).substr(eq + 1)), no};
    }
    return kv;
}

void apply_config(const KeyValues& kv, SeparationConfig& cfg) {
    const ConfigEntry* dims = nullptr;
    const ConfigEntry* names = nullptr;
    for (const auto& [key, e] : kv) {
        if (apply_common(key, e, cfg)) continue;
        if (key == "ns") cfg.ns = as_sizes(key, e);
        else if (key == "regimes") cfg.regimes = as_regimes(key, e);
        else if (key == "include_fobi") cfg.include_fobi = as_bool(key, e);
        else if (key == "dims") dims = &e;
        else if (key == "names") names = &e;
        else unknown_key(key, e, "separation");
    }
    if ((dims == nullptr) != (names == nullptr))
        throw ParseError("'dims' and 'names' must be given together", (dims ? dims : names)->line, 0);
    if (dims) {
        try {
            cfg.grid = SourceGrid::from_names(as_sizes("dims", *dims), split_list(names->value));
        } catch (const std::invalid_argument& ex) {
            bad_value("names", *names, ex.what());
        }
    }
}

void apply_config(const KeyValues& kv, VariantConfig& cfg) {
    for (const auto& [key, e] : kv) {
        if (apply_common(key, e, cfg)) continue;
        if (key == "ns") {
            cfg.ns = as_sizes(key, e);
        } else if (key == "setting") {
            const auto s = as_u64(key, e);
            if (s != 1 && s != 2) bad_value(key, e, "must be 1 or 2");
            cfg.setting = static_cast<int>(s);
        } else if (key == "variants") {
            cfg.variants.clear();
            std::stringstream ss(e.value);
            std::string pair;
            while (std::getline(ss, pair, ';')) {
                const auto parts = split_list(pair);
                if (parts.size() != 2) bad_value(key, e, "expected pairs like '0,1' separated by ';'");
                std::array<int, 2> v{};
                for (int i = 0; i < 2; ++i) {
                    if (parts[static_cast<std::size_t>(i)] != "0" && parts[static_cast<std::size_t>(i)] != "1")
                        bad_value(key, e, "variant flags must be 0 or 1");
                    v[static_cast<std::size_t>(i)] = parts[static_cast<std::size_t>(i)] == "1";
                }
                cfg.variants.push_back(v);
            }
            if (cfg.variants.empty()) bad_value(key, e, "empty list");
        } else {
            unknown_key(key, e, "variant");
        }
    }
}

void apply_config(const KeyValues& kv, ClassificationConfig& cfg) {
    for (const auto& [key, e] : kv) {
        if (apply_common(key, e, cfg)) continue;
        if (key == "pis") {
            cfg.pis.clear();
            for (const auto& s : split_list(e.value)) {
                const double v = as_double(key, e, s);
                if (!(v > 0.0 && v < 1.0)) bad_value(key, e, "proportions must lie in (0, 1)");
                cfg.pis.push_back(v);
            }
            if (cfg.pis.empty()) bad_value(key, e, "empty list");
        } else if (key == "regimes") {
            cfg.regimes = as_regimes(key, e);
        } else if (key == "n") {
            cfg.n = static_cast<std::size_t>(as_u64(key, e));
        } else if (key == "n_train") {
            cfg.n_train = static_cast<std::size_t>(as_u64(key, e));
        } else if (key == "shift") {
            cfg.shift = as_double(key, e, trim(e.value));
        } else {
            unknown_key(key, e, "classification");
        }
    }
}

SourceGrid read_grid_spec(std::istream& in) {
    TextReader r(in);
    std::vector<Token> t;
    Dims dims;
    std::vector<std::string> names;
    std::size_t dims_line = 0;
    while (r.next(t)) {
        std::size_t used = 0;
        for (; used < t.size(); ++used)
            if (t[used].text.front() == '#') break;
        t.resize(used);
        if (t.empty()) continue;
        if (dims.empty()) {
            r.require_keyword(t, "dims");
            if (t.size() < 2) r.fail("dims needs at least one size");
            for (std::size_t i = 1; i < t.size(); ++i) dims.push_back(r.count(t[i]));
            dims_line = r.line();
            continue;
        }
        for (const auto& tok : t) {
            try {
                find_distribution(tok.text);
            } catch (const std::invalid_argument& ex) {
                r.fail(ex.what(), tok.column);
            }
            names.emplace_back(tok.text);
        }
    }
    if (dims.empty()) throw ParseError("missing 'dims' line", r.line() + 1, 0);
    if (names.size() != dims_product(dims))
        throw ParseError("grid needs " + std::to_string(dims_product(dims)) + " distribution names, got " +
                             std::to_string(names.size()),
                         dims_line, 0);
    return SourceGrid::from_names(dims, names);
}

std::vector<SemeionRecord> read_semeion(std::istream& in) {
    TextReader r(in);
    std::vector<SemeionRecord> out;
    std::vector<Token> t;
    while (r.next(t)) {
        if (t.empty()) continue;
        r.require_tokens(t, 266, "fields");
        SemeionRecord rec;
        rec.pixels.resize(256);
        for (std::size_t i = 0; i < 256; ++i) {
            const double v = r.number(t[i]);
            if (v != 0.0 && v != 1.0) r.fail("pixel values must be 0 or 1", t[i].column);
            rec.pixels[i] = v;
        }
        int hot = 0;
        for (int d = 0; d < 10; ++d) {
            const Token& tok = t[256 + static_cast<std::size_t>(d)];
            const double v = r.number(tok);
            if (v != 0.0 && v != 1.0) r.fail("label fields must be 0 or 1", tok.column);
            if (v == 1.0) {
                rec.digit = d;
                ++hot;
            }
        }
        if (hot != 1) r.fail("expected exactly one label field set, got " + std::to_string(hot), t[256].column);
        out.push_back(std::move(rec));
    }
    return out;
}

TensorSample semeion_sample(const std::vector<SemeionRecord>& records, const std::vector<int>& digits,
                            std::vector<int>* labels) {
    std::vector<const SemeionRecord*> keep;
    for (const auto& rec : records)
        if (std::ranges::find(digits, rec.digit) != digits.end()) keep.push_back(&rec);
    TensorSample s({16, 16}, keep.size());
    if (labels) labels->clear();
    for (std::size_t i = 0; i < keep.size(); ++i) {
        std::ranges::copy(keep[i]->pixels, s.observation(i).begin());
        if (labels) labels->push_back(keep[i]->digit);
    }
    return s;
}

void write_label_csv(std::ostream& out, const std::vector<int>& labels) {
    out << "index,digit\n";
    for (std::size_t i = 0; i < labels.size(); ++i) out << (i + 1) << ',' << labels[i] << '\n';
}

}  // namespace tbss
