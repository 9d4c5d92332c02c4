#pragma once

// Text formats used by the command-line tool.
//
// Tensor sample file:
//
//     TBSS 1
//     <n> <r>
//     <p_1> ... <p_r>
//     <prod p_m values of observation 1, last index fastest>
//     ...
//
// Model file: "TBSS-MODEL 1" followed by keyword lines (see write_model).
// Matrix file: "<rows> <cols>" followed by the rows.
// Numbers are written with 17 significant digits so doubles round-trip.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tbss/estimators.hpp"
#include "tbss/simulation.hpp"
#include "tbss/studies.hpp"

namespace tbss {

/// %.17g, with ".0" appended when the result looks like an integer.
std::string format_double(double v);

TensorSample read_tensor_sample(std::istream& in);
void write_tensor_sample(std::ostream& out, const TensorSample& sample);

UnmixingModel read_model(std::istream& in);
void write_model(std::ostream& out, const UnmixingModel& model);

Matrix read_matrix(std::istream& in);
void write_matrix(std::ostream& out, const Matrix& m);

/// Header "replication,seed,n,regime,method,variant,metric", one line per row.
/// Fields containing commas are double-quoted.
void write_results_csv(std::ostream& out, const ExperimentResult& result);

struct ConfigEntry {
    std::string value;
    std::size_t line = 0;
};
using KeyValues = std::map<std::string, ConfigEntry>;

/// Flat "key = value" lines; '#' starts a comment, blank lines are ignored.
KeyValues read_key_values(std::istream& in);

/// Applies recognised keys (ns, regimes, reps, seed, threads, grid dims/names,
/// include_fobi / setting, variants / pis, n, n_train, shift). Unknown keys
/// raise ParseError.
void apply_config(const KeyValues& kv, SeparationConfig& cfg);
void apply_config(const KeyValues& kv, VariantConfig& cfg);
void apply_config(const KeyValues& kv, ClassificationConfig& cfg);

/// "dims p_1 ... p_r" followed by prod p_m catalog names in storage order.
SourceGrid read_grid_spec(std::istream& in);

/// One handwritten digit: 16 x 16 binary pixels (row-major) and its label.
struct SemeionRecord {
    std::vector<double> pixels;
    int digit = 0;
};

/// 256 pixel values then 10 one-hot label fields per line.
std::vector<SemeionRecord> read_semeion(std::istream& in);
/// Records whose digit is in `digits`, as a sample of 16 x 16 matrices, in file order.
TensorSample semeion_sample(const std::vector<SemeionRecord>& records, const std::vector<int>& digits,
                            std::vector<int>* labels = nullptr);
/// "index,digit" with 1-based indices into the filtered sample.
void write_label_csv(std::ostream& out, const std::vector<int>& labels);

}  // namespace tbss
