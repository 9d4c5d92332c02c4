#pragma once

// Monte-Carlo drivers for the three simulation studies. Every replication
// gets its own seeds derived from the master seed, replications may run on
// several threads, and rows always come back in the same order, so a given
// configuration yields identical results on every run.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tbss/simulation.hpp"

namespace tbss {

/// One CSV record. Theoretical limit rows use replication = -1 and regime = "limit".
struct ResultRow {
    long replication = 0;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::string regime;
    std::string method;
    std::string variant;
    double metric = 0.0;
};

struct ExperimentResult {
    std::string study;
    /// Configuration echo as key/value pairs.
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<ResultRow> rows;
};

struct SeparationConfig {
    std::vector<std::size_t> ns{1000, 2000, 4000, 8000, 16000, 32000, 64000, 128000, 256000};
    std::vector<MixingRegime> regimes{MixingRegime::gaussian, MixingRegime::uniform, MixingRegime::haar};
    std::size_t reps = 200;
    std::uint64_t seed = 1;
    /// Worker threads; 0 = hardware concurrency.
    unsigned threads = 0;
    SourceGrid grid = separation_grid();
    bool include_fobi = true;
};

struct VariantConfig {
    /// 1 or 2, selecting variant_setting_grid.
    int setting = 1;
    std::vector<std::size_t> ns{1000, 2000, 4000, 8000, 16000, 32000, 64000, 128000, 256000};
    std::size_t reps = 200;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    /// (left, right) normalizations to compare.
    std::vector<std::array<int, 2>> variants{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
};

struct ClassificationConfig {
    std::vector<double> pis{0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50};
    std::vector<MixingRegime> regimes{MixingRegime::gaussian, MixingRegime::uniform, MixingRegime::haar};
    std::size_t reps = 100;
    std::size_t n = 500;
    std::size_t n_train = 400;
    /// Mean of the group-2 corner cells.
    double shift = 2.0;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

/// In all studies a fit that fails numerically (singular covariance, no
/// whitening convergence) yields a NaN metric; config gains "failed_fits".

/// FOBI on vectorized data versus MFOBI/TFOBI across sample sizes and mixing
/// regimes; metric = n (p - 1) D^2 of the Kronecker (or FOBI) unmixing estimate
/// against the true mixing. Adds limit rows for both methods at every n.
ExperimentResult run_separation_study(const SeparationConfig& config);

/// Unmixed 3 x 3 samples analysed with every (left, right) normalization
/// pair on the same data; metric as in the separation study, plus limit rows.
ExperimentResult run_variant_study(const VariantConfig& config);

/// Two-group 5 x 5 x 5 data; metric = test-set accuracy of LDA on TFOBI
/// features, FOBI features, all raw components (NONE) and the majority-class
/// rule (BASELINE). The variant column holds "pi=<value>".
ExperimentResult run_classification_study(const ClassificationConfig& config);

/// "l,r"-style label of a variant tuple.
std::string variant_label(std::span<const int> variants);

/// Runs task(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). The first exception thrown by any task is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task);

}  // namespace tbss
