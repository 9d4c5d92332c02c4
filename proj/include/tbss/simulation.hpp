#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tbss/asymptotics.hpp"
#include "tbss/distributions.hpp"
#include "tbss/rng.hpp"
#include "tbss/tensor.hpp"

namespace tbss {

/// A tensor-shaped grid of standardized source laws (row-major cells).
struct SourceGrid {
    Dims dims;
    std::vector<const SourceDistribution*> cells;

    /// Builds a grid from catalog names; throws on unknown names or a count mismatch.
    static SourceGrid from_names(Dims dims, const std::vector<std::string>& names);
    /// Every cell drawn from the same law.
    static SourceGrid uniform_grid(Dims dims, std::string_view name);

    /// Exact moment profile for the asymptotic formulas.
    MomentProfile profile() const;
    std::vector<std::string> names() const;
};

/// The 3 x 4 grid of the separation study (kurtoses 1.8 ... 18).
SourceGrid separation_grid();

/// The 3 x 3 grids of the normed-versus-plain comparison. Setting 1: normal
/// corner, uniform centre, two-point elsewhere; setting 2: two-point corner,
/// uniform centre, normal elsewhere.
SourceGrid variant_setting_grid(int setting);

enum class MixingRegime { identity, gaussian, uniform, haar };

std::string_view to_string(MixingRegime r);
/// Accepts identity, gaussian/normal, uniform, haar/orthogonal.
MixingRegime parse_regime(std::string_view s);

struct MixingSpec {
    MixingRegime regime = MixingRegime::identity;
    std::vector<Matrix> omegas;
};

/// Per-mode mixing matrices: identities, i.i.d. N(0, 1) entries, i.i.d.
/// U(-1, 1) entries or Haar-distributed orthogonal matrices. Rank-deficient
/// draws are redrawn (at most 100 attempts per mode).
MixingSpec gen_mixing(MixingRegime regime, const Dims& dims, std::uint64_t seed);

/// A Haar-distributed p x p orthogonal matrix.
Matrix haar_orthogonal(Eigen::Index p, Rng& rng);

/// n independent draws of the source tensor Z.
TensorSample sample_sources(const SourceGrid& grid, std::size_t n, std::uint64_t seed);

/// n draws of X = Z x_1 Omega_1 ... x_r Omega_r; Z depends only on the seed.
TensorSample sample_ic(const SourceGrid& grid, const MixingSpec& mixing, std::size_t n,
                       std::uint64_t seed);

}  // namespace tbss
