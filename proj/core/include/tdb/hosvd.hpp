#pragma once

// Truncated higher-order SVD under weighted inner products.

#include "tdb/state.hpp"
#include "tdb/tensor.hpp"

#include <memory>
#include <vector>

namespace tdb {

/// Leading singular values of a weighted mode-n unfolding and their
/// weighted-orthonormal left singular vectors (UᵀWU = I).
struct ModeSpectrum {
    Vector singular_values; ///< non-increasing, >= 0
    Matrix vectors;         ///< N_n × k
};

/// Flip each column so its largest-magnitude entry is positive.
void normalize_signs(Matrix& vectors);

/// Top-k weighted singular triplets of unfold(v, n), from the N_n × N_n
/// weighted Gram matrix. Rows with zero weight get zero vector entries.
ModeSpectrum mode_svd(const DenseTensor& v, Index n, const ModeWeights& weights, Index k);

/// All N_n singular values of the weighted mode-n unfolding.
Vector mode_singular_values(const DenseTensor& v, Index n, const ModeWeights& weights);

struct HosvdResult {
    TdbState state;
    std::vector<ModeSpectrum> spectra; ///< full spectra (k = N_n) per mode
};

/// Truncated HOSVD keeping the full mode spectra for rank decisions.
HosvdResult hosvd(const DenseTensor& v, std::shared_ptr<const ModeWeights> weights,
                  const MultiRank& ranks, double time = 0.0);

/// Truncated state from spectra already computed for v (bases are the
/// leading columns; the core is recomputed by projection).
TdbState truncate_from_spectra(const DenseTensor& v, std::shared_ptr<const ModeWeights> weights,
                               const std::vector<ModeSpectrum>& spectra, const MultiRank& ranks,
                               double time = 0.0);

TdbState hosvd_truncate(const DenseTensor& v, std::shared_ptr<const ModeWeights> weights,
                        const MultiRank& ranks, double time = 0.0);

/// Smallest rank with Σ_{i≤r} σ_i² / Σ_i σ_i² × 100 ≥ energy_percent.
Index rank_for_energy(const Vector& singular_values, double energy_percent);

/// Per-mode rank_for_energy, clamped to a feasible multirank.
MultiRank ranks_for_energy(const std::vector<ModeSpectrum>& spectra, double energy_percent,
                           std::span<const Index> dims);

/// sqrt(Σ_n Σ_{i>r_n} σ_i⁽ⁿ⁾²): upper bound of the truncation error.
double hosvd_tail_bound(const std::vector<ModeSpectrum>& spectra, std::span<const Index> ranks);

} // namespace tdb
