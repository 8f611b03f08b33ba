#pragma once

#include "tdb/state.hpp"

namespace tdb {

/// Energetically ranked basis of one mode: Ũ = U Ψ, where
/// unfold(core, n) = Ψ Σ Θᵀ.
struct RankedBasis {
    Index mode = 0;
    Matrix basis;          ///< Ũ⁽ⁿ⁾, N_n × r_n
    Vector singular_values;
    Matrix rotation;       ///< Ψ⁽ⁿ⁾, r_n × r_n
};

/// Singular values of unfold(core, n), non-increasing.
Vector core_singular_values(const DenseTensor& core, Index n);

/// Throws rank_collapse on a zero core. Column signs follow the HOSVD
/// convention (largest-magnitude entry of each Ũ column positive).
RankedBasis ranked_basis(const TdbState& state, Index n);

/// Principal angles (radians, ascending) between the spans of two
/// weighted-orthonormal bases.
Vector principal_angles(const Matrix& a, const Matrix& b, const Vector& weights);

} // namespace tdb
