#pragma once

#include "tdb/tensor.hpp"

#include <memory>
#include <vector>

namespace tdb {

/// Compressed representation of one snapshot: core tensor plus one
/// weighted-orthonormal basis per mode, V ≈ core ×₁ U⁽¹⁾ ×₂ … ×ₚ U⁽ᵖ⁾.
struct TdbState {
    double time = 0.0;
    DenseTensor core;
    std::vector<Matrix> bases; ///< bases[n] is N_n × r_n
    std::shared_ptr<const ModeWeights> weights;

    [[nodiscard]] Index order() const noexcept { return bases.size(); }
    [[nodiscard]] MultiRank ranks() const;
    [[nodiscard]] Shape dims() const;

    /// Throws on inconsistent sizes or an infeasible multirank.
    void validate() const;
};

/// max over modes of |Uᵀ diag(w) U − I|.
double orthonormality_defect(const TdbState& state);

/// V_TDB = core ×₁ U⁽¹⁾ ×₂ … ×ₚ U⁽ᵖ⁾.
DenseTensor reconstruct(const TdbState& state);

} // namespace tdb
