#pragma once

// Evolution equations of the core tensor and the time-dependent bases
// (dynamically orthogonal gauge: ⟨u̇ᵢ, uⱼ⟩ = 0), their time integration,
// finite-difference derivative estimation and drift control.

#include "tdb/state.hpp"
#include "tdb/tensor.hpp"

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace tdb {

inline constexpr double kDefaultPinvTolerance = 1e-10;
inline constexpr double kReorthonormalizeTrigger = 1e-10;

/// 𝒯̇ = V̇ ×₁ (U⁽¹⁾ᵀW⁽¹⁾) ×₂ … ×ₚ (U⁽ᵖ⁾ᵀW⁽ᵖ⁾).
DenseTensor project_core_rhs(const DenseTensor& vdot, const TdbState& state);

/// Moore–Penrose pseudoinverse of unfold(core, n) ((∏_{m≠n} r_m) × r_n).
/// Singular values below tol·σ_max are dropped. Throws rank_collapse on an
/// all-zero core.
Matrix core_pseudoinverse(const DenseTensor& core, Index n, double tol = kDefaultPinvTolerance);

/// U̇⁽ʲ⁾ = (I − U⁽ʲ⁾U⁽ʲ⁾ᵀW⁽ʲ⁾) · unfold_j(V̇ ×_{n≠j} U⁽ⁿ⁾ᵀW⁽ⁿ⁾) · 𝒯₍ⱼ₎†.
Matrix project_basis_rhs(const DenseTensor& vdot, const TdbState& state, Index j,
                         double tol = kDefaultPinvTolerance);

struct TdbRhs {
    DenseTensor core;
    std::vector<Matrix> bases;
};

/// Core and all basis right-hand sides in one pass; the partial
/// contractions over trailing modes are shared between modes.
TdbRhs evaluate_rhs(const DenseTensor& vdot, const TdbState& state,
                    double tol = kDefaultPinvTolerance);

enum class Integrator { euler, rk2 };

std::string_view integrator_name(Integrator i) noexcept;
Integrator parse_integrator(std::string_view name);

/// Returns V̇ at the requested time. rk2 asks for t and t + Δt (Heun form).
using DerivativeFn = std::function<DenseTensor(double t)>;

struct StepOptions {
    double pinv_tolerance = kDefaultPinvTolerance;
    double reorthonormalize_trigger = kReorthonormalizeTrigger;
};

/// Advance core and bases together by one step of length dt.
TdbState step(const TdbState& state, const DerivativeFn& derivative, double dt,
              Integrator integrator, const StepOptions& options = {});

/// Replace each basis by its weighted-QR factor Q and absorb R into the core
/// (core ×ₙ R), leaving reconstruct() unchanged. Throws numeric on a
/// rank-deficient basis.
TdbState reorthonormalize(const TdbState& state);

// ---------------------------------------------------------------------------
// Derivative estimation from snapshot windows

enum class DerivativeScheme {
    exact,   ///< analytic derivative supplied by the stream
    fd1,     ///< (V_k − V_{k−1}) / Δt
    fd2,     ///< (3V_k − 4V_{k−1} + V_{k−2}) / (2Δt)
    central, ///< (V_{k+1} − V_{k−1}) / (2Δt), offline only
};

std::string_view scheme_name(DerivativeScheme s) noexcept;
DerivativeScheme parse_scheme(std::string_view name);

struct DerivativeEstimate {
    DenseTensor value;
    DerivativeScheme scheme = DerivativeScheme::fd1;
    double time = 0.0;
    Index snapshots_used = 0;
};

struct TimedSnapshot {
    double time = 0.0;
    DenseTensor value;
};

/// Estimate V̇ from a window ordered oldest to newest. fd1/fd2 estimate at
/// the newest snapshot; central estimates at the middle of the last three.
/// Times must be strictly increasing with spacing dt.
DerivativeEstimate estimate_vdot(std::span<const TimedSnapshot> window, DerivativeScheme scheme,
                                 double dt);

} // namespace tdb
