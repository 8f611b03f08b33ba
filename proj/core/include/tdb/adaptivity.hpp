#pragma once

// Error monitoring and rank control: reinitialize from a truncated HOSVD
// when the error threshold is violated, add modes when reinitialization
// alone does not restore it, and remove modes when the captured energy is
// excessive while the error trend is decreasing.

#include "tdb/hosvd.hpp"
#include "tdb/state.hpp"

#include <deque>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace tdb {

struct AdaptiveConfig {
    /// ε_th, same units as the weighted data norm. Infinity disables control.
    double error_threshold = std::numeric_limits<double>::infinity();
    /// γ_th in percent, in (0, 100).
    double energy_threshold = 99.999;
    /// m: number of non-reinit records the error slope is fitted over.
    Index slope_window = 10;
    /// Steps between full error evaluations / controller decisions.
    Index check_interval = 1;
    /// Per-mode rank bounds; empty means [1, N_n].
    MultiRank min_ranks;
    MultiRank max_ranks;

    void validate(std::span<const Index> dims) const;
    [[nodiscard]] bool enabled() const noexcept;
};

enum class Action { none, reinit_same_rank, reinit_add, reinit_remove };

std::string_view action_name(Action a) noexcept;

struct StepRecord {
    double time = 0.0;
    double error = 0.0;
    std::vector<double> captured; ///< γ⁽ⁿ⁾ per mode, percent
    MultiRank ranks;
    bool reinit = false;
    Action action = Action::none;
};

/// Rolling error trace. Reinitialized records are kept for logging but
/// excluded from the slope, and the slope only looks past the most recent
/// reinitialization.
class AdaptiveHistory {
public:
    explicit AdaptiveHistory(Index capacity = 64);

    /// Throws unless record.time is strictly greater than the last one.
    void push(StepRecord record);
    [[nodiscard]] bool empty() const noexcept { return records_.empty(); }
    [[nodiscard]] const StepRecord& back() const;
    StepRecord& back();
    [[nodiscard]] const std::deque<StepRecord>& records() const noexcept { return records_; }

private:
    Index capacity_;
    std::deque<StepRecord> records_;
};

/// Least-squares slope of ε versus t over the last m non-reinit records
/// after the latest reinitialization; nullopt when fewer are available.
std::optional<double> error_slope(const AdaptiveHistory& history, Index m);

/// ε = weighted Frobenius norm of V − reconstruct(state).
double compute_error(const DenseTensor& v, const TdbState& state);

/// γ⁽ⁿ⁾ = Σσᵢ² / (Σσᵢ² + ε²) × 100 with σ from unfold(core, n).
double captured_energy(const TdbState& state, double error, Index n);
std::vector<double> captured_energies(const TdbState& state, double error);

/// Per-mode rank after dropping modes: smallest r with
/// Σ_{i≤r}σᵢ² / (Σσᵢ² + ε²) × 100 ≥ γ_th, then raised until the predicted
/// error sqrt(ε² + Σ dropped σ²) stays within ε_th.
MultiRank removal_target(const TdbState& state, double error, const AdaptiveConfig& config);

/// Ranks to reinitialize with after a same-rank reinitialization missed ε_th:
/// the larger of the γ_th ranks and the smallest increase whose HOSVD tail
/// bound meets ε_th.
MultiRank addition_target(const std::vector<ModeSpectrum>& spectra, const MultiRank& current,
                          const AdaptiveConfig& config, std::span<const Index> dims);

struct Decision {
    Action action = Action::none;
    std::optional<TdbState> state; ///< reinitialized state, when action != none
    double error = 0.0;            ///< ε of the returned state
};

/// One pass of the controller. history.back() must hold the current
/// step's ε and γ for `state`.
Decision decide(const DenseTensor& v, const TdbState& state, const AdaptiveConfig& config,
                const AdaptiveHistory& history);

} // namespace tdb
