#include "tdb/adaptivity.hpp"

#include "tdb/coherent.hpp"
#include "tdb/error.hpp"

#include <algorithm>
#include <cmath>

namespace tdb {

namespace {

Index bound_at(const MultiRank& bounds, Index n, Index fallback) {
    return bounds.empty() ? fallback : bounds[n];
}

Index product_except(const MultiRank& r, Index n) {
    Index p = 1;
    for (Index m = 0; m < r.size(); ++m)
        if (m != n) p *= r[m];
    return p;
}

// Raise ranks (never lower the ones requested) until the multirank is
// feasible; grows the smallest other mode first. Falls back to lowering
// when the bounds leave no room.
MultiRank repair_upward(MultiRank r, const MultiRank& upper, std::span<const Index> dims) {
    if (r.size() < 2) return r;
    for (int guard = 0; guard < 10000; ++guard) {
        Index bad = r.size();
        for (Index n = 0; n < r.size(); ++n)
            if (r[n] > product_except(r, n)) { bad = n; break; }
        if (bad == r.size()) return r;
        Index grow = r.size();
        for (Index m = 0; m < r.size(); ++m) {
            if (m == bad || r[m] >= upper[m]) continue;
            if (grow == r.size() || r[m] < r[grow]) grow = m;
        }
        if (grow == r.size()) return clamp_feasible(std::move(r), dims);
        ++r[grow];
    }
    return clamp_feasible(std::move(r), dims);
}

} // namespace

void AdaptiveConfig::validate(std::span<const Index> dims) const {
    require(error_threshold > 0.0, ErrorCategory::config, "error threshold must be > 0");
    require(energy_threshold > 0.0 && energy_threshold < 100.0, ErrorCategory::config,
            "energy threshold must lie in (0, 100)");
    require(slope_window >= 2, ErrorCategory::config, "slope window must be >= 2");
    require(check_interval >= 1, ErrorCategory::config, "check interval must be >= 1");
    for (const MultiRank* b : {&min_ranks, &max_ranks}) {
        if (b->empty()) continue;
        require(b->size() == dims.size(), ErrorCategory::config, "rank bounds have the wrong order");
        for (Index n = 0; n < dims.size(); ++n)
            require((*b)[n] >= 1 && (*b)[n] <= dims[n], ErrorCategory::config,
                    "rank bound of mode " + std::to_string(n) + " outside [1, N_n]");
    }
    if (!min_ranks.empty() && !max_ranks.empty())
        for (Index n = 0; n < dims.size(); ++n)
            require(min_ranks[n] <= max_ranks[n], ErrorCategory::config, "min rank exceeds max rank");
}

bool AdaptiveConfig::enabled() const noexcept { return std::isfinite(error_threshold); }

std::string_view action_name(Action a) noexcept {
    switch (a) {
    case Action::none: return "none";
    case Action::reinit_same_rank: return "reinit_same_rank";
    case Action::reinit_add: return "reinit_add";
    case Action::reinit_remove: return "reinit_remove";
    }
    return "unknown";
}

AdaptiveHistory::AdaptiveHistory(Index capacity) : capacity_(std::max<Index>(capacity, 2)) {}

void AdaptiveHistory::push(StepRecord record) {
    if (!records_.empty())
        require(record.time > records_.back().time, ErrorCategory::range,
                "history timestamps must be strictly increasing");
    records_.push_back(std::move(record));
    while (records_.size() > capacity_) records_.pop_front();
}

const StepRecord& AdaptiveHistory::back() const {
    require(!records_.empty(), ErrorCategory::range, "history is empty");
    return records_.back();
}

StepRecord& AdaptiveHistory::back() {
    require(!records_.empty(), ErrorCategory::range, "history is empty");
    return records_.back();
}

std::optional<double> error_slope(const AdaptiveHistory& history, Index m) {
    std::vector<const StepRecord*> window;
    for (auto it = history.records().rbegin(); it != history.records().rend() && window.size() < m; ++it) {
        if (it->reinit) break;
        window.push_back(&*it);
    }
    if (m < 2 || window.size() < m) return std::nullopt;
    double tm = 0.0, em = 0.0;
    for (const StepRecord* r : window) {
        tm += r->time;
        em += r->error;
    }
    tm /= static_cast<double>(m);
    em /= static_cast<double>(m);
    double num = 0.0, den = 0.0;
    for (const StepRecord* r : window) {
        num += (r->time - tm) * (r->error - em);
        den += (r->time - tm) * (r->time - tm);
    }
    return den > 0.0 ? num / den : 0.0;
}

double compute_error(const DenseTensor& v, const TdbState& state) {
    return weighted_frobenius(v - reconstruct(state), *state.weights);
}

double captured_energy(const TdbState& state, double error, Index n) {
    require(error >= 0.0, ErrorCategory::range, "captured_energy: error must be >= 0");
    const double resolved = core_singular_values(state.core, n).squaredNorm();
    const double total = resolved + error * error;
    require(total > 0.0, ErrorCategory::rank_collapse,
            "captured_energy undefined: zero core with zero error");
    return resolved / total * 100.0;
}

std::vector<double> captured_energies(const TdbState& state, double error) {
    std::vector<double> g;
    for (Index n = 0; n < state.order(); ++n) g.push_back(captured_energy(state, error, n));
    return g;
}

MultiRank removal_target(const TdbState& state, double error, const AdaptiveConfig& config) {
    const MultiRank current = state.ranks();
    const Shape dims = state.dims();
    const Index p = current.size();
    std::vector<Vector> sigma(p);
    MultiRank target(p);
    for (Index n = 0; n < p; ++n) {
        sigma[n] = core_singular_values(state.core, n);
        const double denom = sigma[n].squaredNorm() + error * error;
        target[n] = current[n];
        double acc = 0.0;
        for (Index r = 1; r <= current[n] && denom > 0.0; ++r) {
            acc += sigma[n][static_cast<Eigen::Index>(r - 1)] * sigma[n][static_cast<Eigen::Index>(r - 1)];
            if (acc / denom * 100.0 >= config.energy_threshold) {
                target[n] = r;
                break;
            }
        }
        target[n] = std::max(target[n], bound_at(config.min_ranks, n, 1));
        target[n] = std::min(target[n], current[n]);
    }
    // Restore the largest dropped singular values until the predicted error fits.
    auto dropped = [&]() {
        double d = error * error;
        for (Index n = 0; n < p; ++n)
            for (Index i = target[n]; i < current[n]; ++i)
                d += sigma[n][static_cast<Eigen::Index>(i)] * sigma[n][static_cast<Eigen::Index>(i)];
        return d;
    };
    const double limit = config.error_threshold * config.error_threshold;
    while (dropped() > limit) {
        Index best = p;
        double best_sigma = -1.0;
        for (Index n = 0; n < p; ++n) {
            if (target[n] >= current[n]) continue;
            const double s = sigma[n][static_cast<Eigen::Index>(target[n])];
            if (s > best_sigma) {
                best_sigma = s;
                best = n;
            }
        }
        if (best == p) break;
        ++target[best];
    }
    return clamp_feasible(std::move(target), dims);
}

MultiRank addition_target(const std::vector<ModeSpectrum>& spectra, const MultiRank& current,
                          const AdaptiveConfig& config, std::span<const Index> dims) {
    const Index p = current.size();
    MultiRank upper(p);
    for (Index n = 0; n < p; ++n) upper[n] = std::min(bound_at(config.max_ranks, n, dims[n]), dims[n]);

    MultiRank by_tail = current;
    while (hosvd_tail_bound(spectra, by_tail) > config.error_threshold) {
        Index best = p;
        double best_sigma = -1.0;
        for (Index n = 0; n < p; ++n) {
            if (by_tail[n] >= upper[n]) continue;
            const double s = spectra[n].singular_values[static_cast<Eigen::Index>(by_tail[n])];
            if (s > best_sigma) {
                best_sigma = s;
                best = n;
            }
        }
        if (best == p) break;
        ++by_tail[best];
    }
    MultiRank target(p);
    for (Index n = 0; n < p; ++n) {
        const Index by_energy = rank_for_energy(spectra[n].singular_values, config.energy_threshold);
        target[n] = std::min(std::max({current[n], by_tail[n], by_energy}), upper[n]);
    }
    return repair_upward(std::move(target), upper, dims);
}

Decision decide(const DenseTensor& v, const TdbState& state, const AdaptiveConfig& config,
                const AdaptiveHistory& history) {
    Decision d;
    if (!config.enabled()) return d;
    const StepRecord& now = history.back();
    const MultiRank ranks = state.ranks();
    const Shape dims = state.dims();

    if (now.error > config.error_threshold) {
        HosvdResult fresh = hosvd(v, state.weights, ranks, state.time);
        const double err = compute_error(v, fresh.state);
        if (err <= config.error_threshold) {
            d.action = Action::reinit_same_rank;
            d.error = err;
            d.state = std::move(fresh.state);
            return d;
        }
        const MultiRank grown = addition_target(fresh.spectra, ranks, config, dims);
        if (grown == ranks) {
            d.action = Action::reinit_same_rank;
            d.error = err;
            d.state = std::move(fresh.state);
            return d;
        }
        d.action = Action::reinit_add;
        d.state = truncate_from_spectra(v, state.weights, fresh.spectra, grown, state.time);
        d.error = compute_error(v, *d.state);
        return d;
    }

    const MultiRank reduced = removal_target(state, now.error, config);
    bool can_reduce = false;
    for (Index n = 0; n < ranks.size(); ++n) can_reduce = can_reduce || reduced[n] < ranks[n];
    if (!can_reduce) return d;
    const std::optional<double> slope = error_slope(history, config.slope_window);
    if (!slope || *slope >= 0.0) return d;
    d.action = Action::reinit_remove;
    d.state = hosvd_truncate(v, state.weights, reduced, state.time);
    d.error = compute_error(v, *d.state);
    return d;
}

} // namespace tdb
