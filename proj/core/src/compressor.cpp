#include "tdb/compressor.hpp"

#include "tdb/archive.hpp"
#include "tdb/error.hpp"
#include "tdb/hosvd.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <map>

namespace tdb {

void CompressorConfig::validate(const SnapshotStream& stream) const {
    const Shape dims = stream.dims();
    adaptive.validate(dims);
    if (!initial_ranks.empty()) check_multirank(initial_ranks, dims);
    require(stream.length() >= 1, ErrorCategory::config, "stream is empty");
    if (scheme == DerivativeScheme::exact)
        require(stream.has_exact_derivative(), ErrorCategory::config,
                "derivative = exact needs a stream with analytic derivatives; use fd1, fd2 or central");
    if (scheme == DerivativeScheme::central)
        require(stream.has_lookahead(), ErrorCategory::config,
                "derivative = central needs lookahead (offline mode)");
    require(stream.length() >= 2 || max_steps == 0, ErrorCategory::config, "stream has a single snapshot");
}

namespace {

// Snapshots by index, keeping only a short window alive.
class SnapshotWindow {
public:
    explicit SnapshotWindow(SnapshotStream& s) : stream_(s) {}

    const DenseTensor& get(Index k) {
        while (!buf_.empty() && buf_.begin()->first + 4 < k) buf_.erase(buf_.begin());
        auto it = buf_.find(k);
        if (it == buf_.end()) it = buf_.emplace(k, stream_.snapshot(k)).first;
        return it->second;
    }

private:
    SnapshotStream& stream_;
    std::map<Index, DenseTensor> buf_;
};

DenseTensor difference(const DenseTensor& a, const DenseTensor& b, double scale) {
    DenseTensor d = a - b;
    d *= scale;
    return d;
}

} // namespace

RunSummary compress_stream(SnapshotStream& stream, const CompressorConfig& config, const StateSink& sink) {
    config.validate(stream);
    const Shape dims = stream.dims();
    const auto weights = stream.weights();
    const double dt = stream.dt();
    const Index available = stream.length() - 1;
    const Index steps = config.max_steps == 0 ? available : std::min(config.max_steps, available);
    const AdaptiveConfig& ac = config.adaptive;

    SnapshotWindow window(stream);
    // V̇ at snapshot j; snapshots up to j (plus j+1 for central) may be read.
    auto derivative_at_index = [&](Index j) -> DenseTensor {
        const double t = stream.time_at(j);
        switch (config.scheme) {
        case DerivativeScheme::exact: return stream.derivative(t);
        case DerivativeScheme::fd2:
            if (j >= 2) {
                const std::vector<TimedSnapshot> w{{stream.time_at(j - 2), window.get(j - 2)},
                                                   {stream.time_at(j - 1), window.get(j - 1)},
                                                   {t, window.get(j)}};
                return estimate_vdot(w, DerivativeScheme::fd2, dt).value;
            }
            [[fallthrough]];
        case DerivativeScheme::fd1:
            if (j >= 1) return difference(window.get(j), window.get(j - 1), 1.0 / dt);
            return difference(window.get(1), window.get(0), 1.0 / dt);
        case DerivativeScheme::central:
            if (j >= 1 && j + 1 < stream.length())
                return difference(window.get(j + 1), window.get(j - 1), 0.5 / dt);
            if (j == 0) return difference(window.get(1), window.get(0), 1.0 / dt);
            return difference(window.get(j), window.get(j - 1), 1.0 / dt);
        }
        fail(ErrorCategory::config, "unsupported derivative scheme");
    };

    RunSummary summary;
    AdaptiveHistory history(std::max<Index>(4 * ac.slope_window, 64));
    std::vector<CrInterval> intervals;

    auto emit = [&](const TdbState& s, const StepLog& entry) {
        if (entry.checked && std::isfinite(entry.record.error))
            summary.max_error = std::max(summary.max_error, entry.record.error);
        if (entry.step > 0)
            intervals.push_back({stream.time_at(entry.step - 1), entry.record.time, entry.compression_ratio});
        summary.log.push_back(entry);
        if (sink) sink(s, entry);
    };

    // Evaluate, record and control one emitted state.
    auto control = [&](TdbState& s, const DenseTensor& v, Index k, bool forced_reinit) {
        StepLog entry;
        entry.step = k;
        entry.checked = forced_reinit || k % ac.check_interval == 0;
        entry.record.time = s.time;
        entry.record.ranks = s.ranks();
        entry.record.reinit = forced_reinit;
        entry.record.action = forced_reinit ? Action::reinit_same_rank : Action::none;
        if (entry.checked) {
            entry.record.error = compute_error(v, s);
            entry.record.captured = captured_energies(s, entry.record.error);
            history.push(entry.record);
            const Decision d = decide(v, s, ac, history);
            if (d.action != Action::none) {
                const MultiRank before = s.ranks();
                s = *d.state;
                entry.record.action = d.action;
                entry.record.reinit = true;
                entry.record.error = d.error;
                entry.record.ranks = s.ranks();
                entry.record.captured = captured_energies(s, d.error);
                history.back() = entry.record;
                if (before != s.ranks()) ++summary.rank_changes;
            }
        } else {
            entry.record.error = std::numeric_limits<double>::quiet_NaN();
        }
        if (entry.record.reinit) ++summary.reinitializations;
        entry.compression_ratio = compression_ratio(dims, entry.record.ranks);
        emit(s, entry);
    };

    // t0: HOSVD initialization.
    const DenseTensor& v0 = window.get(0);
    MultiRank ranks = config.initial_ranks;
    // Rank-1 truncation: only the full spectra are needed here.
    HosvdResult init = hosvd(v0, weights, MultiRank(dims.size(), 1), stream.time_at(0));
    if (ranks.empty()) ranks = ranks_for_energy(init.spectra, ac.energy_threshold, dims);
    TdbState state = truncate_from_spectra(v0, weights, init.spectra, ranks, stream.time_at(0));
    control(state, v0, 0, false);

    for (Index k = 0; k < steps; ++k) {
        const Index j0 = k;
        const double t0 = stream.time_at(k);
        DerivativeFn derivative = [&](double t) {
            const Index j = (std::abs(t - t0) < 0.5 * dt) ? j0 : j0 + 1;
            return derivative_at_index(j);
        };
        bool collapsed = false;
        TdbState next;
        try {
            next = step(state, derivative, dt, config.integrator, config.step);
        } catch (const Error& e) {
            if (e.category() != ErrorCategory::rank_collapse) throw;
            collapsed = true;
        }
        const DenseTensor& v = window.get(k + 1);
        if (collapsed) next = hosvd_truncate(v, weights, state.ranks(), stream.time_at(k + 1));
        next.time = stream.time_at(k + 1);
        state = std::move(next);
        control(state, v, k + 1, collapsed);
        ++summary.steps;
    }

    summary.weighted_compression_ratio =
        intervals.empty() ? compression_ratio(dims, state.ranks()) : weighted_compression_ratio(intervals);
    return summary;
}

} // namespace tdb
