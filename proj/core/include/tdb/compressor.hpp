#pragma once

// Streaming compression loop: HOSVD initialization, per-step evolution of
// the decomposition, error monitoring and rank control.

#include "tdb/adaptivity.hpp"
#include "tdb/datagen.hpp"
#include "tdb/evolve.hpp"

#include <functional>
#include <vector>

namespace tdb {

struct CompressorConfig {
    Integrator integrator = Integrator::rk2;
    DerivativeScheme scheme = DerivativeScheme::exact;
    AdaptiveConfig adaptive;
    /// Empty: choose from the initial spectra by the energy threshold.
    MultiRank initial_ranks;
    /// Stop after this many steps (0: consume the whole stream).
    Index max_steps = 0;
    StepOptions step;

    void validate(const SnapshotStream& stream) const;
};

/// One entry of the run log.
struct StepLog {
    Index step = 0;
    StepRecord record;     ///< ε is NaN on steps without an error check
    double compression_ratio = 0.0;
    bool checked = true;
};

struct RunSummary {
    Index steps = 0;
    Index reinitializations = 0;
    Index rank_changes = 0;
    double max_error = 0.0;          ///< over checked steps, after control
    double weighted_compression_ratio = 0.0;
    std::vector<StepLog> log;
};

/// Receives every emitted state (including step 0) after control actions.
using StateSink = std::function<void(const TdbState&, const StepLog&)>;

RunSummary compress_stream(SnapshotStream& stream, const CompressorConfig& config,
                           const StateSink& sink = {});

} // namespace tdb
