#pragma once

#include "tdbc/config.hpp"

#include "tdb/compressor.hpp"
#include "tdb/error.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace tdbc {

// ---------------------------------------------------------------------------
// compress

struct CompressOutcome {
    tdb::RunSummary summary;
    tdb::Index records_written = 0;
};

/// Runs the configured stream through the compressor, writing the archive,
/// the run log CSV and `<log>.config` (the resolved configuration) for the
/// outputs that are configured.
CompressOutcome cmd_compress(const RunConfig& config);

// ---------------------------------------------------------------------------
// decompress

struct DecompressOptions {
    std::filesystem::path archive;
    std::filesystem::path output_dir;
    std::vector<double> times; ///< nearest-previous record for each
    bool all_records = false;  ///< every stored record instead of `times`
};

/// Writes one TDBT file per requested time plus `index.csv` mapping files to
/// requested and stored times. Returns the written paths.
std::vector<std::filesystem::path> cmd_decompress(const DecompressOptions& options);

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
    std::filesystem::path archive;
    std::filesystem::path output_dir;
    /// Raw snapshots for dense-HOSVD reference spectra: a manifest or a run
    /// configuration (at most one).
    std::filesystem::path reference_manifest;
    std::filesystem::path reference_config;
    tdb::Index reference_every = 1; ///< use every k-th record for the reference
};

struct AnalyzeOutcome {
    std::vector<std::filesystem::path> files;
    /// Largest relative gap between TDB and HOSVD singular values over the
    /// dominant ones (σᵢ ≥ 1e-3·σ₁), when a reference was requested.
    std::optional<double> max_dominant_gap;
};

/// Writes spectra.csv, errors.csv and cr.csv (and reference.csv).
AnalyzeOutcome cmd_analyze(const AnalyzeOptions& options);

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
    std::vector<tdb::Index> sizes{32, 48, 64, 96};
    tdb::Index trials = 9;
    tdb::Index rank = 10;
    tdb::Index order = 3;
    std::uint64_t seed = 7;
    tdb::Integrator integrator = tdb::Integrator::rk2;
};

struct BenchRow {
    tdb::Index n = 0;
    double size = 0.0; ///< S = Nᵖ
    double tdb_seconds = 0.0;
    double hosvd_seconds = 0.0;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    double tdb_slope = 0.0;   ///< d log(time) / d log(S)
    double hosvd_slope = 0.0;
};

BenchResult cmd_bench(const BenchOptions& options);
void write_bench_csv(std::ostream& out, const BenchResult& result);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// describe

/// Human-readable header summary followed by a per-record CSV table.
void cmd_describe(const std::filesystem::path& archive, std::ostream& out);

// ---------------------------------------------------------------------------

/// Full command-line entry point; returns the process exit code. Errors are
/// reported on `err` as one line `error: <category>: <message>`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Exit code used for each error category (usage errors map to config).
int exit_code(tdb::ErrorCategory category) noexcept;

} // namespace tdbc
