#include "tdbc/commands.hpp"

#include "tdbc/format.hpp"

#include <CLI11.hpp>

#include <fstream>

namespace tdbc {

int exit_code(tdb::ErrorCategory category) noexcept {
    switch (category) {
    case tdb::ErrorCategory::config: return 2;
    case tdb::ErrorCategory::shape: return 3;
    case tdb::ErrorCategory::range: return 4;
    case tdb::ErrorCategory::numeric: return 5;
    case tdb::ErrorCategory::rank_collapse: return 6;
    case tdb::ErrorCategory::io: return 7;
    }
    return 1;
}

namespace {

int report(std::ostream& err, tdb::ErrorCategory category, std::string_view message) {
    err << "error: " << tdb::category_name(category) << ": " << message << '\n';
    return exit_code(category);
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Streaming tensor compression with time-dependent bases", "tdbc"};
    app.require_subcommand(1);

    // compress
    auto* compress = app.add_subcommand("compress", "Compress a snapshot stream into a TDBC archive");
    std::string config_path;
    std::vector<std::string> overrides;
    std::string archive_out, log_out;
    compress->add_option("-c,--config", config_path, "Run configuration file")->check(CLI::ExistingFile);
    compress->add_option("-s,--set", overrides, "Override one setting: section.key=value (repeatable)");
    compress->add_option("-a,--archive", archive_out, "Archive output path (overrides output.archive)");
    compress->add_option("-l,--log", log_out, "Run log CSV path (overrides output.log)");

    // decompress
    auto* decompress = app.add_subcommand("decompress", "Reconstruct snapshots from an archive");
    DecompressOptions dopt;
    decompress->add_option("archive", dopt.archive, "Archive file")->required();
    decompress->add_option("-o,--output-dir", dopt.output_dir, "Directory for TDBT files")->required();
    decompress->add_option("-t,--time", dopt.times, "Time to reconstruct (repeatable)");
    decompress->add_flag("--all", dopt.all_records, "Reconstruct every stored record");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Write spectra, error and CR tables as CSV");
    AnalyzeOptions aopt;
    std::string ref_manifest, ref_config;
    analyze->add_option("input", aopt.archive, "Archive file or run log CSV")->required();
    analyze->add_option("-o,--output-dir", aopt.output_dir, "Directory for CSV tables")->required();
    analyze->add_option("--manifest", ref_manifest, "Raw snapshot manifest for HOSVD reference spectra");
    analyze->add_option("--config", ref_config, "Run configuration regenerating the raw snapshots");
    analyze->add_option("--every", aopt.reference_every, "Reference every k-th record");

    // bench
    auto* bench = app.add_subcommand("bench", "Time one TDB step against one HOSVD");
    BenchOptions bopt;
    std::string integrator = "rk2", bench_out;
    bench->add_option("--sizes", bopt.sizes, "Per-axis sizes N")->delimiter(',');
    bench->add_option("--trials", bopt.trials, "Timed trials per size (median reported)");
    bench->add_option("--rank", bopt.rank, "Rank per mode");
    bench->add_option("--order", bopt.order, "Number of modes");
    bench->add_option("--seed", bopt.seed, "Random seed");
    bench->add_option("--integrator", integrator, "euler or rk2");
    bench->add_option("-o,--output", bench_out, "CSV output (default stdout)");

    // describe
    auto* describe = app.add_subcommand("describe", "Print archive header and record table");
    std::string describe_path;
    describe->add_option("archive", describe_path, "Archive file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        // Subcommand help requests surface as a ParseError with success code.
        if (e.get_exit_code() == 0) {
            for (const auto* sub : app.get_subcommands()) out << sub->help();
            return 0;
        }
        return report(err, tdb::ErrorCategory::config, e.what());
    }

    try {
        if (compress->parsed()) {
            RunConfig config;
            if (!config_path.empty()) config.load_file(config_path);
            for (const auto& kv : overrides) {
                const auto eq = kv.find('=');
                tdb::require(eq != std::string::npos, tdb::ErrorCategory::config,
                             "--set expects section.key=value, got '" + kv + "'");
                config.set(kv.substr(0, eq), kv.substr(eq + 1));
            }
            if (!archive_out.empty()) config.archive = archive_out;
            if (!log_out.empty()) config.log = log_out;
            tdb::require(!config.archive.empty() || !config.log.empty(), tdb::ErrorCategory::config,
                         "no output configured: set output.archive and/or output.log");
            const CompressOutcome r = cmd_compress(config);
            out << "steps " << r.summary.steps << '\n'
                << "records " << r.records_written << '\n'
                << "reinitializations " << r.summary.reinitializations << '\n'
                << "rank_changes " << r.summary.rank_changes << '\n'
                << "max_error " << format_double(r.summary.max_error) << '\n'
                << "weighted_cr " << format_double(r.summary.weighted_compression_ratio) << '\n';
        } else if (decompress->parsed()) {
            const auto files = cmd_decompress(dopt);
            out << "wrote " << files.size() << " snapshot(s) to " << dopt.output_dir.string() << '\n';
        } else if (analyze->parsed()) {
            aopt.reference_manifest = ref_manifest;
            aopt.reference_config = ref_config;
            const AnalyzeOutcome r = cmd_analyze(aopt);
            for (const auto& f : r.files) out << "wrote " << f.string() << '\n';
            if (r.max_dominant_gap) out << "max_dominant_gap " << format_double(*r.max_dominant_gap) << '\n';
        } else if (bench->parsed()) {
            bopt.integrator = tdb::parse_integrator(integrator);
            const BenchResult r = cmd_bench(bopt);
            if (bench_out.empty()) {
                write_bench_csv(out, r);
            } else {
                std::ofstream f(bench_out);
                tdb::require(static_cast<bool>(f), tdb::ErrorCategory::io, "cannot create " + bench_out);
                write_bench_csv(f, r);
            }
        } else if (describe->parsed()) {
            cmd_describe(describe_path, out);
        }
    } catch (const tdb::Error& e) {
        return report(err, e.category(), e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return report(err, tdb::ErrorCategory::io, e.what());
    } catch (const std::bad_alloc&) {
        return report(err, tdb::ErrorCategory::numeric, "out of memory");
    }
    return 0;
}

} // namespace tdbc
