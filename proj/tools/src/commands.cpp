#include "tdbc/commands.hpp"

#include "tdb/archive.hpp"
#include "tdb/coherent.hpp"
#include "tdb/grouping.hpp"
#include "tdb/hosvd.hpp"
#include "tdbc/format.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace tdbc {

using tdb::ErrorCategory;
using tdb::Index;

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) tdb::fail(ErrorCategory::io, "cannot create " + path.string());
    return out;
}

void append_mode_columns(std::vector<std::string>& header, std::string_view prefix, Index p) {
    for (Index n = 0; n < p; ++n) header.push_back(std::string(prefix) + std::to_string(n + 1));
}

// Grouping recorded in an archive, or nullopt for unfused data.
struct ArchiveGrouping {
    tdb::GroupSpec spec;
    tdb::Shape source_dims;
};

std::optional<ArchiveGrouping> archive_grouping(const tdb::ArchiveHeader& h) {
    const auto g = h.metadata.find("groups");
    const auto d = h.metadata.find("source_dims");
    if (g == h.metadata.end() || d == h.metadata.end() || g->second.empty()) return std::nullopt;
    ArchiveGrouping out{tdb::GroupSpec::parse(g->second), {}};
    std::istringstream in(d->second);
    for (Index x; in >> x;) out.source_dims.push_back(x);
    out.spec.validate(out.source_dims);
    if (out.spec.is_identity()) return std::nullopt;
    return out;
}

bool is_archive_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) tdb::fail(ErrorCategory::io, "cannot open " + path.string());
    char magic[4] = {};
    in.read(magic, 4);
    return in.gcount() == 4 && std::string_view(magic, 4) == "TDBC";
}

} // namespace

// ---------------------------------------------------------------------------

CompressOutcome cmd_compress(const RunConfig& config) {
    auto stream = make_stream(config);
    const auto* grouped = dynamic_cast<const tdb::GroupedStream*>(stream.get());
    const tdb::Shape dims = stream->dims();
    const Index p = dims.size();

    std::optional<tdb::ArchiveWriter> writer;
    if (!config.archive.empty()) {
        tdb::ArchiveHeader header;
        header.dims = dims;
        header.weights = stream->weights();
        header.dt = stream->dt();
        header.integrator = config.compressor.integrator;
        header.scheme = config.compressor.scheme;
        for (const auto& [k, v] : config.resolved()) header.metadata["config." + k] = v;
        if (grouped) {
            header.metadata["groups"] = grouped->spec().to_string();
            header.metadata["source_dims"] = format_list(grouped->source_dims());
        }
        if (config.archive.has_parent_path()) std::filesystem::create_directories(config.archive.parent_path());
        writer.emplace(config.archive, std::move(header));
    }

    std::optional<std::ofstream> log_file;
    std::optional<CsvWriter> log;
    if (!config.log.empty()) {
        log_file.emplace(open_output(config.log));
        log.emplace(*log_file);
        std::vector<std::string> header{"t", "eps"};
        append_mode_columns(header, "gamma_", p);
        append_mode_columns(header, "r_", p);
        header.push_back("action");
        header.push_back("cr");
        log->row(header);
        std::ofstream sidecar = open_output(config.log.string() + ".config");
        sidecar << config.to_text();
    }

    const tdb::Index last_step = config.compressor.max_steps == 0
                                     ? stream->length() - 1
                                     : std::min(config.compressor.max_steps, stream->length() - 1);
    tdb::MultiRank previous;
    auto sink = [&](const tdb::TdbState& state, const tdb::StepLog& entry) {
        const auto& rec = entry.record;
        const bool changed = !previous.empty() && previous != rec.ranks;
        if (writer && (entry.step % config.write_every == 0 || rec.reinit || changed || entry.step == last_step)) {
            std::uint32_t flags = tdb::kRecordNone;
            if (rec.reinit) flags |= tdb::kRecordReinit;
            if (changed) flags |= tdb::kRecordRankChanged;
            writer->append(state, flags, rec.error);
        }
        previous = rec.ranks;
        if (log) {
            std::vector<std::string> row{format_double(rec.time), format_double(rec.error)};
            for (Index n = 0; n < p; ++n)
                row.push_back(n < rec.captured.size() ? format_double(rec.captured[n]) : std::string());
            for (Index r : rec.ranks) row.push_back(format_index(r));
            row.emplace_back(tdb::action_name(rec.action));
            row.push_back(format_double(entry.compression_ratio));
            log->row(row);
        }
    };

    CompressOutcome outcome;
    outcome.summary = tdb::compress_stream(*stream, config.compressor, sink);
    if (writer) outcome.records_written = writer->records_written();
    if (log) {
        const auto& last = outcome.summary.log.back().record;
        std::vector<std::string> row{format_double(last.time), format_double(outcome.summary.max_error)};
        for (Index n = 0; n < p; ++n) row.emplace_back();
        for (Index r : last.ranks) row.push_back(format_index(r));
        row.emplace_back("summary");
        row.push_back(format_double(outcome.summary.weighted_compression_ratio));
        log->row(row);
        log_file->flush();
        if (!*log_file) tdb::fail(ErrorCategory::io, "failed writing " + config.log.string());
    }
    return outcome;
}

// ---------------------------------------------------------------------------

std::vector<std::filesystem::path> cmd_decompress(const DecompressOptions& options) {
    const tdb::ArchiveReader reader(options.archive);
    const auto grouping = archive_grouping(reader.header());

    std::vector<double> requested = options.times;
    if (options.all_records) requested = reader.times();
    tdb::require(!requested.empty(), ErrorCategory::config, "no times requested (use --time or --all)");

    // Validate every request before writing anything.
    std::vector<Index> records;
    for (double t : requested) records.push_back(reader.locate(t));

    std::filesystem::create_directories(options.output_dir);
    std::vector<std::filesystem::path> written;
    std::ofstream index_file = open_output(options.output_dir / "index.csv");
    CsvWriter index(index_file);
    index.row({"file", "requested_t", "record", "record_t"});
    for (Index j = 0; j < requested.size(); ++j) {
        tdb::DenseTensor v = tdb::reconstruct(reader.state(records[j]));
        if (grouping) v = tdb::unfuse(v, grouping->spec, grouping->source_dims);
        const std::string name = "snapshot_" + std::to_string(j) + ".tdbt";
        const auto path = options.output_dir / name;
        tdb::write_raw_tensor(path, v);
        written.push_back(path);
        index.row({name, format_double(requested[j]), format_index(records[j]),
                   format_double(reader.time(records[j]))});
    }
    return written;
}

// ---------------------------------------------------------------------------

namespace {

// Run-log input: error and CR tables straight from the logged columns.
AnalyzeOutcome analyze_log(const AnalyzeOptions& options) {
    std::ifstream in(options.archive);
    std::string line;
    tdb::require(static_cast<bool>(std::getline(in, line)), ErrorCategory::io,
                 options.archive.string() + ": empty run log");
    const auto header = parse_csv_line(line);
    Index p = 0;
    for (const auto& h : header)
        if (h.rfind("r_", 0) == 0) ++p;
    tdb::require(p > 0 && header.size() == 2 * p + 4 && header[0] == "t", ErrorCategory::io,
                 options.archive.string() + ": not a run log");

    AnalyzeOutcome outcome;
    std::filesystem::create_directories(options.output_dir);
    const auto err_path = options.output_dir / "errors.csv";
    const auto cr_path = options.output_dir / "cr.csv";
    std::ofstream ef = open_output(err_path), cf = open_output(cr_path);
    CsvWriter errors(ef), cr(cf);
    std::vector<std::string> eh{"t", "eps"};
    append_mode_columns(eh, "gamma_", p);
    eh.push_back("action");
    errors.row(eh);
    std::vector<std::string> ch{"t"};
    append_mode_columns(ch, "r_", p);
    ch.push_back("cr");
    ch.push_back("weighted_cr");
    cr.row(ch);

    double t_first = 0.0, t_prev = 0.0, harmonic = 0.0;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = parse_csv_line(line);
        tdb::require(f.size() == header.size(), ErrorCategory::io, options.archive.string() + ": ragged row");
        if (f[2 * p + 2] == "summary") continue;
        const double t = std::stod(f[0]);
        const double ratio = std::stod(f[2 * p + 3]);
        std::vector<std::string> er{f[0], f[1]};
        for (Index n = 0; n < p; ++n) er.push_back(f[2 + n]);
        er.push_back(f[2 * p + 2]);
        errors.row(er);
        double weighted = ratio;
        if (first) {
            t_first = t;
            first = false;
        } else {
            harmonic += (t - t_prev) / ratio;
            weighted = (t - t_first) / harmonic;
        }
        t_prev = t;
        std::vector<std::string> crr{f[0]};
        for (Index n = 0; n < p; ++n) crr.push_back(f[2 + p + n]);
        crr.push_back(f[2 * p + 3]);
        crr.push_back(format_double(weighted));
        cr.row(crr);
    }
    outcome.files = {err_path, cr_path};
    return outcome;
}

} // namespace

AnalyzeOutcome cmd_analyze(const AnalyzeOptions& options) {
    tdb::require(options.reference_manifest.empty() || options.reference_config.empty(), ErrorCategory::config,
                 "give at most one of --manifest and --config");
    tdb::require(options.reference_every >= 1, ErrorCategory::config, "--every must be >= 1");
    if (!is_archive_file(options.archive)) {
        tdb::require(options.reference_manifest.empty() && options.reference_config.empty(),
                     ErrorCategory::config, "a HOSVD reference needs an archive input, not a run log");
        return analyze_log(options);
    }

    const tdb::ArchiveReader reader(options.archive);
    const auto& header = reader.header();
    const Index p = header.dims.size();
    tdb::require(reader.size() > 0, ErrorCategory::io, options.archive.string() + ": archive has no records");

    AnalyzeOutcome outcome;
    std::filesystem::create_directories(options.output_dir);
    const auto spectra_path = options.output_dir / "spectra.csv";
    const auto err_path = options.output_dir / "errors.csv";
    const auto cr_path = options.output_dir / "cr.csv";
    std::ofstream sf = open_output(spectra_path), ef = open_output(err_path), cf = open_output(cr_path);
    CsvWriter spectra(sf), errors(ef), cr(cf);

    Index max_rank = 0;
    for (Index i = 0; i < reader.size(); ++i) {
        const auto rec = reader.read_record(i);
        for (Index r : rec.ranks) max_rank = std::max(max_rank, r);
    }
    std::vector<std::string> sh{"t", "mode"};
    for (Index k = 0; k < max_rank; ++k) sh.push_back("sigma_" + std::to_string(k + 1));
    spectra.row(sh);
    std::vector<std::string> eh{"t", "eps"};
    append_mode_columns(eh, "gamma_", p);
    eh.push_back("reinit");
    errors.row(eh);
    std::vector<std::string> ch{"t"};
    append_mode_columns(ch, "r_", p);
    ch.push_back("cr");
    ch.push_back("weighted_cr");
    cr.row(ch);

    // Optional dense reference.
    std::shared_ptr<tdb::SnapshotStream> reference;
    if (!options.reference_config.empty()) {
        RunConfig rc;
        rc.load_file(options.reference_config);
        reference = make_stream(rc);
    } else if (!options.reference_manifest.empty()) {
        reference = std::make_shared<tdb::FileStream>(options.reference_manifest);
        if (const auto g = archive_grouping(header))
            reference = std::make_shared<tdb::GroupedStream>(std::move(reference), g->spec);
    }
    std::optional<std::ofstream> rf;
    std::optional<CsvWriter> ref_csv;
    if (reference) {
        tdb::require(reference->dims() == header.dims, ErrorCategory::shape,
                     "reference snapshots do not match the archive dimensions");
        const auto path = options.output_dir / "reference.csv";
        rf.emplace(open_output(path));
        ref_csv.emplace(*rf);
        ref_csv->row({"t", "mode", "index", "sigma_tdb", "sigma_hosvd", "rel_gap"});
        outcome.files.push_back(path);
        outcome.max_dominant_gap = 0.0;
    }

    double harmonic = 0.0;
    for (Index i = 0; i < reader.size(); ++i) {
        const auto rec = reader.read_record(i);
        const double t = rec.time;
        std::vector<tdb::Vector> sigma(p);
        for (Index n = 0; n < p; ++n) {
            sigma[n] = tdb::core_singular_values(rec.core, n);
            std::vector<std::string> row{format_double(t), format_index(n + 1)};
            for (Index k = 0; k < max_rank; ++k)
                row.push_back(k < static_cast<Index>(sigma[n].size()) ? format_double(sigma[n][k]) : std::string());
            spectra.row(row);
        }

        std::vector<std::string> er{format_double(t), format_double(rec.error)};
        for (Index n = 0; n < p; ++n) {
            if (std::isfinite(rec.error)) {
                const double s2 = sigma[n].squaredNorm();
                er.push_back(format_double(s2 / (s2 + rec.error * rec.error) * 100.0));
            } else {
                er.emplace_back();
            }
        }
        er.push_back((rec.flags & tdb::kRecordReinit) ? "1" : "0");
        errors.row(er);

        const double ratio = tdb::compression_ratio(header.dims, rec.ranks);
        double weighted = ratio;
        if (i > 0) {
            harmonic += (t - reader.time(i - 1)) / ratio;
            weighted = (t - reader.time(0)) / harmonic;
        }
        std::vector<std::string> crr{format_double(t)};
        for (Index r : rec.ranks) crr.push_back(format_index(r));
        crr.push_back(format_double(ratio));
        crr.push_back(format_double(weighted));
        cr.row(crr);

        if (reference && i % options.reference_every == 0) {
            const double k_real = (t - reference->start_time()) / reference->dt();
            const auto k = static_cast<Index>(std::llround(k_real));
            tdb::require(k_real > -0.5 && std::abs(k_real - static_cast<double>(k)) < 1e-6 &&
                             k < reference->length(),
                         ErrorCategory::io, "no raw snapshot for t=" + format_double(t));
            const tdb::DenseTensor v = reference->snapshot(k);
            for (Index n = 0; n < p; ++n) {
                const tdb::Vector dense = tdb::mode_singular_values(v, n, *header.weights);
                const double floor = 1e-3 * dense[0];
                for (Index j = 0; j < static_cast<Index>(sigma[n].size()); ++j) {
                    const double gap = std::abs(sigma[n][j] - dense[j]) / dense[j];
                    if (dense[j] >= floor) *outcome.max_dominant_gap = std::max(*outcome.max_dominant_gap, gap);
                    ref_csv->row({format_double(t), format_index(n + 1), format_index(j + 1),
                                  format_double(sigma[n][j]), format_double(dense[j]), format_double(gap)});
                }
            }
        }
    }
    outcome.files.insert(outcome.files.begin(), {spectra_path, err_path, cr_path});
    return outcome;
}

// ---------------------------------------------------------------------------

void cmd_describe(const std::filesystem::path& archive, std::ostream& out) {
    const tdb::ArchiveReader reader(archive);
    const auto& h = reader.header();
    out << "archive: " << archive.string() << '\n';
    out << "dims: " << format_list(h.dims) << '\n';
    out << "dt: " << format_double(h.dt) << '\n';
    out << "integrator: " << tdb::integrator_name(h.integrator) << '\n';
    out << "derivative: " << tdb::scheme_name(h.scheme) << '\n';
    out << "records: " << reader.size() << '\n';
    out << "truncated_bytes: " << reader.truncated_bytes() << '\n';
    for (const auto& [k, v] : h.metadata) out << "meta " << k << " = " << v << '\n';
    out << '\n';

    CsvWriter csv(out);
    std::vector<std::string> header{"record", "t", "flags", "eps"};
    append_mode_columns(header, "r_", h.dims.size());
    header.push_back("cr");
    header.push_back("bytes");
    csv.row(header);
    for (Index i = 0; i < reader.size(); ++i) {
        const auto rec = reader.read_record(i);
        std::vector<std::string> row{format_index(i), format_double(rec.time), std::to_string(rec.flags),
                                     format_double(rec.error)};
        for (Index r : rec.ranks) row.push_back(format_index(r));
        row.push_back(format_double(tdb::compression_ratio(h.dims, rec.ranks)));
        row.push_back(std::to_string(tdb::record_size_bytes(h.dims, rec.ranks)));
        csv.row(row);
    }
}

} // namespace tdbc
