#include "tdbc/config.hpp"

#include "tdb/error.hpp"
#include "tdbc/format.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace tdbc {

using tdb::ErrorCategory;
using tdb::Index;

std::string_view stream_kind_name(StreamKind k) noexcept {
    switch (k) {
    case StreamKind::runge: return "runge";
    case StreamKind::exact_rank: return "exact_rank";
    case StreamKind::manifest: return "manifest";
    }
    return "?";
}

namespace {

std::string_view trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    tdb::fail(ErrorCategory::config,
              std::string(key) + ": cannot parse '" + std::string(value) + "' as " + std::string(expected));
}

double parse_double(std::string_view key, std::string_view v) {
    double x = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "a number");
    return x;
}

double parse_positive(std::string_view key, std::string_view v) {
    const double x = parse_double(key, v);
    if (!(x > 0.0)) bad_value(key, v, "a positive number");
    return x;
}

Index parse_index(std::string_view key, std::string_view v) {
    unsigned long long x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "a nonnegative integer");
    return static_cast<Index>(x);
}

std::vector<Index> parse_indices(std::string_view key, std::string_view v) {
    std::vector<Index> out;
    std::istringstream in{std::string(v)};
    std::string tok;
    while (in >> tok) out.push_back(parse_index(key, tok));
    return out;
}

} // namespace

void RunConfig::set(std::string_view key, std::string_view raw) {
    std::string_view value = trim(raw);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        value = value.substr(1, value.size() - 2);
    auto& ac = compressor.adaptive;

    if (key == "stream.kind") {
        if (value == "runge") kind = StreamKind::runge;
        else if (value == "exact_rank") kind = StreamKind::exact_rank;
        else if (value == "manifest") kind = StreamKind::manifest;
        else bad_value(key, value, "one of runge, exact_rank, manifest");
    } else if (key == "stream.grid_points") runge.grid_points = parse_index(key, value);
    else if (key == "stream.lo") runge.lo = parse_double(key, value);
    else if (key == "stream.hi") runge.hi = parse_double(key, value);
    else if (key == "stream.alpha") runge.alpha = parse_double(key, value);
    else if (key == "stream.t0") runge.t0 = parse_double(key, value);
    else if (key == "stream.t_end") runge.t_end = parse_double(key, value);
    else if (key == "stream.dt") {
        runge.dt = parse_positive(key, value);
        exact.dt = runge.dt;
    } else if (key == "stream.dims") exact.dims = parse_indices(key, value);
    else if (key == "stream.ranks") exact.ranks = parse_indices(key, value);
    else if (key == "stream.seed") exact.seed = parse_index(key, value);
    else if (key == "stream.steps") exact.steps = parse_index(key, value);
    else if (key == "stream.rotation_rate") exact.rotation_rate = parse_double(key, value);
    else if (key == "stream.core_variation") exact.core_variation = parse_double(key, value);
    else if (key == "stream.core_frequency") exact.core_frequency = parse_double(key, value);
    else if (key == "stream.manifest") manifest = std::string(value);
    else if (key == "stream.groups") groups = std::string(value);
    else if (key == "run.integrator") compressor.integrator = tdb::parse_integrator(value);
    else if (key == "run.derivative") compressor.scheme = tdb::parse_scheme(value);
    else if (key == "run.error_threshold") ac.error_threshold = parse_positive(key, value);
    else if (key == "run.energy_threshold") ac.energy_threshold = parse_double(key, value);
    else if (key == "run.slope_window") ac.slope_window = parse_index(key, value);
    else if (key == "run.check_interval") ac.check_interval = parse_index(key, value);
    else if (key == "run.initial_ranks") compressor.initial_ranks = parse_indices(key, value);
    else if (key == "run.min_ranks") ac.min_ranks = parse_indices(key, value);
    else if (key == "run.max_ranks") ac.max_ranks = parse_indices(key, value);
    else if (key == "run.max_steps") compressor.max_steps = parse_index(key, value);
    else if (key == "run.pinv_tolerance") compressor.step.pinv_tolerance = parse_positive(key, value);
    else if (key == "output.archive") archive = std::string(value);
    else if (key == "output.log") log = std::string(value);
    else if (key == "output.write_every") {
        write_every = parse_index(key, value);
        tdb::require(write_every >= 1, ErrorCategory::config, "output.write_every must be >= 1");
    }
    else tdb::fail(ErrorCategory::config, "unknown configuration key '" + std::string(key) + "'");
}

void RunConfig::load_text(std::string_view text, std::string_view origin) {
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    Index lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        const std::string where = std::string(origin) + ":" + std::to_string(lineno) + ": ";
        if (s.front() == '[') {
            if (s.back() != ']') tdb::fail(ErrorCategory::config, where + "unterminated section header");
            section = std::string(trim(s.substr(1, s.size() - 2)));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) tdb::fail(ErrorCategory::config, where + "expected key = value");
        std::string key(trim(s.substr(0, eq)));
        if (key.find('.') == std::string::npos) {
            if (section.empty()) tdb::fail(ErrorCategory::config, where + "key '" + key + "' outside a section");
            key = section + "." + key;
        }
        try {
            set(key, s.substr(eq + 1));
        } catch (const tdb::Error& e) {
            tdb::fail(e.category(), where + e.what());
        }
    }
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) tdb::fail(ErrorCategory::io, "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    load_text(ss.str(), path.string());
}

std::vector<std::pair<std::string, std::string>> RunConfig::resolved() const {
    std::vector<std::pair<std::string, std::string>> kv;
    auto add = [&](std::string k, std::string v) { kv.emplace_back(std::move(k), std::move(v)); };
    add("stream.kind", std::string(stream_kind_name(kind)));
    switch (kind) {
    case StreamKind::runge:
        add("stream.grid_points", format_index(runge.grid_points));
        add("stream.lo", format_double(runge.lo));
        add("stream.hi", format_double(runge.hi));
        add("stream.dt", format_double(runge.dt));
        add("stream.alpha", format_double(runge.alpha));
        add("stream.t0", format_double(runge.t0));
        add("stream.t_end", format_double(runge.t_end));
        break;
    case StreamKind::exact_rank:
        add("stream.dims", format_list(exact.dims));
        add("stream.ranks", format_list(exact.ranks));
        add("stream.seed", format_index(exact.seed));
        add("stream.dt", format_double(exact.dt));
        add("stream.steps", format_index(exact.steps));
        add("stream.rotation_rate", format_double(exact.rotation_rate));
        add("stream.core_variation", format_double(exact.core_variation));
        add("stream.core_frequency", format_double(exact.core_frequency));
        break;
    case StreamKind::manifest:
        add("stream.manifest", manifest.string());
        break;
    }
    add("stream.groups", groups);
    const auto& ac = compressor.adaptive;
    add("run.integrator", std::string(tdb::integrator_name(compressor.integrator)));
    add("run.derivative", std::string(tdb::scheme_name(compressor.scheme)));
    add("run.error_threshold", format_double(ac.error_threshold));
    add("run.energy_threshold", format_double(ac.energy_threshold));
    add("run.slope_window", format_index(ac.slope_window));
    add("run.check_interval", format_index(ac.check_interval));
    add("run.initial_ranks", format_list(compressor.initial_ranks));
    add("run.min_ranks", format_list(ac.min_ranks));
    add("run.max_ranks", format_list(ac.max_ranks));
    add("run.max_steps", format_index(compressor.max_steps));
    add("run.pinv_tolerance", format_double(compressor.step.pinv_tolerance));
    add("output.archive", archive.string());
    add("output.log", log.string());
    add("output.write_every", format_index(write_every));
    return kv;
}

std::string RunConfig::to_text() const {
    std::string out;
    std::string section;
    for (const auto& [key, value] : resolved()) {
        const auto dot = key.find('.');
        const std::string sec = key.substr(0, dot);
        if (sec != section) {
            if (!section.empty()) out += '\n';
            out += "[" + sec + "]\n";
            section = sec;
        }
        out += key.substr(dot + 1) + " = " + value + "\n";
    }
    return out;
}

std::shared_ptr<tdb::SnapshotStream> make_source_stream(const RunConfig& config) {
    switch (config.kind) {
    case StreamKind::runge: return std::make_shared<tdb::RungeStream>(config.runge);
    case StreamKind::exact_rank: return std::make_shared<tdb::ExactRankStream>(config.exact);
    case StreamKind::manifest:
        tdb::require(!config.manifest.empty(), ErrorCategory::config,
                     "stream.kind = manifest needs stream.manifest = <path>");
        return std::make_shared<tdb::FileStream>(config.manifest);
    }
    tdb::fail(ErrorCategory::config, "unknown stream kind");
}

std::shared_ptr<tdb::SnapshotStream> make_stream(const RunConfig& config) {
    auto source = make_source_stream(config);
    if (config.groups.empty()) return source;
    tdb::GroupSpec spec = tdb::GroupSpec::parse(config.groups);
    spec.validate(source->dims());
    if (spec.is_identity()) return source;
    return std::make_shared<tdb::GroupedStream>(std::move(source), std::move(spec));
}

} // namespace tdbc
