#pragma once

// Run configuration for `tdbc compress`: a declarative text file of
// `[section]` headers and `key = value` lines, with `#` comments. Every
// key has an explicit default that is echoed back by to_text().
//
//   [stream]  kind = runge | exact_rank | manifest, plus per-kind keys
//   [run]     integrator, derivative, thresholds, rank bounds
//   [output]  archive, log

#include "tdb/compressor.hpp"
#include "tdb/datagen.hpp"
#include "tdb/grouping.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace tdbc {

enum class StreamKind { runge, exact_rank, manifest };

struct RunConfig {
    StreamKind kind = StreamKind::runge;
    tdb::RungeParams runge;
    tdb::ExactRankParams exact{{16, 12, 10}, {3, 3, 2}};
    std::filesystem::path manifest;
    /// 1-based axis groups such as `[[1,2],[3]]`; empty leaves axes unfused.
    std::string groups;

    tdb::CompressorConfig compressor;

    std::filesystem::path archive;
    std::filesystem::path log;
    /// Archive every k-th step; reinitialized steps and the last step are
    /// always written.
    tdb::Index write_every = 1;

    /// Applies one `section.key = value` assignment; throws config naming
    /// the key on unknown keys or malformed values.
    void set(std::string_view key, std::string_view value);

    /// Reads assignments from config-file text. `origin` names the source in
    /// error messages.
    void load_text(std::string_view text, std::string_view origin = "config");
    void load_file(const std::filesystem::path& path);

    /// Resolved configuration in the same file format.
    [[nodiscard]] std::string to_text() const;
    /// Resolved configuration as (section.key, value) pairs.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> resolved() const;
};

std::string_view stream_kind_name(StreamKind k) noexcept;

/// The (possibly fused) stream a configuration describes.
std::shared_ptr<tdb::SnapshotStream> make_stream(const RunConfig& config);

/// Source stream before fusing.
std::shared_ptr<tdb::SnapshotStream> make_source_stream(const RunConfig& config);

} // namespace tdbc
