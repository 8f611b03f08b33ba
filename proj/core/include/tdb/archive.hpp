#pragma once

// TDBC archive: a header followed by length-prefixed per-step records of
// the compressed state. All numbers are little-endian; floats are IEEE
// binary64.
//
//   header  := "TDBC" u32 version u32 p u64 dims[p] f64 weights[Σ N_n]
//              f64 dt u32 integrator u32 scheme u32 metadata_len
//              u8 metadata[metadata_len]
//   record  := u64 payload_len payload
//   payload := f64 t u32 flags f64 error u64 ranks[p]
//              f64 core[∏ r_n] f64 basis_1[N_1 r_1] … f64 basis_p[N_p r_p]
//
// Core and bases are stored first index fastest (column-major bases).
// A record whose payload is cut short is ignored on read, so a crash while
// appending loses at most that record.
//
// TDBT raw tensor:  "TDBT" u32 version u32 p u64 dims[p] f64 values[∏ N_n]

#include "tdb/evolve.hpp"
#include "tdb/state.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tdb {

inline constexpr std::uint32_t kArchiveVersion = 1;
inline constexpr std::uint32_t kRawTensorVersion = 1;

void write_raw_tensor(const std::filesystem::path& path, const DenseTensor& t);
/// Throws io naming the file when missing, truncated or malformed.
DenseTensor read_raw_tensor(const std::filesystem::path& path);

enum RecordFlags : std::uint32_t {
    kRecordNone = 0,
    kRecordReinit = 1u << 0,
    kRecordRankChanged = 1u << 1,
};

struct ArchiveHeader {
    Shape dims;
    std::shared_ptr<const ModeWeights> weights;
    double dt = 0.0;
    Integrator integrator = Integrator::rk2;
    DerivativeScheme scheme = DerivativeScheme::exact;
    /// Free-form key/value metadata (creation info, grouping, config echo).
    std::map<std::string, std::string> metadata;

    void validate() const;
};

struct ArchiveRecord {
    double time = 0.0;
    std::uint32_t flags = kRecordNone;
    double error = 0.0;
    MultiRank ranks;
    DenseTensor core;
    std::vector<Matrix> bases;
};

/// Bytes of one record on disk, including its length prefix.
std::uint64_t record_size_bytes(std::span<const Index> dims, std::span<const Index> ranks);

class ArchiveWriter {
public:
    /// Creates (truncates) the file and writes the header.
    ArchiveWriter(const std::filesystem::path& path, ArchiveHeader header);

    ArchiveWriter(const ArchiveWriter&) = delete;
    ArchiveWriter& operator=(const ArchiveWriter&) = delete;
    ArchiveWriter(ArchiveWriter&&) = default;
    ArchiveWriter& operator=(ArchiveWriter&&) = default;

    /// Appends and flushes one record. Throws range unless
    /// state.time > the previous record's time.
    void append(const TdbState& state, std::uint32_t flags, double error);

    [[nodiscard]] const ArchiveHeader& header() const noexcept { return header_; }
    [[nodiscard]] Index records_written() const noexcept { return count_; }
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    ArchiveHeader header_;
    std::ofstream out_;
    Index count_ = 0;
    double last_time_ = 0.0;
};

/// Random-access reader over the complete records of an archive.
class ArchiveReader {
public:
    explicit ArchiveReader(const std::filesystem::path& path);

    [[nodiscard]] const ArchiveHeader& header() const noexcept { return header_; }
    [[nodiscard]] Index size() const noexcept { return entries_.size(); }
    [[nodiscard]] double time(Index i) const { return entries_.at(i).time; }
    [[nodiscard]] std::vector<double> times() const;
    /// Trailing bytes that did not form a complete record.
    [[nodiscard]] std::uint64_t truncated_bytes() const noexcept { return truncated_bytes_; }

    [[nodiscard]] ArchiveRecord read_record(Index i) const;
    [[nodiscard]] TdbState state(Index i) const;

    /// Index of the record with the greatest t <= t_query. Throws range when
    /// t_query lies outside [first, last].
    [[nodiscard]] Index locate(double t_query) const;
    [[nodiscard]] DenseTensor reconstruct_at(double t_query) const;

private:
    struct Entry {
        std::uint64_t offset; // payload start
        std::uint64_t length;
        double time;
    };
    std::filesystem::path path_;
    ArchiveHeader header_;
    std::vector<Entry> entries_;
    std::uint64_t truncated_bytes_ = 0;
};

// ---------------------------------------------------------------------------
// Compression ratios

/// CR = ∏ N_n / (Σ r_n N_n + ∏ r_n).
double compression_ratio(std::span<const Index> dims, std::span<const Index> ranks);

struct CrInterval {
    double t_start = 0.0;
    double t_end = 0.0;
    double ratio = 1.0;
};

/// (t_m − t_0) / Σ_k (t_k − t_{k−1}) / CR_k over contiguous intervals.
double weighted_compression_ratio(std::span<const CrInterval> intervals);

} // namespace tdb
