#include "tdb/archive.hpp"

#include "tdb/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

namespace tdb {

namespace {

constexpr char kArchiveMagic[4] = {'T', 'D', 'B', 'C'};
constexpr char kRawMagic[4] = {'T', 'D', 'B', 'T'};

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        std::reverse(b, b + sizeof(T));
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

class ByteWriter {
public:
    void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
    template <typename T>
    void put(T v) {
        v = to_little(v);
        raw(&v, sizeof(T));
    }
    void doubles(const double* p, std::size_t n) {
        if constexpr (std::endian::native == std::endian::little) {
            raw(p, n * sizeof(double));
        } else {
            for (std::size_t i = 0; i < n; ++i) put(p[i]);
        }
    }
    [[nodiscard]] const std::string& bytes() const noexcept { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(const char* p, std::size_t n, std::string context)
        : p_(p), n_(n), context_(std::move(context)) {}

    void raw(void* dst, std::size_t n) {
        require(pos_ + n <= n_, ErrorCategory::io, context_ + ": unexpected end of data");
        std::memcpy(dst, p_ + pos_, n);
        pos_ += n;
    }
    template <typename T>
    T get() {
        T v;
        raw(&v, sizeof(T));
        return to_little(v);
    }
    void doubles(double* dst, std::size_t n) {
        raw(dst, n * sizeof(double));
        if constexpr (std::endian::native == std::endian::big)
            for (std::size_t i = 0; i < n; ++i) dst[i] = to_little(dst[i]);
    }
    void skip(std::size_t n) {
        require(pos_ + n <= n_, ErrorCategory::io, context_ + ": unexpected end of data");
        pos_ += n;
    }
    [[nodiscard]] std::size_t remaining() const noexcept { return n_ - pos_; }
    [[nodiscard]] std::size_t position() const noexcept { return pos_; }

private:
    const char* p_;
    std::size_t n_;
    std::size_t pos_ = 0;
    std::string context_;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCategory::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string encode_metadata(const std::map<std::string, std::string>& meta) {
    std::string s;
    for (const auto& [k, v] : meta) {
        require(k.find_first_of("=\n") == std::string::npos, ErrorCategory::config,
                "metadata key '" + k + "' contains '=' or newline");
        std::string clean = v;
        std::replace(clean.begin(), clean.end(), '\n', ' ');
        s += k + "=" + clean + "\n";
    }
    return s;
}

std::map<std::string, std::string> decode_metadata(const std::string& s) {
    std::map<std::string, std::string> meta;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return meta;
}

std::uint32_t integrator_id(Integrator i) { return i == Integrator::euler ? 0 : 1; }

Integrator integrator_from_id(std::uint32_t id) {
    require(id <= 1, ErrorCategory::io, "archive header has unknown integrator id");
    return id == 0 ? Integrator::euler : Integrator::rk2;
}

std::uint32_t scheme_id(DerivativeScheme s) { return static_cast<std::uint32_t>(s); }

DerivativeScheme scheme_from_id(std::uint32_t id) {
    require(id <= 3, ErrorCategory::io, "archive header has unknown derivative scheme id");
    return static_cast<DerivativeScheme>(id);
}

} // namespace

// ---------------------------------------------------------------------------
// Raw tensors

void write_raw_tensor(const std::filesystem::path& path, const DenseTensor& t) {
    ByteWriter w;
    w.raw(kRawMagic, 4);
    w.put<std::uint32_t>(kRawTensorVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.order()));
    for (Index d : t.dims()) w.put<std::uint64_t>(d);
    w.doubles(t.data(), t.size());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCategory::io, "cannot create " + path.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    require(static_cast<bool>(out), ErrorCategory::io, "failed writing " + path.string());
}

DenseTensor read_raw_tensor(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    ByteReader r(bytes.data(), bytes.size(), path.string());
    char magic[4];
    r.raw(magic, 4);
    require(std::memcmp(magic, kRawMagic, 4) == 0, ErrorCategory::io, path.string() + ": not a TDBT file");
    const auto version = r.get<std::uint32_t>();
    require(version == kRawTensorVersion, ErrorCategory::io, path.string() + ": unsupported TDBT version");
    const auto p = r.get<std::uint32_t>();
    require(p >= 1 && p <= 64, ErrorCategory::io, path.string() + ": bad tensor order");
    Shape dims(p);
    for (auto& d : dims) {
        d = static_cast<Index>(r.get<std::uint64_t>());
        require(d >= 1, ErrorCategory::io, path.string() + ": zero dimension");
    }
    const Index count = shape_size(dims);
    require(r.remaining() == count * sizeof(double), ErrorCategory::io,
            path.string() + ": expected " + std::to_string(count * sizeof(double)) +
                " bytes of values, found " + std::to_string(r.remaining()));
    DenseTensor t(dims);
    r.doubles(t.data(), count);
    return t;
}

// ---------------------------------------------------------------------------
// Archive

void ArchiveHeader::validate() const {
    require(weights != nullptr, ErrorCategory::config, "archive header needs weights");
    require(!dims.empty(), ErrorCategory::config, "archive header needs dims");
    require(weights->matches(dims), ErrorCategory::shape, "archive header weights do not match dims");
    require(dt > 0.0, ErrorCategory::config, "archive header needs dt > 0");
}

std::uint64_t record_size_bytes(std::span<const Index> dims, std::span<const Index> ranks) {
    std::uint64_t floats = shape_size(ranks);
    for (Index n = 0; n < dims.size(); ++n) floats += dims[n] * ranks[n];
    const std::uint64_t fixed = 8 /*len*/ + 8 /*t*/ + 4 /*flags*/ + 8 /*error*/ + 8 * dims.size();
    return fixed + 8 * floats;
}

ArchiveWriter::ArchiveWriter(const std::filesystem::path& path, ArchiveHeader header)
    : path_(path), header_(std::move(header)) {
    header_.validate();
    out_.open(path_, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out_), ErrorCategory::io, "cannot create archive " + path_.string());
    ByteWriter w;
    w.raw(kArchiveMagic, 4);
    w.put<std::uint32_t>(kArchiveVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(header_.dims.size()));
    for (Index d : header_.dims) w.put<std::uint64_t>(d);
    for (Index n = 0; n < header_.dims.size(); ++n) {
        const Vector& wn = (*header_.weights)[n];
        w.doubles(wn.data(), static_cast<std::size_t>(wn.size()));
    }
    w.put<double>(header_.dt);
    w.put<std::uint32_t>(integrator_id(header_.integrator));
    w.put<std::uint32_t>(scheme_id(header_.scheme));
    const std::string meta = encode_metadata(header_.metadata);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
    w.raw(meta.data(), meta.size());
    out_.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    out_.flush();
    require(static_cast<bool>(out_), ErrorCategory::io, "failed writing archive header " + path_.string());
}

void ArchiveWriter::append(const TdbState& state, std::uint32_t flags, double error) {
    require(state.dims() == header_.dims, ErrorCategory::shape, "record dims do not match the archive");
    require(state.core.dims() == state.ranks(), ErrorCategory::shape, "record core does not match its ranks");
    if (count_ > 0)
        require(state.time > last_time_, ErrorCategory::range,
                "archive records must have strictly increasing times");
    ByteWriter w;
    w.put<double>(state.time);
    w.put<std::uint32_t>(flags);
    w.put<double>(error);
    for (Index r : state.ranks()) w.put<std::uint64_t>(r);
    w.doubles(state.core.data(), state.core.size());
    for (const Matrix& u : state.bases) w.doubles(u.data(), static_cast<std::size_t>(u.size()));
    ByteWriter frame;
    frame.put<std::uint64_t>(w.bytes().size());
    out_.write(frame.bytes().data(), static_cast<std::streamsize>(frame.bytes().size()));
    out_.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    out_.flush();
    require(static_cast<bool>(out_), ErrorCategory::io, "failed appending to archive " + path_.string());
    last_time_ = state.time;
    ++count_;
}

ArchiveReader::ArchiveReader(const std::filesystem::path& path) : path_(path) {
    const std::string bytes = read_file(path);
    ByteReader r(bytes.data(), bytes.size(), path.string());
    char magic[4];
    r.raw(magic, 4);
    require(std::memcmp(magic, kArchiveMagic, 4) == 0, ErrorCategory::io, path.string() + ": not a TDBC archive");
    require(r.get<std::uint32_t>() == kArchiveVersion, ErrorCategory::io,
            path.string() + ": unsupported archive version");
    const auto p = r.get<std::uint32_t>();
    require(p >= 1 && p <= 64, ErrorCategory::io, path.string() + ": bad tensor order");
    header_.dims.resize(p);
    for (auto& d : header_.dims) d = static_cast<Index>(r.get<std::uint64_t>());
    std::vector<Vector> w;
    for (Index d : header_.dims) {
        Vector wn(static_cast<Eigen::Index>(d));
        r.doubles(wn.data(), d);
        w.push_back(std::move(wn));
    }
    header_.weights = std::make_shared<const ModeWeights>(std::move(w));
    header_.dt = r.get<double>();
    header_.integrator = integrator_from_id(r.get<std::uint32_t>());
    header_.scheme = scheme_from_id(r.get<std::uint32_t>());
    const auto meta_len = r.get<std::uint32_t>();
    std::string meta(meta_len, '\0');
    r.raw(meta.data(), meta_len);
    header_.metadata = decode_metadata(meta);

    // Index complete records; stop at the first short one.
    while (r.remaining() > 0) {
        if (r.remaining() < 8) {
            truncated_bytes_ = r.remaining();
            break;
        }
        const auto len = r.get<std::uint64_t>();
        if (len > r.remaining() || len < 8) {
            truncated_bytes_ = r.remaining() + 8;
            break;
        }
        const std::uint64_t offset = r.position();
        double t;
        std::memcpy(&t, bytes.data() + offset, sizeof(double));
        t = to_little(t);
        entries_.push_back({offset, len, t});
        r.skip(len);
    }
}

std::vector<double> ArchiveReader::times() const {
    std::vector<double> t;
    for (const Entry& e : entries_) t.push_back(e.time);
    return t;
}

ArchiveRecord ArchiveReader::read_record(Index i) const {
    require(i < entries_.size(), ErrorCategory::range, "archive record index out of range");
    const Entry& e = entries_[i];
    std::ifstream in(path_, std::ios::binary);
    require(static_cast<bool>(in), ErrorCategory::io, "cannot open " + path_.string());
    std::string payload(e.length, '\0');
    in.seekg(static_cast<std::streamoff>(e.offset));
    in.read(payload.data(), static_cast<std::streamsize>(e.length));
    require(static_cast<bool>(in), ErrorCategory::io, path_.string() + ": failed reading record");
    ByteReader r(payload.data(), payload.size(), path_.string() + " record " + std::to_string(i));
    ArchiveRecord rec;
    rec.time = r.get<double>();
    rec.flags = r.get<std::uint32_t>();
    rec.error = r.get<double>();
    const Shape& dims = header_.dims;
    rec.ranks.resize(dims.size());
    for (auto& rk : rec.ranks) rk = static_cast<Index>(r.get<std::uint64_t>());
    require(is_feasible(rec.ranks, dims), ErrorCategory::io, path_.string() + ": record has invalid ranks");
    rec.core = DenseTensor(rec.ranks);
    r.doubles(rec.core.data(), rec.core.size());
    for (Index n = 0; n < dims.size(); ++n) {
        Matrix u(static_cast<Eigen::Index>(dims[n]), static_cast<Eigen::Index>(rec.ranks[n]));
        r.doubles(u.data(), static_cast<std::size_t>(u.size()));
        rec.bases.push_back(std::move(u));
    }
    require(r.remaining() == 0, ErrorCategory::io, path_.string() + ": record length mismatch");
    return rec;
}

TdbState ArchiveReader::state(Index i) const {
    ArchiveRecord rec = read_record(i);
    TdbState s;
    s.time = rec.time;
    s.core = std::move(rec.core);
    s.bases = std::move(rec.bases);
    s.weights = header_.weights;
    return s;
}

Index ArchiveReader::locate(double t_query) const {
    require(!entries_.empty(), ErrorCategory::range, "archive has no records");
    const double slack = 1e-9 * header_.dt;
    require(t_query >= entries_.front().time - slack && t_query <= entries_.back().time + slack,
            ErrorCategory::range,
            "time " + std::to_string(t_query) + " outside archive range [" +
                std::to_string(entries_.front().time) + ", " + std::to_string(entries_.back().time) + "]");
    auto it = std::upper_bound(entries_.begin(), entries_.end(), t_query + slack,
                               [](double t, const Entry& e) { return t < e.time; });
    return static_cast<Index>(std::distance(entries_.begin(), it)) - 1;
}

DenseTensor ArchiveReader::reconstruct_at(double t_query) const { return reconstruct(state(locate(t_query))); }

// ---------------------------------------------------------------------------

double compression_ratio(std::span<const Index> dims, std::span<const Index> ranks) {
    require(dims.size() == ranks.size(), ErrorCategory::shape, "compression_ratio: order mismatch");
    double stored = 1.0;
    for (Index r : ranks) stored *= static_cast<double>(r);
    for (Index n = 0; n < dims.size(); ++n) stored += static_cast<double>(ranks[n]) * static_cast<double>(dims[n]);
    double full = 1.0;
    for (Index d : dims) full *= static_cast<double>(d);
    return full / stored;
}

double weighted_compression_ratio(std::span<const CrInterval> intervals) {
    require(!intervals.empty(), ErrorCategory::range, "weighted_compression_ratio: no intervals");
    double denom = 0.0;
    for (Index k = 0; k < intervals.size(); ++k) {
        const CrInterval& iv = intervals[k];
        require(iv.t_end >= iv.t_start, ErrorCategory::range, "interval end precedes its start");
        require(iv.ratio > 0.0, ErrorCategory::range, "compression ratios must be positive");
        if (k > 0) {
            const double gap = iv.t_start - intervals[k - 1].t_end;
            require(std::abs(gap) <= 1e-12 * std::max(1.0, std::abs(iv.t_start)), ErrorCategory::range,
                    "intervals must be contiguous and increasing");
        }
        denom += (iv.t_end - iv.t_start) / iv.ratio;
    }
    const double span = intervals.back().t_end - intervals.front().t_start;
    require(span > 0.0, ErrorCategory::range, "weighted_compression_ratio: zero-length total span");
    return span / denom;
}

} // namespace tdb
