#include "tdb/datagen.hpp"

#include "tdb/archive.hpp"
#include "tdb/error.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace tdb {

DenseTensor SnapshotStream::derivative(double) const {
    fail(ErrorCategory::config, "this stream does not provide exact derivatives");
}

std::optional<TimedSnapshot> SnapshotStream::next() {
    if (cursor_ >= length()) return std::nullopt;
    TimedSnapshot s{time_at(cursor_), snapshot(cursor_)};
    ++cursor_;
    return s;
}

// ---------------------------------------------------------------------------
// Runge

double runge_a(double t, double alpha) { return 1.0 - 0.5 * std::exp(-alpha * (t - 1.0) * (t - 1.0)); }

double runge_a_dot(double t, double alpha) {
    return alpha * (t - 1.0) * std::exp(-alpha * (t - 1.0) * (t - 1.0));
}

RungeStream::RungeStream(RungeParams params) : params_(params) {
    const Index n = params_.grid_points;
    require(n >= 2, ErrorCategory::config, "Runge grid needs at least 2 points per axis");
    require(params_.hi > params_.lo, ErrorCategory::config, "Runge domain needs hi > lo");
    require(params_.dt > 0.0, ErrorCategory::config, "Runge dt must be > 0");
    require(params_.t_end >= params_.t0, ErrorCategory::config, "Runge t_end must be >= t0");
    grid_.resize(n);
    const double h = (params_.hi - params_.lo) / static_cast<double>(n - 1);
    for (Index i = 0; i < n; ++i) grid_[i] = params_.lo + h * static_cast<double>(i);
    grid_[n - 1] = params_.hi;
    radius2_.resize(n * n * n);
    for (Index k = 0; k < n; ++k)
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < n; ++i)
                radius2_[i + n * (j + n * k)] = grid_[i] * grid_[i] + grid_[j] * grid_[j] + grid_[k] * grid_[k];
    const Vector w = ModeWeights::trapezoid(n, params_.lo, params_.hi);
    weights_ = std::make_shared<const ModeWeights>(std::vector<Vector>{w, w, w});
    length_ = static_cast<Index>(std::llround((params_.t_end - params_.t0) / params_.dt)) + 1;
}

Shape RungeStream::dims() const {
    const Index n = params_.grid_points;
    return {n, n, n};
}

DenseTensor RungeStream::evaluate(double t) const {
    DenseTensor f(dims());
    const double a = runge_a(t, params_.alpha);
    const double a2 = a * a;
    double* out = f.data();
    for (Index i = 0; i < radius2_.size(); ++i) out[i] = 1.0 / (a2 + radius2_[i]);
    return f;
}

DenseTensor RungeStream::derivative(double t) const {
    DenseTensor f(dims());
    const double a = runge_a(t, params_.alpha);
    const double scale = -2.0 * a * runge_a_dot(t, params_.alpha);
    const double a2 = a * a;
    double* out = f.data();
    for (Index i = 0; i < radius2_.size(); ++i) {
        const double v = 1.0 / (a2 + radius2_[i]);
        out[i] = scale * v * v;
    }
    return f;
}

RungeStream runge_stream(Index grid_points_per_axis, double lo, double hi, double dt, double alpha,
                         double t_end) {
    RungeParams p;
    p.grid_points = grid_points_per_axis;
    p.lo = lo;
    p.hi = hi;
    p.dt = dt;
    p.alpha = alpha;
    p.t_end = t_end;
    return RungeStream(p);
}

// ---------------------------------------------------------------------------
// Exact multirank

namespace {

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = nd(rng);
    return m;
}

DenseTensor gaussian_tensor(const Shape& dims, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    DenseTensor t(dims);
    for (double& v : t.values()) v = nd(rng);
    return t;
}

} // namespace

ExactRankStream::ExactRankStream(ExactRankParams params) : params_(std::move(params)) {
    check_multirank(params_.ranks, params_.dims);
    require(params_.dt > 0.0, ErrorCategory::config, "exact-rank stream dt must be > 0");
    std::mt19937_64 rng(params_.seed);
    std::vector<Vector> w;
    for (Index n = 0; n < params_.dims.size(); ++n) {
        const Index nn = params_.dims[n];
        w.push_back(nn >= 2 ? ModeWeights::trapezoid(nn, 0.0, 1.0) : Vector::Ones(1));
        Eigen::HouseholderQR<Matrix> qr(gaussian(nn, params_.ranks[n], rng));
        frames_.push_back(qr.householderQ() * Matrix::Identity(static_cast<Eigen::Index>(nn),
                                                               static_cast<Eigen::Index>(params_.ranks[n])));
        Matrix g = gaussian(nn, nn, rng);
        Matrix k = g - g.transpose();
        const double norm = nn >= 2 ? Eigen::JacobiSVD<Matrix>(k).singularValues()[0] : 0.0;
        if (norm > 0.0) k *= params_.rotation_rate / norm;
        generators_.push_back(std::move(k));
    }
    weights_ = std::make_shared<const ModeWeights>(std::move(w));
    core0_ = gaussian_tensor(params_.ranks, rng);
    core1_ = gaussian_tensor(params_.ranks, rng);
}

Matrix ExactRankStream::basis(Index n, double t) const {
    const Vector inv_sqrt = (*weights_)[n].cwiseSqrt().cwiseInverse();
    const Matrix rot = (t * generators_[n]).exp();
    return inv_sqrt.asDiagonal() * (rot * frames_[n]);
}

Matrix ExactRankStream::basis_rate(Index n, double t) const {
    const Vector inv_sqrt = (*weights_)[n].cwiseSqrt().cwiseInverse();
    const Matrix rot = (t * generators_[n]).exp();
    return inv_sqrt.asDiagonal() * (generators_[n] * (rot * frames_[n]));
}

DenseTensor ExactRankStream::core(double t) const {
    DenseTensor c = core0_;
    c.axpy(params_.core_variation * std::sin(params_.core_frequency * t), core1_);
    return c;
}

DenseTensor ExactRankStream::core_rate(double t) const {
    DenseTensor c = core1_;
    c *= params_.core_variation * params_.core_frequency * std::cos(params_.core_frequency * t);
    return c;
}

DenseTensor ExactRankStream::evaluate(double t) const {
    TdbState s;
    s.core = core(t);
    s.weights = weights_;
    for (Index n = 0; n < params_.dims.size(); ++n) s.bases.push_back(basis(n, t));
    return reconstruct(s);
}

DenseTensor ExactRankStream::derivative(double t) const {
    const Index p = params_.dims.size();
    std::vector<Matrix> u, du;
    for (Index n = 0; n < p; ++n) {
        u.push_back(basis(n, t));
        du.push_back(basis_rate(n, t));
    }
    auto expand = [&](const DenseTensor& c, Index rate_mode) {
        DenseTensor x = c;
        for (Index n = 0; n < p; ++n) x = mode_product(x, n == rate_mode ? du[n] : u[n], n);
        return x;
    };
    DenseTensor out = expand(core_rate(t), p);
    const DenseTensor c = core(t);
    for (Index n = 0; n < p; ++n) out += expand(c, n);
    return out;
}

// ---------------------------------------------------------------------------
// Manifest / file stream

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCategory::io, "cannot open manifest " + path.string());
    Manifest m;
    std::string line;
    int lineno = 0;
    bool have_dt = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, ErrorCategory::config,
                path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        std::istringstream vs(value);
        if (key == "dims") {
            Index d;
            while (vs >> d) m.dims.push_back(d);
        } else if (key == "dt") {
            have_dt = static_cast<bool>(vs >> m.dt);
        } else if (key == "t0") {
            vs >> m.t0;
        } else if (key == "weights") {
            m.weights = value;
        } else if (key == "lookahead") {
            m.lookahead = value == "true" || value == "1" || value == "yes";
        } else if (key == "snapshot") {
            m.files.emplace_back(value);
        } else {
            fail(ErrorCategory::config,
                 path.string() + ":" + std::to_string(lineno) + ": unknown manifest key '" + key + "'");
        }
    }
    require(!m.dims.empty(), ErrorCategory::config, "manifest " + path.string() + " has no dims");
    require(have_dt && m.dt > 0.0, ErrorCategory::config, "manifest " + path.string() + " needs dt > 0");
    require(!m.files.empty(), ErrorCategory::config, "manifest " + path.string() + " lists no snapshots");
    return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCategory::io, "cannot write manifest " + path.string());
    out.precision(17);
    out << "dims =";
    for (Index d : m.dims) out << ' ' << d;
    out << "\ndt = " << m.dt << "\nt0 = " << m.t0 << "\nweights = " << m.weights
        << "\nlookahead = " << (m.lookahead ? "true" : "false") << '\n';
    for (const auto& f : m.files) out << "snapshot = " << f.string() << '\n';
    require(static_cast<bool>(out), ErrorCategory::io, "failed writing manifest " + path.string());
}

ModeWeights parse_weight_spec(const std::string& spec, std::span<const Index> dims) {
    std::istringstream in(spec);
    std::string kind;
    in >> kind;
    if (kind == "unit") return ModeWeights::unit(dims);
    require(kind == "trapezoid", ErrorCategory::config, "unknown weight spec '" + spec + "'");
    std::vector<double> bounds;
    double b;
    while (in >> b) bounds.push_back(b);
    require(bounds.size() == 2 || bounds.size() == 2 * dims.size(), ErrorCategory::config,
            "trapezoid weights need 'lo hi' or one 'lo hi' pair per mode");
    std::vector<Vector> w;
    for (Index n = 0; n < dims.size(); ++n) {
        const Index o = bounds.size() == 2 ? 0 : 2 * n;
        w.push_back(ModeWeights::trapezoid(dims[n], bounds[o], bounds[o + 1]));
    }
    return ModeWeights(std::move(w));
}

FileStream::FileStream(const std::filesystem::path& manifest_path)
    : FileStream(read_manifest(manifest_path), manifest_path.parent_path()) {}

FileStream::FileStream(Manifest manifest, std::filesystem::path base_dir)
    : manifest_(std::move(manifest)), base_dir_(std::move(base_dir)) {
    weights_ = std::make_shared<const ModeWeights>(parse_weight_spec(manifest_.weights, manifest_.dims));
}

DenseTensor FileStream::snapshot(Index k) const {
    require(k < manifest_.files.size(), ErrorCategory::range, "snapshot index out of range");
    const std::filesystem::path& f = manifest_.files[k];
    const std::filesystem::path full = f.is_absolute() ? f : base_dir_ / f;
    DenseTensor t = read_raw_tensor(full);
    require(t.dims() == manifest_.dims, ErrorCategory::io,
            "snapshot " + full.string() + " has dims that differ from the manifest");
    return t;
}

} // namespace tdb
