#include "tdb/tensor.hpp"

#include "tdb/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace tdb {

namespace {

std::string shape_string(std::span<const Index> dims) {
    std::ostringstream os;
    os << '(';
    for (Index i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
    os << ')';
    return os.str();
}

void check_mode(Index n, Index order) {
    require(n < order, ErrorCategory::range,
            "mode index " + std::to_string(n) + " out of range for order " + std::to_string(order));
}

// Sizes of the blocks before and after mode n in storage order.
std::pair<Index, Index> outer_sizes(std::span<const Index> dims, Index n) {
    Index left = 1, right = 1;
    for (Index m = 0; m < n; ++m) left *= dims[m];
    for (Index m = n + 1; m < dims.size(); ++m) right *= dims[m];
    return {left, right};
}

} // namespace

Index shape_size(std::span<const Index> dims) {
    return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

DenseTensor::DenseTensor(Shape dims) : dims_(std::move(dims)) {
    require(!dims_.empty(), ErrorCategory::shape, "tensor order must be >= 1");
    require(std::all_of(dims_.begin(), dims_.end(), [](Index d) { return d >= 1; }),
            ErrorCategory::shape, "tensor dims must be >= 1, got " + shape_string(dims_));
    values_.assign(shape_size(dims_), 0.0);
}

DenseTensor::DenseTensor(Shape dims, std::vector<double> values) : DenseTensor(std::move(dims)) {
    require(values.size() == values_.size(), ErrorCategory::shape,
            "value count " + std::to_string(values.size()) + " does not match dims " +
                shape_string(dims_));
    values_ = std::move(values);
}

Index DenseTensor::linear_index(std::span<const Index> idx) const {
    require(idx.size() == dims_.size(), ErrorCategory::shape, "index arity mismatch");
    Index lin = 0, stride = 1;
    for (Index m = 0; m < dims_.size(); ++m) {
        require(idx[m] < dims_[m], ErrorCategory::range, "tensor index out of range");
        lin += idx[m] * stride;
        stride *= dims_[m];
    }
    return lin;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) { return axpy(1.0, other); }
DenseTensor& DenseTensor::operator-=(const DenseTensor& other) { return axpy(-1.0, other); }

DenseTensor& DenseTensor::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

DenseTensor& DenseTensor::axpy(double alpha, const DenseTensor& x) {
    require(dims_ == x.dims_, ErrorCategory::shape,
            "tensor shape mismatch " + shape_string(dims_) + " vs " + shape_string(x.dims_));
    for (Index i = 0; i < values_.size(); ++i) values_[i] += alpha * x.values_[i];
    return *this;
}

bool DenseTensor::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) {
    DenseTensor r = a;
    r -= b;
    return r;
}

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b) {
    DenseTensor r = a;
    r += b;
    return r;
}

DenseTensor operator*(double s, const DenseTensor& a) {
    DenseTensor r = a;
    r *= s;
    return r;
}

// ---------------------------------------------------------------------------
// ModeWeights

ModeWeights::ModeWeights(std::vector<Vector> per_mode) : weights_(std::move(per_mode)) {
    require(!weights_.empty(), ErrorCategory::shape, "weights need at least one mode");
    for (Index n = 0; n < weights_.size(); ++n) {
        const Vector& w = weights_[n];
        require(w.size() >= 1, ErrorCategory::shape, "empty weight vector for mode " + std::to_string(n));
        require(w.allFinite() && (w.array() >= 0.0).all(), ErrorCategory::config,
                "weights of mode " + std::to_string(n) + " must be finite and nonnegative");
        require((w.array() > 0.0).any(), ErrorCategory::config,
                "weights of mode " + std::to_string(n) + " are all zero");
    }
}

ModeWeights ModeWeights::unit(std::span<const Index> dims) {
    std::vector<Vector> w;
    for (Index d : dims) w.push_back(Vector::Ones(static_cast<Eigen::Index>(d)));
    return ModeWeights(std::move(w));
}

Vector ModeWeights::trapezoid(Index n, double lo, double hi) {
    require(n >= 2, ErrorCategory::config, "trapezoid rule needs at least 2 points");
    require(hi > lo, ErrorCategory::config, "trapezoid rule needs hi > lo");
    const double h = (hi - lo) / static_cast<double>(n - 1);
    Vector w = Vector::Constant(static_cast<Eigen::Index>(n), h);
    w[0] = w[static_cast<Eigen::Index>(n) - 1] = 0.5 * h;
    return w;
}

Shape ModeWeights::dims() const {
    Shape d;
    for (const Vector& w : weights_) d.push_back(static_cast<Index>(w.size()));
    return d;
}

bool ModeWeights::matches(std::span<const Index> dims) const noexcept {
    if (dims.size() != weights_.size()) return false;
    for (Index n = 0; n < dims.size(); ++n)
        if (static_cast<Index>(weights_[n].size()) != dims[n]) return false;
    return true;
}

bool operator==(const ModeWeights& a, const ModeWeights& b) {
    if (a.order() != b.order()) return false;
    for (Index n = 0; n < a.order(); ++n) {
        if (a[n].size() != b[n].size() || a[n] != b[n]) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// MultiRank

bool is_feasible(std::span<const Index> ranks, std::span<const Index> dims) noexcept {
    if (ranks.size() != dims.size() || ranks.empty()) return false;
    for (Index n = 0; n < ranks.size(); ++n) {
        if (ranks[n] < 1 || ranks[n] > dims[n]) return false;
        if (ranks.size() > 1) {
            Index others = 1;
            for (Index m = 0; m < ranks.size(); ++m)
                if (m != n) others *= ranks[m];
            if (ranks[n] > others) return false;
        }
    }
    return true;
}

void check_multirank(std::span<const Index> ranks, std::span<const Index> dims) {
    require(ranks.size() == dims.size(), ErrorCategory::shape,
            "multirank " + shape_string(ranks) + " has wrong order for dims " + shape_string(dims));
    require(is_feasible(ranks, dims), ErrorCategory::range,
            "infeasible multirank " + shape_string(ranks) + " for dims " + shape_string(dims));
}

MultiRank clamp_feasible(MultiRank ranks, std::span<const Index> dims) {
    require(ranks.size() == dims.size(), ErrorCategory::shape, "multirank order mismatch");
    for (Index n = 0; n < ranks.size(); ++n) ranks[n] = std::clamp<Index>(ranks[n], 1, dims[n]);
    if (ranks.size() == 1) return ranks;
    // Lowering one rank can only tighten the others' bounds, so iterate to a fixed point.
    bool changed = true;
    while (changed) {
        changed = false;
        for (Index n = 0; n < ranks.size(); ++n) {
            Index others = 1;
            for (Index m = 0; m < ranks.size(); ++m)
                if (m != n) others *= ranks[m];
            if (ranks[n] > others) {
                ranks[n] = others;
                changed = true;
            }
        }
    }
    return ranks;
}

// ---------------------------------------------------------------------------
// Unfolding and products

Matrix unfold(const DenseTensor& t, Index n) {
    check_mode(n, t.order());
    const auto [left, right] = outer_sizes(t.dims(), n);
    const auto rows = static_cast<Eigen::Index>(t.dim(n));
    const auto l = static_cast<Eigen::Index>(left);
    Matrix m(rows, l * static_cast<Eigen::Index>(right));
    // Each slab r is a left x rows column-major block; its transpose fills
    // columns [l r, l r + l) of the unfolding.
    for (Index r = 0; r < right; ++r) {
        const Eigen::Map<const Matrix> slab(t.data() + left * t.dim(n) * r, l, rows);
        m.middleCols(l * static_cast<Eigen::Index>(r), l) = slab.transpose();
    }
    return m;
}

DenseTensor fold(const Matrix& m, Index n, Shape dims) {
    DenseTensor t(std::move(dims));
    check_mode(n, t.order());
    const auto [left, right] = outer_sizes(t.dims(), n);
    const Index rows = t.dim(n);
    require(static_cast<Index>(m.rows()) == rows && static_cast<Index>(m.cols()) == left * right,
            ErrorCategory::shape, "matrix shape does not match dims for fold");
    const auto l = static_cast<Eigen::Index>(left);
    for (Index r = 0; r < right; ++r) {
        Eigen::Map<Matrix> slab(t.data() + left * rows * r, l, static_cast<Eigen::Index>(rows));
        slab = m.middleCols(l * static_cast<Eigen::Index>(r), l).transpose();
    }
    return t;
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& a, Index n) {
    check_mode(n, t.order());
    const Index cols = t.dim(n);
    require(static_cast<Index>(a.cols()) == cols, ErrorCategory::shape,
            "mode_product: matrix has " + std::to_string(a.cols()) + " columns, mode " +
                std::to_string(n) + " has size " + std::to_string(cols));
    const Index out_rows = static_cast<Index>(a.rows());
    Shape out_dims = t.dims();
    out_dims[n] = out_rows;
    DenseTensor out(out_dims);
    const auto [left, right] = outer_sizes(t.dims(), n);
    using ConstMap = Eigen::Map<const Matrix>;
    using Map = Eigen::Map<Matrix>;
    const auto el = static_cast<Eigen::Index>(left);
    const auto er = static_cast<Eigen::Index>(right);
    const auto ec = static_cast<Eigen::Index>(cols);
    const auto eo = static_cast<Eigen::Index>(out_rows);
    if (left == 1) {
        ConstMap src(t.data(), ec, er);
        Map dst(out.data(), eo, er);
        dst.noalias() = a * src;
    } else {
        for (Eigen::Index r = 0; r < er; ++r) {
            ConstMap src(t.data() + el * ec * r, el, ec);
            Map dst(out.data() + el * eo * r, el, eo);
            dst.noalias() = src * a.transpose();
        }
    }
    return out;
}

Matrix weighted_transpose(const Matrix& u, const Vector& w) {
    require(u.rows() == w.size(), ErrorCategory::shape, "basis rows do not match weight length");
    return u.transpose() * w.asDiagonal();
}

double weighted_inner(std::span<const double> u, std::span<const double> v,
                      std::span<const double> w) {
    require(u.size() == v.size() && v.size() == w.size(), ErrorCategory::shape,
            "weighted_inner: length mismatch");
    double s = 0.0;
    for (Index i = 0; i < u.size(); ++i) s += u[i] * v[i] * w[i];
    return s;
}

double weighted_inner(const Vector& u, const Vector& v, const Vector& w) {
    return weighted_inner(std::span<const double>(u.data(), static_cast<Index>(u.size())),
                          std::span<const double>(v.data(), static_cast<Index>(v.size())),
                          std::span<const double>(w.data(), static_cast<Index>(w.size())));
}

double weighted_frobenius(const DenseTensor& t, const ModeWeights& weights) {
    require(weights.matches(t.dims()), ErrorCategory::shape, "weights do not match tensor dims");
    const Index p = t.order();
    const Index n0 = t.dim(0);
    const double* v = t.data();
    const Vector& w0 = weights[0];
    Index outer = t.size() / n0;

    // Walk the trailing multi-index with an odometer; combine weights of
    // modes 1..p-1 once per fiber.
    std::vector<Index> idx(p, 0);
    double total = 0.0;
    for (Index f = 0; f < outer; ++f) {
        double wf = 1.0;
        for (Index m = 1; m < p; ++m) wf *= weights[m][static_cast<Eigen::Index>(idx[m])];
        double fiber = 0.0;
        const double* base = v + f * n0;
        for (Index i = 0; i < n0; ++i) fiber += base[i] * base[i] * w0[static_cast<Eigen::Index>(i)];
        total += fiber * wf;
        for (Index m = 1; m < p; ++m) {
            if (++idx[m] < t.dim(m)) break;
            idx[m] = 0;
        }
    }
    return std::sqrt(total);
}

Vector unfolding_column_weights(const ModeWeights& weights, Index n) {
    check_mode(n, weights.order());
    Vector cw = Vector::Ones(1);
    // Later modes vary slower, so each new mode multiplies as the outer factor.
    for (Index m = 0; m < weights.order(); ++m) {
        if (m == n) continue;
        const Vector& w = weights[m];
        Vector next(cw.size() * w.size());
        for (Eigen::Index j = 0; j < w.size(); ++j) next.segment(j * cw.size(), cw.size()) = cw * w[j];
        cw = std::move(next);
    }
    return cw;
}

} // namespace tdb
