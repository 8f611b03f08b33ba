#pragma once

// Dense p-order tensors, mode-n unfolding/folding, n-mode products and the
// weighted inner products every other module is built on.
//
// Storage is a single contiguous array with the first index varying
// fastest. The mode-n unfolding places mode n on the rows; the column index
// enumerates the remaining modes in increasing mode order, earliest mode
// fastest. Mode indices are 0-based.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace tdb {

using Index = std::size_t;
using Shape = std::vector<Index>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Index shape_size(std::span<const Index> dims);

class DenseTensor {
public:
    DenseTensor() = default;
    /// Zero-filled tensor.
    explicit DenseTensor(Shape dims);
    DenseTensor(Shape dims, std::vector<double> values);

    [[nodiscard]] const Shape& dims() const noexcept { return dims_; }
    [[nodiscard]] Index order() const noexcept { return dims_.size(); }
    [[nodiscard]] Index dim(Index n) const { return dims_.at(n); }
    [[nodiscard]] Index size() const noexcept { return values_.size(); }

    [[nodiscard]] std::span<double> values() noexcept { return values_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double* data() noexcept { return values_.data(); }
    [[nodiscard]] const double* data() const noexcept { return values_.data(); }

    [[nodiscard]] Index linear_index(std::span<const Index> idx) const;
    double& operator()(std::span<const Index> idx) { return values_[linear_index(idx)]; }
    double operator()(std::span<const Index> idx) const { return values_[linear_index(idx)]; }
    double& operator()(std::initializer_list<Index> idx) {
        return (*this)(std::span<const Index>(idx.begin(), idx.size()));
    }
    double operator()(std::initializer_list<Index> idx) const {
        return (*this)(std::span<const Index>(idx.begin(), idx.size()));
    }

    DenseTensor& operator+=(const DenseTensor& other);
    DenseTensor& operator-=(const DenseTensor& other);
    DenseTensor& operator*=(double s);
    /// this += alpha * x
    DenseTensor& axpy(double alpha, const DenseTensor& x);

    [[nodiscard]] bool all_finite() const noexcept;

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    Shape dims_;
    std::vector<double> values_;
};

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator+(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator*(double s, const DenseTensor& a);

/// Per-mode diagonal quadrature weights defining all inner products.
class ModeWeights {
public:
    ModeWeights() = default;
    explicit ModeWeights(std::vector<Vector> per_mode);

    /// All weights equal to one.
    static ModeWeights unit(std::span<const Index> dims);
    /// Composite trapezoid rule on a uniform grid of n points over [lo, hi].
    static Vector trapezoid(Index n, double lo, double hi);

    [[nodiscard]] Index order() const noexcept { return weights_.size(); }
    [[nodiscard]] const Vector& operator[](Index n) const { return weights_.at(n); }
    [[nodiscard]] const std::vector<Vector>& modes() const noexcept { return weights_; }
    [[nodiscard]] Shape dims() const;
    [[nodiscard]] bool matches(std::span<const Index> dims) const noexcept;

    friend bool operator==(const ModeWeights& a, const ModeWeights& b);

private:
    std::vector<Vector> weights_;
};

/// Per-mode subspace dimensions.
using MultiRank = Shape;

/// Throws unless 1 <= r_n <= N_n and r_n <= prod_{m != n} r_m.
void check_multirank(std::span<const Index> ranks, std::span<const Index> dims);
[[nodiscard]] bool is_feasible(std::span<const Index> ranks, std::span<const Index> dims) noexcept;
/// Lower each rank until the feasibility condition holds (never below 1).
MultiRank clamp_feasible(MultiRank ranks, std::span<const Index> dims);

Matrix unfold(const DenseTensor& t, Index n);
DenseTensor fold(const Matrix& m, Index n, Shape dims);

/// T x_n A, with A of shape M x N_n.
DenseTensor mode_product(const DenseTensor& t, const Matrix& a, Index n);

/// Uᵀ diag(w): the matrix that projects mode-n fibers onto a weighted
/// orthonormal basis U.
Matrix weighted_transpose(const Matrix& u, const Vector& w);

double weighted_inner(std::span<const double> u, std::span<const double> v,
                      std::span<const double> w);
double weighted_inner(const Vector& u, const Vector& v, const Vector& w);

/// sqrt of sum_i T[i]^2 prod_n w^(n)_{i_n}. Reduction runs over the storage
/// order (first index fastest) sequentially.
double weighted_frobenius(const DenseTensor& t, const ModeWeights& weights);

/// Column weights for unfold(·, n): Kronecker product of the other modes'
/// weights, ordered to match the unfolding's column index.
Vector unfolding_column_weights(const ModeWeights& weights, Index n);

} // namespace tdb
