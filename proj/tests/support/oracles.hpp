#pragma once

// Brute-force reference implementations used only by tests. They work on
// explicit multi-index enumeration and plain dense linear algebra and share
// no code paths with the library kernels they check.

#include "tdb/state.hpp"
#include "tdb/tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <vector>

namespace oracle {

using tdb::Index;
using tdb::Matrix;
using tdb::Shape;
using tdb::Vector;

/// Visits every multi-index of dims, first index fastest.
inline void for_each_index(const Shape& dims, const std::function<void(const std::vector<Index>&)>& f) {
    Index total = 1;
    for (Index d : dims) total *= d;
    std::vector<Index> idx(dims.size(), 0);
    for (Index k = 0; k < total; ++k) {
        f(idx);
        for (Index m = 0; m < dims.size(); ++m) {
            if (++idx[m] < dims[m]) break;
            idx[m] = 0;
        }
    }
}

inline Index linear(const Shape& dims, const std::vector<Index>& idx) {
    Index lin = 0, stride = 1;
    for (Index m = 0; m < dims.size(); ++m) {
        lin += idx[m] * stride;
        stride *= dims[m];
    }
    return lin;
}

inline double at(const tdb::DenseTensor& t, const std::vector<Index>& idx) {
    return t.values()[oracle::linear(t.dims(), idx)];
}

/// Column of the mode-n unfolding: remaining modes in increasing order,
/// earliest fastest.
inline Index unfold_column(const Shape& dims, const std::vector<Index>& idx, Index n) {
    Index col = 0, stride = 1;
    for (Index m = 0; m < dims.size(); ++m) {
        if (m == n) continue;
        col += idx[m] * stride;
        stride *= dims[m];
    }
    return col;
}

inline Matrix unfold(const tdb::DenseTensor& t, Index n) {
    const Shape& dims = t.dims();
    Index cols = 1;
    for (Index m = 0; m < dims.size(); ++m)
        if (m != n) cols *= dims[m];
    Matrix out(static_cast<Eigen::Index>(dims[n]), static_cast<Eigen::Index>(cols));
    for_each_index(dims, [&](const std::vector<Index>& idx) {
        out(static_cast<Eigen::Index>(idx[n]), static_cast<Eigen::Index>(oracle::unfold_column(dims, idx, n))) = oracle::at(t, idx);
    });
    return out;
}

inline tdb::DenseTensor mode_product(const tdb::DenseTensor& t, const Matrix& a, Index n) {
    Shape out_dims = t.dims();
    out_dims[n] = static_cast<Index>(a.rows());
    tdb::DenseTensor out(out_dims);
    for_each_index(out_dims, [&](const std::vector<Index>& o) {
        double s = 0.0;
        std::vector<Index> i = o;
        for (Index k = 0; k < t.dim(n); ++k) {
            i[n] = k;
            s += a(static_cast<Eigen::Index>(o[n]), static_cast<Eigen::Index>(k)) * oracle::at(t, i);
        }
        out.values()[oracle::linear(out_dims, o)] = s;
    });
    return out;
}

inline double weighted_frobenius(const tdb::DenseTensor& t, const tdb::ModeWeights& w) {
    double s = 0.0;
    for_each_index(t.dims(), [&](const std::vector<Index>& idx) {
        double weight = 1.0;
        for (Index m = 0; m < idx.size(); ++m) weight *= w[m][static_cast<Eigen::Index>(idx[m])];
        const double x = oracle::at(t, idx);
        s += weight * x * x;
    });
    return std::sqrt(s);
}

inline double weighted_frobenius_diff(const tdb::DenseTensor& a, const tdb::DenseTensor& b,
                                      const tdb::ModeWeights& w) {
    tdb::DenseTensor d(a.dims());
    for (Index i = 0; i < d.size(); ++i) d.values()[i] = a.values()[i] - b.values()[i];
    return oracle::weighted_frobenius(d, w);
}

/// V = Σ_j core[j] Π_n U_n[i_n, j_n].
inline tdb::DenseTensor reconstruct(const tdb::TdbState& s) {
    Shape dims;
    for (const auto& u : s.bases) dims.push_back(static_cast<Index>(u.rows()));
    tdb::DenseTensor out(dims);
    for_each_index(dims, [&](const std::vector<Index>& i) {
        double acc = 0.0;
        for_each_index(s.core.dims(), [&](const std::vector<Index>& j) {
            double prod = oracle::at(s.core, j);
            for (Index n = 0; n < dims.size(); ++n)
                prod *= s.bases[n](static_cast<Eigen::Index>(i[n]), static_cast<Eigen::Index>(j[n]));
            acc += prod;
        });
        out.values()[oracle::linear(dims, i)] = acc;
    });
    return out;
}

/// Ṫ[j] = Σ_i V̇[i] Π_n w_n[i_n] U_n[i_n, j_n].
inline tdb::DenseTensor core_rhs(const tdb::DenseTensor& vdot, const tdb::TdbState& s) {
    Shape ranks;
    for (const auto& u : s.bases) ranks.push_back(static_cast<Index>(u.cols()));
    tdb::DenseTensor out(ranks);
    for_each_index(ranks, [&](const std::vector<Index>& j) {
        double acc = 0.0;
        for_each_index(vdot.dims(), [&](const std::vector<Index>& i) {
            double prod = oracle::at(vdot, i);
            for (Index n = 0; n < i.size(); ++n)
                prod *= (*s.weights)[n][static_cast<Eigen::Index>(i[n])] *
                        s.bases[n](static_cast<Eigen::Index>(i[n]), static_cast<Eigen::Index>(j[n]));
            acc += prod;
        });
        out.values()[oracle::linear(ranks, j)] = acc;
    });
    return out;
}

/// Pseudoinverse by complete orthogonal decomposition (QR based, independent
/// of the production SVD path). tol is relative to the largest |R_ii|.
inline Matrix pinv(const Matrix& a, double tol) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    cod.setThreshold(tol);
    return cod.pseudoInverse();
}

/// U̇_j = (I − U_j U_jᵀ W_j) M_j pinv(unfold(core, j)), M_j from an explicit
/// weighted sum over all indices except i_j.
inline Matrix basis_rhs(const tdb::DenseTensor& vdot, const tdb::TdbState& s, Index j, double tol) {
    const Shape& dims = vdot.dims();
    Shape ranks;
    for (const auto& u : s.bases) ranks.push_back(static_cast<Index>(u.cols()));
    Index cols = 1;
    for (Index m = 0; m < ranks.size(); ++m)
        if (m != j) cols *= ranks[m];
    Matrix m_j = Matrix::Zero(static_cast<Eigen::Index>(dims[j]), static_cast<Eigen::Index>(cols));
    Shape kdims = ranks;
    kdims[j] = 1;
    for_each_index(kdims, [&](const std::vector<Index>& k) {
        const Index col = oracle::unfold_column(ranks, k, j);
        for_each_index(dims, [&](const std::vector<Index>& i) {
            double prod = oracle::at(vdot, i);
            for (Index n = 0; n < dims.size(); ++n) {
                if (n == j) continue;
                prod *= (*s.weights)[n][static_cast<Eigen::Index>(i[n])] *
                        s.bases[n](static_cast<Eigen::Index>(i[n]), static_cast<Eigen::Index>(k[n]));
            }
            m_j(static_cast<Eigen::Index>(i[j]), static_cast<Eigen::Index>(col)) += prod;
        });
    });
    const Matrix& u = s.bases[j];
    const Matrix w = (*s.weights)[j].asDiagonal();
    const Matrix proj = Matrix::Identity(u.rows(), u.rows()) - u * u.transpose() * w;
    return proj * m_j * pinv(oracle::unfold(s.core, j), tol);
}

/// Singular values of W_n^{1/2} V_(n) W_c^{1/2} by a dense SVD.
inline Vector weighted_mode_singular_values(const tdb::DenseTensor& v, Index n, const tdb::ModeWeights& w) {
    Matrix a = oracle::unfold(v, n);
    const Shape& dims = v.dims();
    for_each_index(dims, [&](const std::vector<Index>& idx) {
        double weight = 1.0;
        for (Index m = 0; m < dims.size(); ++m) weight *= w[m][static_cast<Eigen::Index>(idx[m])];
        a(static_cast<Eigen::Index>(idx[n]), static_cast<Eigen::Index>(oracle::unfold_column(dims, idx, n))) *=
            std::sqrt(weight);
    });
    return Eigen::JacobiSVD<Matrix>(a).singularValues();
}

/// Leading weighted-orthonormal left singular vectors of mode n (dense SVD).
inline Matrix weighted_mode_vectors(const tdb::DenseTensor& v, Index n, const tdb::ModeWeights& w, Index k) {
    Matrix a = oracle::unfold(v, n);
    const Shape& dims = v.dims();
    for_each_index(dims, [&](const std::vector<Index>& idx) {
        double weight = 1.0;
        for (Index m = 0; m < dims.size(); ++m) weight *= w[m][static_cast<Eigen::Index>(idx[m])];
        a(static_cast<Eigen::Index>(idx[n]), static_cast<Eigen::Index>(oracle::unfold_column(dims, idx, n))) *=
            std::sqrt(weight);
    });
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
    Matrix u = svd.matrixU().leftCols(static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < u.rows(); ++i) u.row(i) /= std::sqrt(w[n][i]);
    return u;
}

/// Dense truncated HOSVD error: project onto the leading dense-SVD vectors.
inline double hosvd_error(const tdb::DenseTensor& v, const tdb::ModeWeights& w, const Shape& ranks) {
    tdb::TdbState s;
    s.weights = std::make_shared<const tdb::ModeWeights>(w);
    tdb::DenseTensor core = v;
    for (Index n = 0; n < v.order(); ++n) {
        Matrix u = weighted_mode_vectors(v, n, w, ranks[n]);
        const Matrix proj = u.transpose() * w[n].asDiagonal();
        core = oracle::mode_product(core, proj, n);
        s.bases.push_back(u);
    }
    s.core = core;
    return weighted_frobenius_diff(v, oracle::reconstruct(s), w);
}

// ---------------------------------------------------------------------------
// Random instances

inline tdb::DenseTensor random_tensor(const Shape& dims, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    tdb::DenseTensor t(dims);
    for (double& x : t.values()) x = nd(rng);
    return t;
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    return m;
}

inline Vector random_weights(Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ud(0.2, 1.5);
    Vector w(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = ud(rng);
    return w;
}

/// Weighted-orthonormal basis: W^{-1/2} times a Euclidean-orthonormal Q.
inline Matrix random_weighted_basis(const Vector& w, Index r, std::mt19937_64& rng) {
    const Matrix g = random_matrix(static_cast<Index>(w.size()), r, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(w.size(), static_cast<Eigen::Index>(r));
    for (Eigen::Index i = 0; i < q.rows(); ++i) q.row(i) /= std::sqrt(w[i]);
    return q;
}

/// Random valid state; weights random unless unit is requested.
inline tdb::TdbState random_state(const Shape& dims, const Shape& ranks, std::mt19937_64& rng, bool unit = false) {
    std::vector<Vector> per_mode;
    for (Index d : dims) per_mode.push_back(unit ? Vector::Ones(static_cast<Eigen::Index>(d)) : random_weights(d, rng));
    tdb::TdbState s;
    s.weights = std::make_shared<const tdb::ModeWeights>(per_mode);
    s.core = random_tensor(ranks, rng);
    for (Index n = 0; n < dims.size(); ++n) s.bases.push_back(random_weighted_basis(per_mode[n], ranks[n], rng));
    return s;
}

inline double max_rel_error(const Matrix& a, const Matrix& b) {
    const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double max_rel_error(const tdb::DenseTensor& a, const tdb::DenseTensor& b) {
    double diff = 0.0, scale = 1e-300;
    for (Index i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a.values()[i] - b.values()[i]));
        scale = std::max(scale, std::abs(b.values()[i]));
    }
    return diff / scale;
}

} // namespace oracle
