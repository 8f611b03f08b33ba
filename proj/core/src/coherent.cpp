#include "tdb/coherent.hpp"

#include "tdb/error.hpp"
#include "tdb/hosvd.hpp"

#include <algorithm>
#include <cmath>

namespace tdb {

Vector core_singular_values(const DenseTensor& core, Index n) {
    const Matrix t = unfold(core, n);
    Eigen::JacobiSVD<Matrix> svd(t);
    return svd.singularValues();
}

RankedBasis ranked_basis(const TdbState& state, Index n) {
    require(n < state.order(), ErrorCategory::range, "mode index out of range");
    const Matrix t = unfold(state.core, n);
    require(t.cwiseAbs().maxCoeff() > 0.0, ErrorCategory::rank_collapse,
            "ranked_basis: core is identically zero");
    Eigen::JacobiSVD<Matrix> svd(t, Eigen::ComputeFullU);
    RankedBasis rb;
    rb.mode = n;
    rb.singular_values = Vector::Zero(t.rows());
    rb.singular_values.head(svd.singularValues().size()) = svd.singularValues();
    rb.rotation = svd.matrixU();
    rb.basis = state.bases[n] * rb.rotation;
    // Apply the sign convention to Ũ and carry it into Ψ.
    for (Eigen::Index j = 0; j < rb.basis.cols(); ++j) {
        Eigen::Index imax = 0;
        rb.basis.col(j).cwiseAbs().maxCoeff(&imax);
        if (rb.basis(imax, j) < 0.0) {
            rb.basis.col(j) *= -1.0;
            rb.rotation.col(j) *= -1.0;
        }
    }
    return rb;
}

Vector principal_angles(const Matrix& a, const Matrix& b, const Vector& weights) {
    require(a.rows() == b.rows() && a.rows() == weights.size(), ErrorCategory::shape,
            "principal_angles: row mismatch");
    const Matrix c = a.transpose() * weights.asDiagonal() * b;
    Eigen::JacobiSVD<Matrix> svd(c);
    Vector cosines = svd.singularValues();
    Vector angles(cosines.size());
    for (Eigen::Index i = 0; i < cosines.size(); ++i)
        angles[i] = std::acos(std::clamp(cosines[i], -1.0, 1.0));
    std::sort(angles.data(), angles.data() + angles.size());
    return angles;
}

} // namespace tdb
