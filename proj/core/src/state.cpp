#include "tdb/state.hpp"

#include "tdb/error.hpp"

#include <algorithm>
#include <cmath>

namespace tdb {

MultiRank TdbState::ranks() const {
    MultiRank r;
    for (const Matrix& u : bases) r.push_back(static_cast<Index>(u.cols()));
    return r;
}

Shape TdbState::dims() const {
    Shape d;
    for (const Matrix& u : bases) d.push_back(static_cast<Index>(u.rows()));
    return d;
}

void TdbState::validate() const {
    require(weights != nullptr, ErrorCategory::shape, "state has no weights");
    require(!bases.empty(), ErrorCategory::shape, "state has no bases");
    const Shape d = dims();
    const MultiRank r = ranks();
    require(weights->matches(d), ErrorCategory::shape, "state weights do not match basis rows");
    require(core.dims() == r, ErrorCategory::shape, "core dims do not match basis ranks");
    check_multirank(r, d);
}

double orthonormality_defect(const TdbState& state) {
    double defect = 0.0;
    for (Index n = 0; n < state.order(); ++n) {
        const Matrix& u = state.bases[n];
        const Matrix g = u.transpose() * (*state.weights)[n].asDiagonal() * u;
        defect = std::max(defect, (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
    }
    return defect;
}

DenseTensor reconstruct(const TdbState& state) {
    require(state.core.order() == state.order(), ErrorCategory::shape,
            "core order does not match number of bases");
    // Expand the mode that grows least first to keep intermediates small.
    std::vector<Index> order(state.order());
    for (Index n = 0; n < order.size(); ++n) order[n] = n;
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        const double ga = static_cast<double>(state.bases[a].rows()) / static_cast<double>(state.bases[a].cols());
        const double gb = static_cast<double>(state.bases[b].rows()) / static_cast<double>(state.bases[b].cols());
        return ga < gb || (ga == gb && a < b);
    });
    DenseTensor out = state.core;
    for (Index n : order) out = mode_product(out, state.bases[n], n);
    return out;
}

} // namespace tdb
