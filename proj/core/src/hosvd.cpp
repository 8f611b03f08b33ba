#include "tdb/hosvd.hpp"

#include "tdb/error.hpp"

#include <algorithm>
#include <cmath>

namespace tdb {

void normalize_signs(Matrix& vectors) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        Eigen::Index imax = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&imax);
        if (vectors(imax, j) < 0.0) vectors.col(j) *= -1.0;
    }
}

namespace {

struct GramEigen {
    Vector sigma;  // descending
    Matrix vecs;   // weighted-orthonormal, matching sigma
};

// Square roots of the column weights of unfold(·, n), split into the
// factor over modes before n (fast index) and after n (slow index).
std::pair<Vector, Vector> split_column_weights(const ModeWeights& weights, Index n) {
    auto kron = [&](Index first, Index last) {
        Vector acc = Vector::Ones(1);
        for (Index m = first; m < last; ++m) {
            const Vector w = weights[m].cwiseSqrt();
            Vector next(acc.size() * w.size());
            for (Eigen::Index j = 0; j < w.size(); ++j) next.segment(j * acc.size(), acc.size()) = acc * w[j];
            acc = std::move(next);
        }
        return acc;
    };
    return {kron(0, n), kron(n + 1, weights.order())};
}

GramEigen weighted_gram_eigen(const DenseTensor& v, Index n, const ModeWeights& weights) {
    require(n < v.order(), ErrorCategory::range, "mode index out of range");
    require(weights.matches(v.dims()), ErrorCategory::shape, "weights do not match tensor dims");
    require(v.all_finite(), ErrorCategory::numeric, "mode_svd: input contains non-finite values");

    const Vector row_sqrt = weights[n].cwiseSqrt();
    const auto rows = static_cast<Eigen::Index>(v.dim(n));
    const auto [left_w, right_w] = split_column_weights(weights, n);
    const auto left = left_w.size();
    const auto right = right_w.size();

    // Gram matrix of W_n^{1/2} V_(n) W_c^{1/2}. The unfolding is assembled in
    // chunks of whole storage slabs so the working set stays in cache.
    Matrix gram = Matrix::Zero(rows, rows);
    const Eigen::Index chunk = std::max<Eigen::Index>(1, std::min<Eigen::Index>(right, 2048 / left));
    Matrix buffer(rows, left * chunk);
    for (Eigen::Index r0 = 0; r0 < right; r0 += chunk) {
        const Eigen::Index count = std::min(chunk, right - r0);
        for (Eigen::Index r = 0; r < count; ++r) {
            const Eigen::Map<const Matrix> slab(v.data() + left * rows * (r0 + r), left, rows);
            buffer.middleCols(left * r, left).noalias() =
                (slab.transpose() * left_w.asDiagonal()) * right_w[r0 + r];
        }
        gram.selfadjointView<Eigen::Lower>().rankUpdate(buffer.leftCols(left * count));
    }
    gram = row_sqrt.asDiagonal() * Matrix(gram.selfadjointView<Eigen::Lower>()) * row_sqrt.asDiagonal();

    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    require(eig.info() == Eigen::Success, ErrorCategory::numeric, "mode_svd: eigensolver failed");

    GramEigen out;
    out.sigma.resize(rows);
    out.vecs.resize(rows, rows);
    for (Eigen::Index j = 0; j < rows; ++j) {
        const Eigen::Index src = rows - 1 - j; // ascending -> descending
        out.sigma[j] = std::sqrt(std::max(eig.eigenvalues()[src], 0.0));
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double s = row_sqrt[i];
            out.vecs(i, j) = s > 0.0 ? eig.eigenvectors()(i, src) / s : 0.0;
        }
    }
    normalize_signs(out.vecs);
    return out;
}

} // namespace

ModeSpectrum mode_svd(const DenseTensor& v, Index n, const ModeWeights& weights, Index k) {
    require(n < v.order(), ErrorCategory::range, "mode index out of range");
    require(k >= 1 && k <= v.dim(n), ErrorCategory::range,
            "mode_svd: k=" + std::to_string(k) + " outside [1, " + std::to_string(v.dim(n)) + "]");
    GramEigen ge = weighted_gram_eigen(v, n, weights);
    const auto kk = static_cast<Eigen::Index>(k);
    return {ge.sigma.head(kk), ge.vecs.leftCols(kk)};
}

Vector mode_singular_values(const DenseTensor& v, Index n, const ModeWeights& weights) {
    return weighted_gram_eigen(v, n, weights).sigma;
}

HosvdResult hosvd(const DenseTensor& v, std::shared_ptr<const ModeWeights> weights,
                  const MultiRank& ranks, double time) {
    require(weights != nullptr, ErrorCategory::shape, "hosvd: missing weights");
    check_multirank(ranks, v.dims());
    HosvdResult res;
    res.state.time = time;
    res.state.weights = weights;
    DenseTensor core = v;
    for (Index n = 0; n < v.order(); ++n) {
        GramEigen ge = weighted_gram_eigen(v, n, *weights);
        Matrix u = ge.vecs.leftCols(static_cast<Eigen::Index>(ranks[n]));
        core = mode_product(core, weighted_transpose(u, (*weights)[n]), n);
        res.state.bases.push_back(std::move(u));
        res.spectra.push_back({std::move(ge.sigma), std::move(ge.vecs)});
    }
    res.state.core = std::move(core);
    return res;
}

TdbState truncate_from_spectra(const DenseTensor& v, std::shared_ptr<const ModeWeights> weights,
                               const std::vector<ModeSpectrum>& spectra, const MultiRank& ranks,
                               double time) {
    require(weights != nullptr, ErrorCategory::shape, "truncate_from_spectra: missing weights");
    require(spectra.size() == v.order(), ErrorCategory::shape, "truncate_from_spectra: order mismatch");
    check_multirank(ranks, v.dims());
    TdbState s;
    s.time = time;
    s.weights = weights;
    DenseTensor core = v;
    for (Index n = 0; n < v.order(); ++n) {
        require(static_cast<Index>(spectra[n].vectors.cols()) >= ranks[n], ErrorCategory::range,
                "spectrum of mode " + std::to_string(n) + " is shorter than the requested rank");
        Matrix u = spectra[n].vectors.leftCols(static_cast<Eigen::Index>(ranks[n]));
        core = mode_product(core, weighted_transpose(u, (*weights)[n]), n);
        s.bases.push_back(std::move(u));
    }
    s.core = std::move(core);
    return s;
}

TdbState hosvd_truncate(const DenseTensor& v, std::shared_ptr<const ModeWeights> weights,
                        const MultiRank& ranks, double time) {
    return hosvd(v, std::move(weights), ranks, time).state;
}

Index rank_for_energy(const Vector& sigma, double energy_percent) {
    require(sigma.size() > 0, ErrorCategory::shape, "rank_for_energy: empty spectrum");
    require(energy_percent > 0.0 && energy_percent < 100.0, ErrorCategory::config,
            "energy threshold must lie in (0, 100)");
    const double total = sigma.squaredNorm();
    if (total <= 0.0) return 1;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        acc += sigma[i] * sigma[i];
        if (acc / total * 100.0 >= energy_percent) return static_cast<Index>(i + 1);
    }
    return static_cast<Index>(sigma.size());
}

MultiRank ranks_for_energy(const std::vector<ModeSpectrum>& spectra, double energy_percent,
                           std::span<const Index> dims) {
    require(!spectra.empty(), ErrorCategory::shape, "ranks_for_energy: empty spectrum list");
    require(spectra.size() == dims.size(), ErrorCategory::shape, "ranks_for_energy: order mismatch");
    MultiRank r;
    for (const ModeSpectrum& s : spectra) r.push_back(rank_for_energy(s.singular_values, energy_percent));
    return clamp_feasible(std::move(r), dims);
}

double hosvd_tail_bound(const std::vector<ModeSpectrum>& spectra, std::span<const Index> ranks) {
    require(spectra.size() == ranks.size(), ErrorCategory::shape, "hosvd_tail_bound: order mismatch");
    double tail = 0.0;
    for (Index n = 0; n < spectra.size(); ++n) {
        const Vector& s = spectra[n].singular_values;
        for (Eigen::Index i = static_cast<Eigen::Index>(ranks[n]); i < s.size(); ++i) tail += s[i] * s[i];
    }
    return std::sqrt(tail);
}

} // namespace tdb
