#include "tdb/evolve.hpp"

#include "tdb/error.hpp"

#include <cmath>

namespace tdb {

namespace {

std::vector<Matrix> projectors(const TdbState& state) {
    std::vector<Matrix> a;
    a.reserve(state.order());
    for (Index n = 0; n < state.order(); ++n)
        a.push_back(weighted_transpose(state.bases[n], (*state.weights)[n]));
    return a;
}

void check_rhs_inputs(const DenseTensor& vdot, const TdbState& state) {
    require(vdot.dims() == state.dims(), ErrorCategory::shape,
            "derivative dims do not match the state's dims");
}

Matrix complement_times(const Matrix& m, const Matrix& pinv, const Matrix& u, const Matrix& proj) {
    Matrix p = m * pinv;
    p.noalias() -= u * (proj * p);
    return p;
}

TdbState add_scaled(const TdbState& s, double alpha, const TdbRhs& rhs) {
    TdbState out = s;
    out.core.axpy(alpha, rhs.core);
    for (Index n = 0; n < out.order(); ++n) out.bases[n] += alpha * rhs.bases[n];
    return out;
}

bool state_finite(const TdbState& s) {
    if (!s.core.all_finite()) return false;
    for (const Matrix& u : s.bases)
        if (!u.allFinite()) return false;
    return true;
}

} // namespace

DenseTensor project_core_rhs(const DenseTensor& vdot, const TdbState& state) {
    check_rhs_inputs(vdot, state);
    const std::vector<Matrix> a = projectors(state);
    DenseTensor x = vdot;
    for (Index n = state.order(); n-- > 0;) x = mode_product(x, a[n], n);
    return x;
}

Matrix core_pseudoinverse(const DenseTensor& core, Index n, double tol) {
    const Matrix t = unfold(core, n);
    require(t.allFinite(), ErrorCategory::numeric, "core contains non-finite values");
    require(t.cwiseAbs().maxCoeff() > 0.0, ErrorCategory::rank_collapse,
            "unfolded core is identically zero; reinitialize the decomposition");
    Eigen::JacobiSVD<Matrix> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = tol * s[0];
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cutoff) inv[i] = 1.0 / s[i];
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix project_basis_rhs(const DenseTensor& vdot, const TdbState& state, Index j, double tol) {
    check_rhs_inputs(vdot, state);
    require(j < state.order(), ErrorCategory::range, "basis mode index out of range");
    const std::vector<Matrix> a = projectors(state);
    DenseTensor x = vdot;
    for (Index n = state.order(); n-- > 0;)
        if (n != j) x = mode_product(x, a[n], n);
    return complement_times(unfold(x, j), core_pseudoinverse(state.core, j, tol), state.bases[j], a[j]);
}

TdbRhs evaluate_rhs(const DenseTensor& vdot, const TdbState& state, double tol) {
    check_rhs_inputs(vdot, state);
    const Index p = state.order();
    const std::vector<Matrix> a = projectors(state);

    // suffix[k] = vdot contracted over modes k..p-1 (suffix[p] = vdot).
    std::vector<DenseTensor> suffix(p + 1);
    suffix[p] = vdot;
    for (Index k = p; k-- > 1;) suffix[k] = mode_product(suffix[k + 1], a[k], k);

    TdbRhs rhs;
    rhs.bases.resize(p);
    for (Index j = 0; j < p; ++j) {
        DenseTensor x = suffix[j + 1];
        for (Index m = j; m-- > 0;) x = mode_product(x, a[m], m);
        if (j == 0) rhs.core = mode_product(x, a[0], 0);
        rhs.bases[j] = complement_times(unfold(x, j), core_pseudoinverse(state.core, j, tol),
                                        state.bases[j], a[j]);
    }
    return rhs;
}

std::string_view integrator_name(Integrator i) noexcept {
    return i == Integrator::euler ? "euler" : "rk2";
}

Integrator parse_integrator(std::string_view name) {
    if (name == "euler") return Integrator::euler;
    if (name == "rk2") return Integrator::rk2;
    fail(ErrorCategory::config, "unknown integrator '" + std::string(name) + "' (expected euler|rk2)");
}

TdbState step(const TdbState& state, const DerivativeFn& derivative, double dt,
              Integrator integrator, const StepOptions& options) {
    require(dt > 0.0 && std::isfinite(dt), ErrorCategory::range, "time step must be positive and finite");
    const double t0 = state.time;
    TdbState next;
    const TdbRhs k1 = evaluate_rhs(derivative(t0), state, options.pinv_tolerance);
    if (integrator == Integrator::euler) {
        next = add_scaled(state, dt, k1);
    } else {
        TdbState stage = add_scaled(state, dt, k1);
        stage.time = t0 + dt;
        const TdbRhs k2 = evaluate_rhs(derivative(t0 + dt), stage, options.pinv_tolerance);
        next = add_scaled(state, 0.5 * dt, k1);
        next = add_scaled(next, 0.5 * dt, k2);
    }
    next.time = t0 + dt;
    require(state_finite(next), ErrorCategory::numeric,
            "non-finite values after time step at t=" + std::to_string(t0) + "; dt may be too large");
    if (orthonormality_defect(next) > options.reorthonormalize_trigger) next = reorthonormalize(next);
    return next;
}

TdbState reorthonormalize(const TdbState& state) {
    TdbState out = state;
    for (Index n = 0; n < state.order(); ++n) {
        const Vector& w = (*state.weights)[n];
        Matrix q = state.bases[n];
        const auto r_n = q.cols();
        Matrix r_total = Matrix::Identity(r_n, r_n);
        // Two Cholesky-QR passes recover orthonormality to round-off.
        for (int pass = 0; pass < 2; ++pass) {
            const Matrix g = q.transpose() * w.asDiagonal() * q;
            Eigen::LLT<Matrix> llt(g);
            require(llt.info() == Eigen::Success, ErrorCategory::numeric,
                    "basis of mode " + std::to_string(n) + " is rank deficient; remove modes");
            const Matrix r = llt.matrixU();
            const Vector d = r.diagonal().cwiseAbs();
            require(d.minCoeff() > 1e-12 * d.maxCoeff(), ErrorCategory::numeric,
                    "basis of mode " + std::to_string(n) + " is rank deficient; remove modes");
            q = r.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(q);
            r_total = r * r_total;
        }
        out.bases[n] = std::move(q);
        out.core = mode_product(out.core, r_total, n);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view scheme_name(DerivativeScheme s) noexcept {
    switch (s) {
    case DerivativeScheme::exact: return "exact";
    case DerivativeScheme::fd1: return "fd1";
    case DerivativeScheme::fd2: return "fd2";
    case DerivativeScheme::central: return "central";
    }
    return "unknown";
}

DerivativeScheme parse_scheme(std::string_view name) {
    if (name == "exact") return DerivativeScheme::exact;
    if (name == "fd1") return DerivativeScheme::fd1;
    if (name == "fd2") return DerivativeScheme::fd2;
    if (name == "central") return DerivativeScheme::central;
    fail(ErrorCategory::config,
         "unknown derivative scheme '" + std::string(name) + "' (expected exact|fd1|fd2|central)");
}

DerivativeEstimate estimate_vdot(std::span<const TimedSnapshot> window, DerivativeScheme scheme,
                                 double dt) {
    require(dt > 0.0, ErrorCategory::range, "finite differences need dt > 0");
    require(scheme != DerivativeScheme::exact, ErrorCategory::config,
            "exact derivatives are not estimated from snapshots");
    const Index needed = scheme == DerivativeScheme::fd1 ? 2 : 3;
    require(window.size() >= needed, ErrorCategory::range,
            std::string("insufficient history for ") + std::string(scheme_name(scheme)) + ": need " +
                std::to_string(needed) + " snapshots, have " + std::to_string(window.size()));
    const auto last = window.last(needed);
    for (Index i = 1; i < last.size(); ++i) {
        const double gap = last[i].time - last[i - 1].time;
        require(gap > 0.0, ErrorCategory::range, "snapshot times must be strictly increasing");
        require(std::abs(gap - dt) <= 1e-6 * dt, ErrorCategory::range,
                "snapshot spacing does not match dt");
    }
    DerivativeEstimate est;
    est.scheme = scheme;
    est.snapshots_used = needed;
    switch (scheme) {
    case DerivativeScheme::fd1:
        est.value = last[1].value - last[0].value;
        est.value *= 1.0 / dt;
        est.time = last[1].time;
        break;
    case DerivativeScheme::fd2:
        est.value = 3.0 * last[2].value;
        est.value.axpy(-4.0, last[1].value);
        est.value += last[0].value;
        est.value *= 0.5 / dt;
        est.time = last[2].time;
        break;
    case DerivativeScheme::central:
        est.value = last[2].value - last[0].value;
        est.value *= 0.5 / dt;
        est.time = last[1].time;
        break;
    case DerivativeScheme::exact: break;
    }
    return est;
}

} // namespace tdb
