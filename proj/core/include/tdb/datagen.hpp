#pragma once

// Streaming snapshot sources: the analytic Runge function, a stream of
// exactly known multirank, and snapshots read from raw-tensor files.

#include "tdb/evolve.hpp"
#include "tdb/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tdb {

/// Sequential source of snapshots V(t_k), t_k = t0 + k·Δt.
class SnapshotStream {
public:
    virtual ~SnapshotStream() = default;

    [[nodiscard]] virtual Shape dims() const = 0;
    [[nodiscard]] virtual std::shared_ptr<const ModeWeights> weights() const = 0;
    [[nodiscard]] virtual double dt() const = 0;
    [[nodiscard]] virtual double start_time() const = 0;
    /// Number of snapshots the stream will emit.
    [[nodiscard]] virtual Index length() const = 0;
    [[nodiscard]] virtual bool has_exact_derivative() const { return false; }
    /// Whether a consumer may read ahead of the current step (offline mode).
    [[nodiscard]] virtual bool has_lookahead() const { return false; }

    /// Snapshot k, 0 <= k < length().
    [[nodiscard]] virtual DenseTensor snapshot(Index k) const = 0;
    /// Exact V̇(t); throws config unless has_exact_derivative().
    [[nodiscard]] virtual DenseTensor derivative(double t) const;

    [[nodiscard]] double time_at(Index k) const {
        return start_time() + static_cast<double>(k) * dt();
    }

    /// Cursor interface: the next snapshot, or nullopt at the end.
    std::optional<TimedSnapshot> next();
    [[nodiscard]] Index cursor() const noexcept { return cursor_; }
    void rewind() noexcept { cursor_ = 0; }

private:
    Index cursor_ = 0;
};

// ---------------------------------------------------------------------------

struct RungeParams {
    Index grid_points = 126;  ///< per axis
    double lo = -3.14159265358979323846;
    double hi = 3.14159265358979323846;
    double dt = 5e-3;
    double alpha = 0.5;
    double t0 = 0.0;
    double t_end = 2.0;
};

/// a(t) = 1 − 0.5·exp(−α(t−1)²)
double runge_a(double t, double alpha);
/// ȧ(t) = α(t−1)·exp(−α(t−1)²)
double runge_a_dot(double t, double alpha);

/// f(x, t) = 1 / (a(t)² + x₁² + x₂² + x₃²) on a uniform tensor grid with
/// trapezoid weights; ∂f/∂t = −2 a ȧ f².
class RungeStream final : public SnapshotStream {
public:
    explicit RungeStream(RungeParams params);

    Shape dims() const override;
    std::shared_ptr<const ModeWeights> weights() const override { return weights_; }
    double dt() const override { return params_.dt; }
    double start_time() const override { return params_.t0; }
    Index length() const override { return length_; }
    bool has_exact_derivative() const override { return true; }
    bool has_lookahead() const override { return true; }

    DenseTensor snapshot(Index k) const override { return evaluate(time_at(k)); }
    DenseTensor derivative(double t) const override;
    [[nodiscard]] DenseTensor evaluate(double t) const;
    [[nodiscard]] const std::vector<double>& grid() const noexcept { return grid_; }

private:
    RungeParams params_;
    std::vector<double> grid_;
    std::vector<double> radius2_; // x₁² + x₂² + x₃² per grid point
    std::shared_ptr<const ModeWeights> weights_;
    Index length_ = 0;
};

RungeStream runge_stream(Index grid_points_per_axis, double lo, double hi, double dt, double alpha,
                         double t_end = 2.0);

// ---------------------------------------------------------------------------

struct ExactRankParams {
    Shape dims;
    MultiRank ranks;
    std::uint64_t seed = 1;
    double dt = 1e-3;
    Index steps = 500;          ///< snapshots emitted = steps + 1
    double rotation_rate = 0.2; ///< spectral norm of each skew generator
    double core_variation = 0.02;
    double core_frequency = 1.0;
};

/// V(t) = 𝒯(t) ×₁ U⁽¹⁾(t) ×₂ … with U⁽ⁿ⁾(t) = W^{-1/2} exp(tKₙ) Q̃ₙ (Kₙ skew,
/// Q̃ₙ orthonormal) and 𝒯(t) = 𝒯₀ + c·sin(ωt)·𝒯₁. Weights: trapezoid on [0,1].
class ExactRankStream final : public SnapshotStream {
public:
    explicit ExactRankStream(ExactRankParams params);

    Shape dims() const override { return params_.dims; }
    std::shared_ptr<const ModeWeights> weights() const override { return weights_; }
    double dt() const override { return params_.dt; }
    double start_time() const override { return 0.0; }
    Index length() const override { return params_.steps + 1; }
    bool has_exact_derivative() const override { return true; }
    bool has_lookahead() const override { return true; }

    DenseTensor snapshot(Index k) const override { return evaluate(time_at(k)); }
    DenseTensor derivative(double t) const override;
    [[nodiscard]] DenseTensor evaluate(double t) const;

    /// Ground-truth factors at time t.
    [[nodiscard]] Matrix basis(Index n, double t) const;
    [[nodiscard]] Matrix basis_rate(Index n, double t) const;
    [[nodiscard]] DenseTensor core(double t) const;
    [[nodiscard]] DenseTensor core_rate(double t) const;

private:
    ExactRankParams params_;
    std::shared_ptr<const ModeWeights> weights_;
    std::vector<Matrix> frames_;     // Q̃ₙ, Euclidean-orthonormal
    std::vector<Matrix> generators_; // Kₙ, skew
    DenseTensor core0_, core1_;
};

// ---------------------------------------------------------------------------

/// Parsed snapshot manifest (plain `key = value` lines, `#` comments):
///   dims = 16 16 8
///   dt = 0.01
///   t0 = 0
///   weights = unit | trapezoid lo hi | trapezoid lo1 hi1 lo2 hi2 ...
///   lookahead = false
///   snapshot = relative/or/absolute/path.tdbt   (one line per snapshot)
struct Manifest {
    Shape dims;
    double dt = 0.0;
    double t0 = 0.0;
    std::string weights = "unit";
    bool lookahead = false;
    std::vector<std::filesystem::path> files;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
/// Weight vectors described by a manifest `weights` value.
ModeWeights parse_weight_spec(const std::string& spec, std::span<const Index> dims);

class FileStream final : public SnapshotStream {
public:
    explicit FileStream(const std::filesystem::path& manifest_path);
    FileStream(Manifest manifest, std::filesystem::path base_dir);

    Shape dims() const override { return manifest_.dims; }
    std::shared_ptr<const ModeWeights> weights() const override { return weights_; }
    double dt() const override { return manifest_.dt; }
    double start_time() const override { return manifest_.t0; }
    Index length() const override { return manifest_.files.size(); }
    bool has_lookahead() const override { return manifest_.lookahead; }

    /// Throws io naming the file when missing, short or of the wrong dims.
    DenseTensor snapshot(Index k) const override;

private:
    Manifest manifest_;
    std::filesystem::path base_dir_;
    std::shared_ptr<const ModeWeights> weights_;
};

} // namespace tdb
