#pragma once

// Fusing groups of axes of a d-dimensional snapshot into single modes so a
// p-order decomposition (p <= d) can be run on it. Within a group, member
// axes are ordered by increasing original index, first member fastest.

#include "tdb/datagen.hpp"
#include "tdb/tensor.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace tdb {

/// Partition of the axes {0..d-1} into p ordered, disjoint, nonempty groups.
class GroupSpec {
public:
    GroupSpec() = default;
    explicit GroupSpec(std::vector<std::vector<Index>> groups);

    /// Singleton groups {0},{1},…,{d-1}.
    static GroupSpec identity(Index d);
    /// Parse `[[1,2],[3]]` (1-based axis numbers).
    static GroupSpec parse(std::string_view text);

    [[nodiscard]] const std::vector<std::vector<Index>>& groups() const noexcept { return groups_; }
    [[nodiscard]] Index order() const noexcept { return groups_.size(); }
    [[nodiscard]] Index axes() const noexcept;
    [[nodiscard]] bool is_identity() const noexcept;
    /// 1-based text form accepted by parse().
    [[nodiscard]] std::string to_string() const;

    /// Throws config unless the groups partition exactly the axes of dims.
    void validate(std::span<const Index> dims) const;
    [[nodiscard]] Shape fused_dims(std::span<const Index> dims) const;

    friend bool operator==(const GroupSpec&, const GroupSpec&) = default;

private:
    std::vector<std::vector<Index>> groups_;
};

struct FusedTensor {
    DenseTensor tensor;
    ModeWeights weights;
};

/// Fused weights are products of member-axis weights under the fused index.
ModeWeights fuse_weights(const ModeWeights& weights, const GroupSpec& spec);
DenseTensor fuse_tensor(const DenseTensor& v, const GroupSpec& spec);
FusedTensor fuse(const DenseTensor& v, const ModeWeights& weights, const GroupSpec& spec);
DenseTensor unfuse(const DenseTensor& t, const GroupSpec& spec, std::span<const Index> original_dims);

/// Presents a d-dimensional stream as its fused p-order image.
class GroupedStream final : public SnapshotStream {
public:
    GroupedStream(std::shared_ptr<const SnapshotStream> inner, GroupSpec spec);

    Shape dims() const override { return dims_; }
    std::shared_ptr<const ModeWeights> weights() const override { return weights_; }
    double dt() const override { return inner_->dt(); }
    double start_time() const override { return inner_->start_time(); }
    Index length() const override { return inner_->length(); }
    bool has_exact_derivative() const override { return inner_->has_exact_derivative(); }
    bool has_lookahead() const override { return inner_->has_lookahead(); }

    DenseTensor snapshot(Index k) const override { return fuse_tensor(inner_->snapshot(k), spec_); }
    DenseTensor derivative(double t) const override { return fuse_tensor(inner_->derivative(t), spec_); }

    [[nodiscard]] const GroupSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] Shape source_dims() const { return inner_->dims(); }

private:
    std::shared_ptr<const SnapshotStream> inner_;
    GroupSpec spec_;
    Shape dims_;
    std::shared_ptr<const ModeWeights> weights_;
};

} // namespace tdb
