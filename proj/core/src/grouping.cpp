#include "tdb/grouping.hpp"

#include "tdb/error.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace tdb {

GroupSpec::GroupSpec(std::vector<std::vector<Index>> groups) : groups_(std::move(groups)) {
    for (auto& g : groups_) std::sort(g.begin(), g.end());
}

GroupSpec GroupSpec::identity(Index d) {
    std::vector<std::vector<Index>> g;
    for (Index a = 0; a < d; ++a) g.push_back({a});
    return GroupSpec(std::move(g));
}

GroupSpec GroupSpec::parse(std::string_view text) {
    std::vector<std::vector<Index>> groups;
    std::vector<Index>* current = nullptr;
    int depth = 0;
    std::size_t i = 0;
    auto bad = [&](const std::string& why) {
        fail(ErrorCategory::config, "invalid groups '" + std::string(text) + "': " + why);
    };
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
            ++i;
        } else if (c == '[') {
            if (++depth > 2) bad("nested too deep");
            if (depth == 2) {
                groups.emplace_back();
                current = &groups.back();
            }
            ++i;
        } else if (c == ']') {
            if (depth == 2) current = nullptr;
            if (--depth < 0) bad("unbalanced brackets");
            ++i;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            if (depth != 2 || current == nullptr) bad("axis number outside a group");
            Index v = 0;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
                v = v * 10 + static_cast<Index>(text[i++] - '0');
            if (v == 0) bad("axes are numbered from 1");
            current->push_back(v - 1);
        } else {
            bad(std::string("unexpected character '") + c + "'");
        }
    }
    if (depth != 0) bad("unbalanced brackets");
    if (groups.empty()) bad("no groups");
    return GroupSpec(std::move(groups));
}

Index GroupSpec::axes() const noexcept {
    Index n = 0;
    for (const auto& g : groups_) n += g.size();
    return n;
}

bool GroupSpec::is_identity() const noexcept {
    for (Index i = 0; i < groups_.size(); ++i)
        if (groups_[i].size() != 1 || groups_[i][0] != i) return false;
    return true;
}

std::string GroupSpec::to_string() const {
    std::ostringstream os;
    os << '[';
    for (Index i = 0; i < groups_.size(); ++i) {
        os << (i ? "," : "") << '[';
        for (Index j = 0; j < groups_[i].size(); ++j) os << (j ? "," : "") << groups_[i][j] + 1;
        os << ']';
    }
    os << ']';
    return os.str();
}

void GroupSpec::validate(std::span<const Index> dims) const {
    require(!groups_.empty(), ErrorCategory::config, "group spec is empty");
    std::vector<int> seen(dims.size(), 0);
    for (const auto& g : groups_) {
        require(!g.empty(), ErrorCategory::config, "group spec has an empty group");
        for (Index a : g) {
            require(a < dims.size(), ErrorCategory::config,
                    "group spec names axis " + std::to_string(a + 1) + " of a " +
                        std::to_string(dims.size()) + "-axis tensor");
            require(++seen[a] == 1, ErrorCategory::config,
                    "axis " + std::to_string(a + 1) + " appears in more than one group");
        }
    }
    require(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }), ErrorCategory::config,
            "group spec " + to_string() + " does not cover every axis");
}

Shape GroupSpec::fused_dims(std::span<const Index> dims) const {
    validate(dims);
    Shape out;
    for (const auto& g : groups_) {
        Index n = 1;
        for (Index a : g) n *= dims[a];
        out.push_back(n);
    }
    return out;
}

namespace {

// stride[a]: contribution of original axis a to its group's fused index;
// group_of[a]: which fused mode it lands in.
struct FuseMap {
    std::vector<Index> stride;
    std::vector<Index> group_of;
    Shape fused;
};

FuseMap build_map(std::span<const Index> dims, const GroupSpec& spec) {
    FuseMap m;
    m.fused = spec.fused_dims(dims);
    m.stride.assign(dims.size(), 0);
    m.group_of.assign(dims.size(), 0);
    for (Index g = 0; g < spec.order(); ++g) {
        Index s = 1;
        for (Index a : spec.groups()[g]) {
            m.stride[a] = s;
            m.group_of[a] = g;
            s *= dims[a];
        }
    }
    return m;
}

// Calls f(source_linear, fused_linear) for every element.
template <typename F>
void for_each_pair(std::span<const Index> dims, const FuseMap& m, F&& f) {
    std::vector<Index> mode_stride(m.fused.size(), 1);
    for (Index g = 1; g < m.fused.size(); ++g) mode_stride[g] = mode_stride[g - 1] * m.fused[g - 1];
    std::vector<Index> axis_step(dims.size());
    for (Index a = 0; a < dims.size(); ++a) axis_step[a] = m.stride[a] * mode_stride[m.group_of[a]];

    const Index total = shape_size(dims);
    std::vector<Index> idx(dims.size(), 0);
    Index target = 0;
    for (Index lin = 0; lin < total; ++lin) {
        f(lin, target);
        for (Index a = 0; a < dims.size(); ++a) {
            target += axis_step[a];
            if (++idx[a] < dims[a]) break;
            target -= axis_step[a] * dims[a];
            idx[a] = 0;
        }
    }
}

} // namespace

ModeWeights fuse_weights(const ModeWeights& weights, const GroupSpec& spec) {
    const Shape dims = weights.dims();
    spec.validate(dims);
    std::vector<Vector> out;
    for (const auto& g : spec.groups()) {
        Vector w = Vector::Ones(1);
        for (Index a : g) {
            const Vector& wa = weights[a];
            Vector next(w.size() * wa.size());
            for (Eigen::Index j = 0; j < wa.size(); ++j) next.segment(j * w.size(), w.size()) = w * wa[j];
            w = std::move(next);
        }
        out.push_back(std::move(w));
    }
    return ModeWeights(std::move(out));
}

DenseTensor fuse_tensor(const DenseTensor& v, const GroupSpec& spec) {
    const FuseMap m = build_map(v.dims(), spec);
    DenseTensor out(m.fused);
    const double* src = v.data();
    double* dst = out.data();
    for_each_pair(v.dims(), m, [&](Index s, Index t) { dst[t] = src[s]; });
    return out;
}

FusedTensor fuse(const DenseTensor& v, const ModeWeights& weights, const GroupSpec& spec) {
    require(weights.matches(v.dims()), ErrorCategory::shape, "fuse: weights do not match tensor dims");
    return {fuse_tensor(v, spec), fuse_weights(weights, spec)};
}

DenseTensor unfuse(const DenseTensor& t, const GroupSpec& spec, std::span<const Index> original_dims) {
    const FuseMap m = build_map(original_dims, spec);
    require(t.dims() == m.fused, ErrorCategory::shape, "unfuse: tensor dims do not match the group spec");
    DenseTensor out(Shape(original_dims.begin(), original_dims.end()));
    const double* src = t.data();
    double* dst = out.data();
    for_each_pair(original_dims, m, [&](Index s, Index f) { dst[s] = src[f]; });
    return out;
}

GroupedStream::GroupedStream(std::shared_ptr<const SnapshotStream> inner, GroupSpec spec)
    : inner_(std::move(inner)), spec_(std::move(spec)) {
    require(inner_ != nullptr, ErrorCategory::config, "grouped stream needs a source");
    dims_ = spec_.fused_dims(inner_->dims());
    weights_ = std::make_shared<const ModeWeights>(fuse_weights(*inner_->weights(), spec_));
}

} // namespace tdb
