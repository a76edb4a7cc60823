// Copyright 2026 The crfseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "crfseg/errors.hpp"
#include "crfseg/filtering.hpp"
#include "crfseg/parallel.hpp"

namespace crfseg {
namespace {

// Open-addressing table from lattice keys (first d coordinates of a point in
// the (d+1)-dimensional hyperplane; the last coordinate is minus their sum)
// to dense vertex indices.
class LatticeHashTable {
public:
    explicit LatticeHashTable(std::size_t key_size, std::size_t expected)
        : key_size_(key_size) {
        std::size_t capacity = 64;
        while (capacity < 2 * expected) capacity <<= 1;
        slots_.assign(capacity, -1);
    }

    std::size_t size() const noexcept { return count_; }
    const std::int32_t* key(std::size_t index) const noexcept { return keys_.data() + index * key_size_; }

    std::int32_t find(const std::int32_t* key) const noexcept {
        std::size_t slot = hash(key) & (slots_.size() - 1);
        while (true) {
            const std::int32_t index = slots_[slot];
            if (index < 0) return -1;
            if (std::equal(key, key + key_size_, keys_.data() + static_cast<std::size_t>(index) * key_size_)) return index;
            slot = (slot + 1) & (slots_.size() - 1);
        }
    }

    std::int32_t insert(const std::int32_t* key) {
        if (2 * (count_ + 1) > slots_.size()) grow();
        std::size_t slot = hash(key) & (slots_.size() - 1);
        while (true) {
            const std::int32_t index = slots_[slot];
            if (index < 0) {
                slots_[slot] = static_cast<std::int32_t>(count_);
                keys_.insert(keys_.end(), key, key + key_size_);
                return static_cast<std::int32_t>(count_++);
            }
            if (std::equal(key, key + key_size_, keys_.data() + static_cast<std::size_t>(index) * key_size_)) return index;
            slot = (slot + 1) & (slots_.size() - 1);
        }
    }

private:
    std::size_t hash(const std::int32_t* key) const noexcept {
        std::uint64_t h = 0;
        for (std::size_t i = 0; i < key_size_; ++i) {
            h = (h + static_cast<std::uint32_t>(key[i])) * 2531011ULL;
        }
        return static_cast<std::size_t>(h ^ (h >> 29));
    }

    void grow() {
        std::vector<std::int32_t> slots(slots_.size() * 2, -1);
        for (std::size_t index = 0; index < count_; ++index) {
            std::size_t slot = hash(key(index)) & (slots.size() - 1);
            while (slots[slot] >= 0) slot = (slot + 1) & (slots.size() - 1);
            slots[slot] = static_cast<std::int32_t>(index);
        }
        slots_.swap(slots);
    }

    std::size_t key_size_;
    std::size_t count_ = 0;
    std::vector<std::int32_t> keys_;
    std::vector<std::int32_t> slots_;
};

// Kd-tree over lattice vertices. Construction reorders the vertices so
// every node covers a contiguous index range; forward queries then skip whole
// subtrees of lower indices, and each node keeps a bounding box for pruning.
class VertexTree {
public:
    // Returns the new-to-old vertex order.
    std::vector<std::int32_t> build(const std::vector<double>& positions, std::size_t dim) {
        dim_ = dim;
        const std::size_t count = dim == 0 ? 0 : positions.size() / dim;
        std::vector<std::int32_t> order(count);
        for (std::size_t i = 0; i < count; ++i) order[i] = static_cast<std::int32_t>(i);
        nodes_.clear();
        boxes_.clear();
        if (count > 0) build(positions, order, 0, count);
        return order;
    }

    // Calls visit(w, squared elevated distance) for every w > v whose exact
    // integer distance to v is within cutoff. positions and elevated are in
    // tree order; radius_sq is a slightly generous metric bound of cutoff.
    template <typename Visit>
    void forward(std::size_t v, const double* positions, const std::int32_t* elevated, double radius_sq,
                 std::int64_t cutoff, Visit&& visit) const {
        if (nodes_.empty()) return;
        const std::size_t d1 = dim_ + 1;
        const double* q = positions + v * dim_;
        const std::int32_t* kv = elevated + v * d1;
        std::int32_t stack[128];
        std::size_t top = 0;
        stack[top++] = 0;
        while (top > 0) {
            const std::size_t id = static_cast<std::size_t>(stack[--top]);
            const Node& node = nodes_[id];
            if (node.end <= v + 1) continue;
            const double* box = boxes_.data() + id * 2 * dim_;
            double gap = 0.0;
            for (std::size_t a = 0; a < dim_; ++a) {
                const double t = std::max({0.0, box[a] - q[a], q[a] - box[dim_ + a]});
                gap += t * t;
            }
            if (gap > radius_sq) continue;
            if (node.left < 0) {
                for (std::size_t w = std::max<std::size_t>(node.begin, v + 1); w < node.end; ++w) {
                    const std::int32_t* kw = elevated + w * d1;
                    std::int64_t dist = 0;
                    for (std::size_t k = 0; k < d1; ++k) {
                        const std::int64_t t = static_cast<std::int64_t>(kv[k]) - kw[k];
                        dist += t * t;
                    }
                    if (dist <= cutoff) visit(w, dist);
                }
                continue;
            }
            stack[top++] = node.right;
            stack[top++] = node.left;
        }
    }

private:
    static constexpr std::size_t kLeafSize = 16;

    struct Node {
        std::size_t begin;
        std::size_t end;
        std::int32_t left = -1;
        std::int32_t right = -1;
    };

    std::int32_t build(const std::vector<double>& positions, std::vector<std::int32_t>& order, std::size_t begin,
                       std::size_t end) {
        const auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back({begin, end});
        const std::size_t box_at = boxes_.size();
        boxes_.resize(box_at + 2 * dim_);
        const auto point = [&](std::int32_t i) { return positions.data() + static_cast<std::size_t>(i) * dim_; };
        std::size_t axis = 0;
        double widest = -1.0;
        for (std::size_t a = 0; a < dim_; ++a) {
            double lo = point(order[begin])[a];
            double hi = lo;
            for (std::size_t i = begin + 1; i < end; ++i) {
                const double v = point(order[i])[a];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            boxes_[box_at + a] = lo;
            boxes_[box_at + dim_ + a] = hi;
            if (hi - lo > widest) {
                widest = hi - lo;
                axis = a;
            }
        }
        if (end - begin <= kLeafSize) return id;
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(mid),
                         order.begin() + static_cast<std::ptrdiff_t>(end), [&](std::int32_t a, std::int32_t b) {
                             const double pa = point(a)[axis];
                             const double pb = point(b)[axis];
                             return pa < pb || (pa == pb && a < b);
                         });
        const std::int32_t left = build(positions, order, begin, mid);
        const std::int32_t right = build(positions, order, mid, end);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    std::size_t dim_ = 0;
    std::vector<Node> nodes_;
    std::vector<double> boxes_;  // lo then hi, dim_ each
};

constexpr std::size_t kBlockSize = 2048;

// Equalized weights: target per-axis variance and support radius, in
// lattice units (feature units times resolution).
constexpr double kEqualizedVariance = 0.24;
constexpr double kEqualizedRadius = 1.8;
constexpr std::size_t kMaxEqualizedDim = 5;

std::size_t moment_count(std::size_t d) { return 1 + d + d * (d + 1) / 2; }

// Feature-unit coordinates of an elevated vector.
void project(const double* elevated, std::size_t d, double inv_std_dev, double* out) {
    double prefix = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        prefix += elevated[k];
        out[k] = (prefix - static_cast<double>(k + 1) * elevated[k + 1]) /
                 (std::sqrt(static_cast<double>((k + 1) * (k + 2))) * inv_std_dev);
    }
}

// In-place Cholesky solve of a symmetric positive definite system; false
// when a pivot collapses.
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
        if (!(diag > 1e-14)) return false;
        diag = std::sqrt(diag);
        a[j * n + j] = diag;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = v / diag;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
        b[i] = v / a[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double v = b[i];
        for (std::size_t k = i + 1; k < n; ++k) v -= a[k * n + i] * b[k];
        b[i] = v / a[i * n + i];
    }
    return true;
}

// Lattice points of the (d+1)-dimensional hyperplane lattice within a
// squared radius of the origin, shortest first.
struct LatticeBall {
    std::vector<std::int32_t> coords;  // d+1 each
    std::vector<double> norm;
};

const LatticeBall& lattice_ball(std::size_t d, std::int64_t limit_sq) {
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, std::int64_t>, std::unique_ptr<LatticeBall>> cache;
    const std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[{d, limit_sq}];
    if (slot) return *slot;

    const std::size_t d1 = d + 1;
    const auto di = static_cast<std::int32_t>(d);
    // Breadth-first over the unit moves (+d on one axis, -1 on the others).
    std::vector<std::int32_t> found;
    LatticeHashTable seen(d1, 1024);
    std::vector<std::int32_t> next(d1, 0);
    seen.insert(next.data());
    for (std::size_t head = 0; head < seen.size(); ++head) {
        std::int64_t norm = 0;
        for (std::size_t k = 0; k < d1; ++k) norm += static_cast<std::int64_t>(seen.key(head)[k]) * seen.key(head)[k];
        if (norm > limit_sq) continue;
        found.insert(found.end(), seen.key(head), seen.key(head) + d1);
        for (std::size_t j = 0; j < d1; ++j) {
            for (const int sign : {-1, 1}) {
                const std::int32_t* cur = seen.key(head);
                for (std::size_t k = 0; k < d1; ++k) next[k] = cur[k] - sign;
                next[j] = cur[j] + sign * di;
                seen.insert(next.data());
            }
        }
    }
    const std::size_t count = found.size() / d1;
    std::vector<double> norm(count);
    std::vector<std::size_t> order(count);
    for (std::size_t c = 0; c < count; ++c) {
        order[c] = c;
        double sum = 0.0;
        for (std::size_t k = 0; k < d1; ++k) sum += static_cast<double>(found[c * d1 + k]) * found[c * d1 + k];
        norm[c] = std::sqrt(sum);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return norm[a] < norm[b] || (norm[a] == norm[b] && a < b);
    });
    slot = std::make_unique<LatticeBall>();
    slot->coords.resize(found.size());
    slot->norm.resize(count);
    for (std::size_t c = 0; c < count; ++c) {
        std::copy_n(found.data() + order[c] * d1, d1, slot->coords.data() + c * d1);
        slot->norm[c] = norm[order[c]];
    }
    return *slot;
}

struct Simplex {
    std::vector<double> elevated;
    std::vector<std::int32_t> rem0;
    std::vector<std::int32_t> rank;
    std::vector<double> bary;
};

// Enclosing simplex of the point with elevated coordinates s.elevated.
void locate(Simplex& s, std::size_t d) {
    const std::size_t d1 = d + 1;
    const double down_factor = 1.0 / static_cast<double>(d1);
    const auto d1i = static_cast<std::int32_t>(d1);
    const auto di = static_cast<std::int32_t>(d);
    auto& elevated = s.elevated;
    auto& rem0 = s.rem0;
    auto& rank = s.rank;
    auto& bary = s.bary;

    // Nearest remainder-0 lattice point, then fix the coordinate sum.
    std::int32_t sum = 0;
    for (std::size_t k = 0; k < d1; ++k) {
        const double v = down_factor * elevated[k];
        const double up = std::ceil(v) * static_cast<double>(d1);
        const double down = std::floor(v) * static_cast<double>(d1);
        rem0[k] = static_cast<std::int32_t>(up - elevated[k] < elevated[k] - down ? up : down);
        sum += rem0[k];
    }
    sum /= d1i;

    std::fill(rank.begin(), rank.end(), 0);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a + 1; b < d1; ++b) {
            if (elevated[a] - rem0[a] < elevated[b] - rem0[b]) {
                ++rank[a];
            } else {
                ++rank[b];
            }
        }
    }
    if (sum > 0) {
        for (std::size_t k = 0; k < d1; ++k) {
            if (rank[k] >= d1i - sum) {
                rem0[k] -= d1i;
                rank[k] += sum - d1i;
            } else {
                rank[k] += sum;
            }
        }
    } else if (sum < 0) {
        for (std::size_t k = 0; k < d1; ++k) {
            if (rank[k] < -sum) {
                rem0[k] += d1i;
                rank[k] += d1i + sum;
            } else {
                rank[k] += sum;
            }
        }
    }

    std::fill(bary.begin(), bary.end(), 0.0);
    for (std::size_t k = 0; k < d1; ++k) {
        const double v = (elevated[k] - rem0[k]) * down_factor;
        bary[static_cast<std::size_t>(di - rank[k])] += v;
        bary[static_cast<std::size_t>(di + 1 - rank[k])] -= v;
    }
    bary[0] += 1.0 + bary[d1];
}

}  // namespace

struct PermutohedralLattice::Impl {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t vertices = 0;
    int threads = 1;
    LatticeInterpolation interpolation = LatticeInterpolation::barycentric;
    double resolution = 1.0;
    double inv_std_dev = 1.0;
    double blur_var = 1.0;
    double gain = 1.0;  // blur_var^(-d/2)
    std::int64_t cutoff = 0;  // on squared elevated distance
    std::vector<float> kernel_table;  // by squared elevated distance
    // point -> vertices (CSR)
    std::vector<std::size_t> point_start;
    std::vector<std::int32_t> point_vertex;
    std::vector<double> point_weight;
    // d+1 elevated coordinates and d feature coordinates per vertex, in
    // tree order
    std::vector<std::int32_t> elevated;
    std::vector<double> positions;
    VertexTree tree;
    // vertex -> splatting points (CSR)
    std::vector<std::size_t> splat_start;
    std::vector<std::int32_t> splat_point;
    std::vector<double> splat_weight;
    // vertex -> blur neighbors with a higher index (CSR)
    std::vector<std::size_t> blur_start;
    std::vector<std::int32_t> blur_vertex;
    std::vector<float> blur_weight;
    std::vector<double> self_weight;

    void configure(std::size_t dim, double res, LatticeInterpolation mode, double truncation);
    void embed(const FeatureField& features, bool solve_weights);
    std::size_t estimate_pairs() const;
    void build_splat_index();
    void build_blur();
    void compute_self_weights();

    std::int64_t distance(std::int32_t a, std::int32_t b) const {
        const std::size_t d1 = d + 1;
        const std::int32_t* ka = elevated.data() + static_cast<std::size_t>(a) * d1;
        const std::int32_t* kb = elevated.data() + static_cast<std::size_t>(b) * d1;
        std::int64_t sum = 0;
        for (std::size_t k = 0; k < d1; ++k) {
            const std::int64_t t = static_cast<std::int64_t>(ka[k]) - kb[k];
            sum += t * t;
        }
        return sum;
    }
    // Generous metric bound of the integer cutoff.
    double radius_sq() const { return (static_cast<double>(cutoff) + 0.5) / (inv_std_dev * inv_std_dev); }
    float kernel(std::int64_t dist) const {
        return dist > cutoff ? 0.0F : kernel_table[static_cast<std::size_t>(dist)];
    }
};

void PermutohedralLattice::Impl::configure(std::size_t dim, double res, LatticeInterpolation mode,
                                           double truncation) {
    d = dim;
    resolution = res;
    interpolation = mode;
    const std::size_t d1 = d + 1;
    // Embedding into the hyperplane sum(x) = 0 of R^(d+1) is an isometry
    // scaled by inv_std_dev.
    inv_std_dev = res * std::sqrt(2.0 / 3.0) * static_cast<double>(d1);
    // Variance each interpolation side adds per axis: 1/8 lattice units for
    // barycentric weights on average, kEqualizedVariance exactly otherwise.
    const double side_var = mode == LatticeInterpolation::equalized ? kEqualizedVariance : 0.125;
    blur_var = 1.0 - 2.0 * side_var / (res * res);
    gain = std::pow(blur_var, -static_cast<double>(d) / 2.0);
    const double cutoff_sq = -2.0 * blur_var * std::log(truncation);
    cutoff = static_cast<std::int64_t>(std::floor(cutoff_sq * inv_std_dev * inv_std_dev));
    kernel_table.resize(static_cast<std::size_t>(cutoff) + 1);
    const double inv_sq = 1.0 / (inv_std_dev * inv_std_dev);
    for (std::size_t k = 0; k < kernel_table.size(); ++k) {
        kernel_table[k] = static_cast<float>(std::exp(-0.5 * static_cast<double>(k) * inv_sq / blur_var));
    }
}

void PermutohedralLattice::Impl::embed(const FeatureField& features, bool solve_weights) {
    n = features.pixel_count();
    const std::size_t d1 = d + 1;
    const auto d1i = static_cast<std::int32_t>(d1);
    const auto di = static_cast<std::int32_t>(d);
    std::vector<double> scale(d);
    for (std::size_t k = 0; k < d; ++k) {
        scale[k] = inv_std_dev / std::sqrt(static_cast<double>((k + 1) * (k + 2)));
    }
    const bool equalized = interpolation == LatticeInterpolation::equalized;

    // Equalized support: every lattice point within radius + the farthest
    // simplex vertex of the remainder-0 corner is a candidate.
    const LatticeBall* offsets_by_norm = nullptr;
    const double radius = kEqualizedRadius / resolution;
    const double target_var = kEqualizedVariance / (resolution * resolution);
    if (equalized) {
        double reach = 0.0;
        for (std::size_t r = 1; r < d1; ++r) {
            const double rr = static_cast<double>(r);
            reach = std::max(reach, std::sqrt(rr * (static_cast<double>(d1) - rr) * static_cast<double>(d1)));
        }
        const double limit = radius * inv_std_dev + reach;
        offsets_by_norm = &lattice_ball(d, static_cast<std::int64_t>(std::ceil(limit * limit)));
    }
    const std::size_t candidate_count = offsets_by_norm ? offsets_by_norm->norm.size() : 0;
    const std::int32_t* candidates = offsets_by_norm ? offsets_by_norm->coords.data() : nullptr;
    const double* candidate_norm = offsets_by_norm ? offsets_by_norm->norm.data() : nullptr;
    const double radius_elevated = radius * inv_std_dev;

    LatticeHashTable table(d, n * 2);
    point_start.assign(n + 1, 0);
    point_vertex.clear();
    point_weight.clear();
    point_vertex.reserve(n * d1);
    point_weight.reserve(n * d1);

    Simplex simplex{std::vector<double>(d1), std::vector<std::int32_t>(d1), std::vector<std::int32_t>(d1),
                    std::vector<double>(d1 + 1)};
    std::vector<std::int32_t> key(d);
    const std::size_t nc = moment_count(d);
    std::vector<double> diff(d1);
    std::vector<double> local(d);
    std::vector<std::size_t> chosen;
    std::vector<double> offsets;  // d per chosen candidate
    std::vector<double> prior;
    std::vector<double> basis;    // nc per chosen candidate
    std::vector<double> system(nc * nc);
    std::vector<double> rhs(nc);
    std::vector<double> weight;
    std::vector<char> active;

    for (std::size_t i = 0; i < n; ++i) {
        const auto f = features.pixel(i);
        auto& elevated = simplex.elevated;
        double sm = 0.0;
        for (std::size_t j = d; j > 0; --j) {
            const double cf = f[j - 1] * scale[j - 1];
            elevated[j] = sm - static_cast<double>(j) * cf;
            sm += cf;
        }
        elevated[0] = sm;
        locate(simplex, d);

        if (!equalized) {
            for (std::size_t r = 0; r < d1; ++r) {
                const auto ri = static_cast<std::int32_t>(r);
                for (std::size_t k = 0; k < d; ++k) {
                    key[k] = simplex.rem0[k] + (simplex.rank[k] <= di - ri ? ri : ri - d1i);
                }
                point_vertex.push_back(table.insert(key.data()));
                point_weight.push_back(simplex.bary[r]);
            }
            point_start[i + 1] = point_vertex.size();
            continue;
        }

        chosen.clear();
        offsets.clear();
        prior.clear();
        double corner = 0.0;
        for (std::size_t k = 0; k < d1; ++k) corner += (simplex.rem0[k] - elevated[k]) * (simplex.rem0[k] - elevated[k]);
        corner = std::sqrt(corner);
        for (std::size_t c = 0; c < candidate_count; ++c) {
            if (candidate_norm[c] - corner > radius_elevated) break;
            const std::int32_t* o = candidates + c * d1;
            double dist = 0.0;
            for (std::size_t k = 0; k < d1; ++k) {
                diff[k] = simplex.rem0[k] + o[k] - elevated[k];
                dist += diff[k] * diff[k];
            }
            dist /= inv_std_dev * inv_std_dev;
            if (dist > radius * radius) continue;
            project(diff.data(), d, inv_std_dev, local.data());
            chosen.push_back(c);
            offsets.insert(offsets.end(), local.begin(), local.end());
            prior.push_back(std::exp(-0.5 * dist / target_var));
        }
        const std::size_t m = chosen.size();
        weight.assign(m, 0.0);
        if (solve_weights) {
            basis.assign(m * nc, 0.0);
            for (std::size_t k = 0; k < m; ++k) {
                double* row = basis.data() + k * nc;
                const double* o = offsets.data() + k * d;
                std::size_t c = 0;
                row[c++] = 1.0;
                for (std::size_t a = 0; a < d; ++a) row[c++] = o[a];
                for (std::size_t a = 0; a < d; ++a) {
                    for (std::size_t b = a; b < d; ++b) row[c++] = o[a] * o[b];
                }
            }
            // Minimum prior-weighted norm weights with unit mass, zero mean
            // offset and covariance target_var * I; vertices that come out
            // negative are dropped and the rest re-solved.
            active.assign(m, 1);
            bool solved = false;
            for (int pass = 0; pass < 4 && !solved; ++pass) {
                std::fill(system.begin(), system.end(), 0.0);
                for (std::size_t k = 0; k < m; ++k) {
                    if (!active[k]) continue;
                    const double* row = basis.data() + k * nc;
                    for (std::size_t a = 0; a < nc; ++a) {
                        const double pa = prior[k] * row[a];
                        for (std::size_t b = 0; b <= a; ++b) system[a * nc + b] += pa * row[b];
                    }
                }
                for (std::size_t a = 0; a < nc; ++a) {
                    for (std::size_t b = a + 1; b < nc; ++b) system[a * nc + b] = system[b * nc + a];
                }
                std::fill(rhs.begin(), rhs.end(), 0.0);
                rhs[0] = 1.0;
                {
                    std::size_t c = 1 + d;
                    for (std::size_t a = 0; a < d; ++a) {
                        for (std::size_t b = a; b < d; ++b) rhs[c++] = a == b ? target_var : 0.0;
                    }
                }
                if (!cholesky_solve(system, rhs, nc)) break;
                bool negative = false;
                for (std::size_t k = 0; k < m; ++k) {
                    if (!active[k]) {
                        weight[k] = 0.0;
                        continue;
                    }
                    const double* row = basis.data() + k * nc;
                    double w = 0.0;
                    for (std::size_t a = 0; a < nc; ++a) w += row[a] * rhs[a];
                    weight[k] = prior[k] * w;
                    if (weight[k] < 0.0) {
                        negative = true;
                        active[k] = 0;
                    }
                }
                solved = !negative;
            }
            // Whatever remains negative is clipped; mass is restored.
            double total = 0.0;
            for (double& w : weight) {
                w = std::max(w, 0.0);
                total += w;
            }
            if (!(total > 0.0)) {
                total = 0.0;
                for (std::size_t k = 0; k < m; ++k) total += (weight[k] = prior[k]);
            }
            for (double& w : weight) w /= total;
        }
        for (std::size_t k = 0; k < m; ++k) {
            if (solve_weights && weight[k] == 0.0) continue;
            const std::int32_t* o = candidates + chosen[k] * d1;
            for (std::size_t q = 0; q < d; ++q) key[q] = simplex.rem0[q] + o[q];
            point_vertex.push_back(table.insert(key.data()));
            point_weight.push_back(weight[k]);
        }
        point_start[i + 1] = point_vertex.size();
    }
    vertices = table.size();

    std::vector<double> unordered(vertices * d);
    std::vector<double> el(d1);
    for (std::size_t v = 0; v < vertices; ++v) {
        const std::int32_t* k0 = table.key(v);
        double last = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            el[k] = k0[k];
            last -= k0[k];
        }
        el[d] = last;
        project(el.data(), d, inv_std_dev, unordered.data() + v * d);
    }
    const std::vector<std::int32_t> order = tree.build(unordered, d);
    std::vector<std::int32_t> rank(vertices);
    positions.resize(vertices * d);
    elevated.resize(vertices * d1);
    for (std::size_t v = 0; v < vertices; ++v) {
        const auto old = static_cast<std::size_t>(order[v]);
        rank[old] = static_cast<std::int32_t>(v);
        std::copy_n(unordered.data() + old * d, d, positions.data() + v * d);
        const std::int32_t* k0 = table.key(old);
        std::int32_t last = 0;
        for (std::size_t k = 0; k < d; ++k) {
            elevated[v * d1 + k] = k0[k];
            last -= k0[k];
        }
        elevated[v * d1 + d] = last;
    }
    for (auto& v : point_vertex) v = rank[static_cast<std::size_t>(v)];
}

std::size_t PermutohedralLattice::Impl::estimate_pairs() const {
    constexpr std::size_t kSamples = 256;
    if (vertices <= kSamples) return vertices * (vertices - 1) / 2;
    // Forward pair counts of evenly spaced vertices; their mean times the
    // vertex count estimates the total.
    std::size_t found = 0;
    for (std::size_t s = 0; s < kSamples; ++s) {
        const std::size_t v = s * vertices / kSamples;
        tree.forward(v, positions.data(), elevated.data(), radius_sq(), cutoff,
                     [&](std::size_t, std::int64_t) { ++found; });
    }
    return static_cast<std::size_t>(static_cast<double>(found) / static_cast<double>(kSamples) *
                                    static_cast<double>(vertices));
}

void PermutohedralLattice::Impl::build_splat_index() {
    const std::size_t entries = point_vertex.size();
    splat_start.assign(vertices + 1, 0);
    for (std::size_t e = 0; e < entries; ++e) ++splat_start[static_cast<std::size_t>(point_vertex[e]) + 1];
    for (std::size_t v = 0; v < vertices; ++v) splat_start[v + 1] += splat_start[v];
    splat_point.assign(entries, 0);
    splat_weight.assign(entries, 0.0);
    std::vector<std::size_t> fill(splat_start.begin(), splat_start.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t e = point_start[i]; e < point_start[i + 1]; ++e) {
            const std::size_t slot = fill[static_cast<std::size_t>(point_vertex[e])]++;
            splat_point[slot] = static_cast<std::int32_t>(i);
            splat_weight[slot] = point_weight[e];
        }
    }
}

void PermutohedralLattice::Impl::build_blur() {
    const double bound = radius_sq();
    // One contiguous vertex range per worker, each filling its own arrays
    // sized from the pair estimate; a lone worker's arrays are kept as is.
    const std::size_t workers =
        std::clamp<std::size_t>(vertices / kBlockSize, 1, static_cast<std::size_t>(std::max(threads, 1)));
    const std::size_t expected = estimate_pairs();
    std::vector<std::vector<std::int32_t>> part_vertex(workers);
    std::vector<std::vector<float>> part_weight(workers);
    blur_start.assign(vertices + 1, 0);
    parallel_for(workers, static_cast<int>(workers), [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            auto& ids = part_vertex[t];
            auto& ws = part_weight[t];
            const std::size_t guess = expected / workers + expected / (8 * workers);
            ids.reserve(guess);
            ws.reserve(guess);
            for (std::size_t v = t * vertices / workers; v < (t + 1) * vertices / workers; ++v) {
                const std::size_t before = ids.size();
                tree.forward(v, positions.data(), elevated.data(), bound, cutoff,
                             [&](std::size_t w, std::int64_t dist) {
                                 ids.push_back(static_cast<std::int32_t>(w));
                                 ws.push_back(kernel_table[static_cast<std::size_t>(dist)]);
                             });
                // Neighbor order from the tree depends only on the features.
                blur_start[v + 1] = ids.size() - before;
            }
        }
    }, 1);
    for (std::size_t v = 0; v < vertices; ++v) blur_start[v + 1] += blur_start[v];
    blur_vertex = std::move(part_vertex[0]);
    blur_weight = std::move(part_weight[0]);
    blur_vertex.reserve(blur_start[vertices]);
    blur_weight.reserve(blur_start[vertices]);
    for (std::size_t t = 1; t < workers; ++t) {
        blur_vertex.insert(blur_vertex.end(), part_vertex[t].begin(), part_vertex[t].end());
        blur_weight.insert(blur_weight.end(), part_weight[t].begin(), part_weight[t].end());
        std::vector<std::int32_t>().swap(part_vertex[t]);
        std::vector<float>().swap(part_weight[t]);
    }
}

void PermutohedralLattice::Impl::compute_self_weights() {
    self_weight.assign(n, 0.0);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t lo = point_start[i];
            const std::size_t hi = point_start[i + 1];
            double total = 0.0;
            for (std::size_t k = lo; k < hi; ++k) {
                const double wk = point_weight[k];
                total += wk * wk;
                for (std::size_t m = k + 1; m < hi; ++m) {
                    total += 2.0 * wk * point_weight[m] *
                             static_cast<double>(kernel(distance(point_vertex[k], point_vertex[m])));
                }
            }
            self_weight[i] = gain * total;
        }
    });
}

PermutohedralLattice::PermutohedralLattice(const FeatureField& features, const LatticeOptions& options)
    : impl_(std::make_unique<Impl>()) {
    const std::size_t d = features.dim();
    if (d > kMaxLatticeDim) {
        throw ParameterError("feature dimension " + std::to_string(d) + " exceeds lattice limit " +
                             std::to_string(kMaxLatticeDim));
    }
    if (!(options.resolution == 0.0 || (options.resolution >= 0.75 && options.resolution <= 4.0))) {
        throw ParameterError("lattice resolution must be 0 (auto) or in [0.75, 4], got " +
                             std::to_string(options.resolution));
    }
    if (!(options.truncation > 0.0 && options.truncation < 1.0)) {
        throw ParameterError("lattice truncation must be in (0, 1), got " + std::to_string(options.truncation));
    }
    if (options.interpolation == LatticeInterpolation::equalized && d > kMaxEqualizedDim) {
        throw ParameterError("equalized interpolation supports at most " + std::to_string(kMaxEqualizedDim) +
                             " feature dimensions");
    }
    const int threads = options.threads <= 0 ? default_thread_count() : options.threads;

    // Candidate configurations, most accurate first.
    struct Config {
        LatticeInterpolation mode;
        double resolution;
    };
    std::vector<Config> ladder;
    const bool fixed_resolution = options.resolution > 0.0;
    const auto add_mode = [&](LatticeInterpolation mode) {
        if (fixed_resolution) {
            ladder.push_back({mode, options.resolution});
            return;
        }
        const auto& levels = mode == LatticeInterpolation::equalized
                                 ? std::vector<double>(std::begin(kEqualizedLadder), std::end(kEqualizedLadder))
                                 : std::vector<double>(std::begin(kResolutionLadder), std::end(kResolutionLadder));
        for (auto it = levels.rbegin(); it != levels.rend(); ++it) ladder.push_back({mode, *it});
    };
    const double equalized_work = static_cast<double>(features.pixel_count()) *
                                  static_cast<double>(moment_count(d) * moment_count(d)) * 100.0;
    const bool equalized_allowed =
        d >= 1 && d <= kMaxEqualizedDim &&
        (options.interpolation == LatticeInterpolation::equalized ||
         (options.interpolation == LatticeInterpolation::automatic && equalized_work <= options.max_weight_work));
    if (equalized_allowed) add_mode(LatticeInterpolation::equalized);
    if (options.interpolation != LatticeInterpolation::equalized) add_mode(LatticeInterpolation::barycentric);

    // Walk each mode from coarse to fine and keep the finest level that fits
    // the pair budget; the coarsest level of the last mode always fits.
    std::unique_ptr<Impl> best;
    for (std::size_t start = 0; start < ladder.size();) {
        std::size_t stop = start;
        while (stop < ladder.size() && ladder[stop].mode == ladder[start].mode) ++stop;
        std::unique_ptr<Impl> fit;
        for (std::size_t k = stop; k-- > start;) {
            auto candidate = std::make_unique<Impl>();
            candidate->threads = threads;
            candidate->configure(d, ladder[k].resolution, ladder[k].mode, options.truncation);
            candidate->embed(features, false);
            const bool last_resort = stop == ladder.size() && k + 1 == stop && !fit;
            if (!last_resort && !fixed_resolution && candidate->estimate_pairs() > options.max_blur_pairs) break;
            fit = std::move(candidate);
        }
        if (fit) {
            best = std::move(fit);
            break;
        }
        start = stop;
    }
    impl_ = std::move(best);
    Impl& m = *impl_;
    if (m.interpolation == LatticeInterpolation::equalized) m.embed(features, true);
    m.build_splat_index();
    m.build_blur();
    m.compute_self_weights();
    std::vector<double>().swap(m.positions);
    std::vector<std::int32_t>().swap(m.elevated);
    m.tree = VertexTree();
}

PermutohedralLattice::~PermutohedralLattice() = default;
PermutohedralLattice::PermutohedralLattice(PermutohedralLattice&&) noexcept = default;
PermutohedralLattice& PermutohedralLattice::operator=(PermutohedralLattice&&) noexcept = default;

std::size_t PermutohedralLattice::pixel_count() const noexcept { return impl_->n; }
std::size_t PermutohedralLattice::dim() const noexcept { return impl_->d; }
std::size_t PermutohedralLattice::vertex_count() const noexcept { return impl_->vertices; }
double PermutohedralLattice::resolution() const noexcept { return impl_->resolution; }
LatticeInterpolation PermutohedralLattice::interpolation() const noexcept { return impl_->interpolation; }
std::size_t PermutohedralLattice::blur_pair_count() const noexcept { return impl_->blur_vertex.size(); }

double PermutohedralLattice::lattice_self_weight(std::size_t pixel) const { return impl_->self_weight.at(pixel); }

ValueField PermutohedralLattice::filter(const ValueField& values) const {
    const Impl& m = *impl_;
    if (values.pixel_count != m.n || values.values.size() != m.n * values.channels) {
        throw ShapeError("lattice filter: " + std::to_string(values.pixel_count) + " value pixels vs " +
                         std::to_string(m.n) + " lattice pixels");
    }
    const std::size_t c = values.channels;
    ValueField out(m.n, c);
    if (c == 0 || m.n == 0) return out;

    std::vector<double> grid(m.vertices * c, 0.0);
    parallel_for(m.vertices, m.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t v = begin; v < end; ++v) {
            double* g = grid.data() + v * c;
            for (std::size_t e = m.splat_start[v]; e < m.splat_start[v + 1]; ++e) {
                const double w = m.splat_weight[e];
                const double* src = values.values.data() + static_cast<std::size_t>(m.splat_point[e]) * c;
                for (std::size_t ch = 0; ch < c; ++ch) g[ch] += w * src[ch];
            }
        }
    });

    // Symmetric scatter over each stored pair; threads accumulate into
    // private buffers that are reduced in a fixed order.
    std::vector<double> blurred(grid);
    const auto blur_rows = [&](std::size_t begin, std::size_t end, double* acc) {
        for (std::size_t v = begin; v < end; ++v) {
            const double* gv = grid.data() + v * c;
            double* av = acc + v * c;
            for (std::size_t e = m.blur_start[v]; e < m.blur_start[v + 1]; ++e) {
                const double w = m.blur_weight[e];
                const std::size_t u = static_cast<std::size_t>(m.blur_vertex[e]) * c;
                const double* gu = grid.data() + u;
                double* au = acc + u;
                for (std::size_t ch = 0; ch < c; ++ch) {
                    av[ch] += w * gu[ch];
                    au[ch] += w * gv[ch];
                }
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(m.threads),
                                                      std::max<std::size_t>(1, m.vertices / 1024));
    if (workers <= 1) {
        blur_rows(0, m.vertices, blurred.data());
    } else {
        // Split rows so each worker owns a similar number of pairs.
        std::vector<std::size_t> bounds{0};
        const std::size_t total = m.blur_start[m.vertices];
        for (std::size_t t = 1; t < workers; ++t) {
            const auto it = std::lower_bound(m.blur_start.begin(), m.blur_start.end(), total * t / workers);
            bounds.push_back(std::max(bounds.back(), static_cast<std::size_t>(it - m.blur_start.begin())));
        }
        bounds.push_back(m.vertices);
        std::vector<std::vector<double>> partial(workers);
        parallel_for(workers, static_cast<int>(workers), [&](std::size_t begin, std::size_t end) {
            for (std::size_t t = begin; t < end; ++t) {
                partial[t].assign(grid.size(), 0.0);
                blur_rows(bounds[t], bounds[t + 1], partial[t].data());
            }
        }, 1);
        for (const auto& p : partial) {
            for (std::size_t k = 0; k < blurred.size(); ++k) blurred[k] += p[k];
        }
    }

    parallel_for(m.n, m.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double* o = out.values.data() + i * c;
            for (std::size_t e = m.point_start[i]; e < m.point_start[i + 1]; ++e) {
                const double w = m.point_weight[e];
                const double* g = blurred.data() + static_cast<std::size_t>(m.point_vertex[e]) * c;
                for (std::size_t ch = 0; ch < c; ++ch) o[ch] += w * g[ch];
            }
            const double* v = values.values.data() + i * c;
            const double self = m.self_weight[i];
            for (std::size_t ch = 0; ch < c; ++ch) o[ch] = v[ch] + (m.gain * o[ch] - self * v[ch]);
        }
    });
    return out;
}

ValueField fast_filter(const ValueField& values, const FeatureField& features, const LatticeOptions& options) {
    if (values.pixel_count != features.pixel_count()) {
        throw ShapeError("fast_filter: " + std::to_string(values.pixel_count) + " value pixels vs " +
                         std::to_string(features.pixel_count()) + " feature pixels");
    }
    return PermutohedralLattice(features, options).filter(values);
}

}  // namespace crfseg
