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

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "crfseg/types.hpp"

namespace crfseg {

/// Per-pixel feature vectors, already divided by the kernel widths so the
/// kernel is exp(-|f_i - f_j|^2 / 2) in feature space.
class FeatureField {
public:
    FeatureField(std::size_t height, std::size_t width, std::size_t dim, std::vector<double> features);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t pixel_count() const noexcept { return height_ * width_; }

    std::span<const double> features() const noexcept { return features_; }
    std::span<const double> pixel(std::size_t index) const noexcept {
        return {features_.data() + index * dim_, dim_};
    }

private:
    std::size_t height_;
    std::size_t width_;
    std::size_t dim_;
    std::vector<double> features_;
};

/// Pixel-major field of real vectors: `channels` values per pixel.
struct ValueField {
    std::size_t pixel_count = 0;
    std::size_t channels = 0;
    std::vector<double> values;

    ValueField() = default;
    ValueField(std::size_t pixels, std::size_t channels_per_pixel, double fill = 0.0)
        : pixel_count(pixels), channels(channels_per_pixel), values(pixels * channels_per_pixel, fill) {}
    ValueField(std::size_t pixels, std::size_t channels_per_pixel, std::vector<double> data);

    double& at(std::size_t pixel, std::size_t channel) { return values[pixel * channels + channel]; }
    double at(std::size_t pixel, std::size_t channel) const { return values[pixel * channels + channel]; }
};

/// Feature dimension supported by the lattice (RGBA bilateral features need 6).
constexpr std::size_t kMaxLatticeDim = 8;
/// Pixel count above which exact O(N^2) evaluation is refused.
constexpr std::size_t kMaxExactPixels = 4096;

/// (col / theta_gamma, row / theta_gamma).
FeatureField make_spatial_features(std::size_t height, std::size_t width, double theta_gamma);

/// (col / theta_alpha, row / theta_alpha, I_1 / theta_beta, ..., I_C / theta_beta).
FeatureField make_bilateral_features(const ImageTensor& image, double theta_alpha, double theta_beta);

/// Exact Gaussian sum out_i = sum_j exp(-|f_i - f_j|^2 / 2) v_j, self term included.
/// Refuses inputs above kMaxExactPixels.
ValueField brute_force_filter(const ValueField& values, const FeatureField& features);

/// How a point's value is spread over lattice vertices.
///   barycentric  the d+1 corners of the enclosing simplex
///   equalized    every vertex within a small radius, weighted so that each
///                point has zero mean offset and the same isotropic second
///                moment; one small linear solve per point, d <= 5
///   automatic    equalized when its weight solve fits max_weight_work
enum class LatticeInterpolation { automatic, barycentric, equalized };

/// Accuracy/speed knobs of the lattice filter.
struct LatticeOptions {
    LatticeInterpolation interpolation = LatticeInterpolation::automatic;
    /// Lattice points per kernel width, relative to the classic permutohedral
    /// spacing; in [0.75, 4]. 0 selects the finest ladder level whose estimated
    /// blur fits in max_blur_pairs.
    double resolution = 0.0;
    /// Work budget for automatic resolution, in vertex pairs.
    std::size_t max_blur_pairs = 20'000'000;
    /// Work budget for automatic interpolation, in flops of weight solving.
    double max_weight_work = 2e8;
    /// Blur weights below this fraction of the peak are dropped.
    double truncation = 1e-4;
    /// 0 = machine parallelism.
    int threads = 1;
};

inline constexpr double kResolutionLadder[] = {0.75, 0.875, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0};
inline constexpr double kEqualizedLadder[] = {1.25, 1.5, 2.0};

/// Approximate Gaussian filtering on a permutohedral lattice.
///
/// Values are splatted onto nearby lattice vertices (see LatticeInterpolation),
/// blurred by a direct Gaussian between occupied vertices, and sliced back
/// with the same weights. The blur variance is reduced by the variance the two
/// interpolation steps add, so the composite kernel has unit variance. Each
/// point's own contribution is computed in closed form and replaced by the
/// exact self weight 1.
///
/// Vertex neighborhoods and blur weights depend only on the features, so the
/// lattice is built once and reused for any number of value fields.
class PermutohedralLattice {
public:
    explicit PermutohedralLattice(const FeatureField& features, const LatticeOptions& options = {});
    ~PermutohedralLattice();
    PermutohedralLattice(PermutohedralLattice&&) noexcept;
    PermutohedralLattice& operator=(PermutohedralLattice&&) noexcept;

    std::size_t pixel_count() const noexcept;
    std::size_t dim() const noexcept;
    std::size_t vertex_count() const noexcept;
    double resolution() const noexcept;
    LatticeInterpolation interpolation() const noexcept;
    /// Number of vertex pairs in the blur.
    std::size_t blur_pair_count() const noexcept;

    ValueField filter(const ValueField& values) const;

    /// Raw splat/blur/slice response of a point to its own value (diagnostic).
    double lattice_self_weight(std::size_t pixel) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot lattice filter; see PermutohedralLattice.
ValueField fast_filter(const ValueField& values, const FeatureField& features, const LatticeOptions& options = {});

/// fast_filter(values) / fast_filter(ones), per pixel and channel.
ValueField normalized_filter(const ValueField& values, const FeatureField& features,
                             const LatticeOptions& options = {});

/// Exact Gaussian filter for features that are pixel coordinates scaled by
/// `spacing` (as built by make_spatial_features with spacing = 1/theta),
/// computed as two truncated 1-D passes. Weights below 1e-12 are dropped.
ValueField separable_grid_filter(const ValueField& values, std::size_t height, std::size_t width, double spacing,
                                 int threads = 1);

/// Spacing s when features(r, c) == (c * s, r * s) for every pixel, else 0.
double grid_feature_spacing(const FeatureField& features);

/// Which summation backs a GaussianFilter.
///   lattice    PermutohedralLattice
///   exact      brute_force_filter (size-guarded)
///   separable  separable_grid_filter; features must be a scaled pixel grid
enum class FilterMethod { lattice, exact, separable };

/// Gaussian filter bound to one feature field, with the all-ones response cached.
class GaussianFilter {
public:
    GaussianFilter(FeatureField features, FilterMethod method, const LatticeOptions& options = {});
    ~GaussianFilter();
    GaussianFilter(GaussianFilter&&) noexcept;
    GaussianFilter& operator=(GaussianFilter&&) noexcept;

    std::size_t pixel_count() const noexcept;
    FilterMethod method() const noexcept { return method_; }

    /// Unnormalized sum including the self term.
    ValueField apply(const ValueField& values) const;
    /// Per-pixel response to an all-ones field (>= 1 because of the self term).
    std::span<const double> normalizer() const noexcept { return normalizer_; }
    /// apply(values) / normalizer().
    ValueField normalized(const ValueField& values) const;

private:
    FeatureField features_;
    FilterMethod method_;
    std::unique_ptr<PermutohedralLattice> lattice_;
    double grid_spacing_ = 0.0;
    int threads_ = 1;
    std::vector<double> normalizer_;
};

}  // namespace crfseg
