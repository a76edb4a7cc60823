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
#include <string>

#include "crfseg/errors.hpp"
#include "crfseg/filtering.hpp"
#include "crfseg/parallel.hpp"

namespace crfseg {
namespace {

constexpr double kMinNormalizer = 1e-12;

ValueField divide_by(const ValueField& values, std::span<const double> normalizer, std::size_t width) {
    ValueField out = values;
    for (std::size_t i = 0; i < values.pixel_count; ++i) {
        const double norm = normalizer[i];
        if (!(norm >= kMinNormalizer)) {
            throw NumericalError("filter normalizer below " + std::to_string(kMinNormalizer), i / width, i % width);
        }
        for (std::size_t c = 0; c < values.channels; ++c) out.at(i, c) /= norm;
    }
    return out;
}

constexpr double kGridTolerance = 1e-9;
constexpr double kMinGridWeight = 1e-12;

}  // namespace

double grid_feature_spacing(const FeatureField& features) {
    if (features.dim() != 2 || features.pixel_count() == 0) return 0.0;
    const std::size_t h = features.height();
    const std::size_t w = features.width();
    double spacing = 0.0;
    if (w > 1) {
        spacing = features.pixel(1)[0];
    } else if (h > 1) {
        spacing = features.pixel(1)[1];
    } else {
        return features.pixel(0)[0] == 0.0 && features.pixel(0)[1] == 0.0 ? 1.0 : 0.0;
    }
    if (!(spacing > 0.0)) return 0.0;
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const auto f = features.pixel(r * w + c);
            const double x = static_cast<double>(c) * spacing;
            const double y = static_cast<double>(r) * spacing;
            if (std::abs(f[0] - x) > kGridTolerance * (1.0 + x) || std::abs(f[1] - y) > kGridTolerance * (1.0 + y)) {
                return 0.0;
            }
        }
    }
    return spacing;
}

ValueField separable_grid_filter(const ValueField& values, std::size_t height, std::size_t width, double spacing,
                                 int threads) {
    if (values.pixel_count != height * width || values.values.size() != values.pixel_count * values.channels) {
        throw ShapeError("separable_grid_filter: " + std::to_string(values.pixel_count) + " value pixels vs " +
                         std::to_string(height) + "x" + std::to_string(width) + " grid");
    }
    if (!(spacing > 0.0) || !std::isfinite(spacing)) {
        throw ParameterError("separable_grid_filter: spacing must be positive, got " + std::to_string(spacing));
    }
    std::vector<double> taps{1.0};
    const std::size_t longest = std::max(height, width);
    for (std::size_t k = 1; k < longest; ++k) {
        const double t = static_cast<double>(k) * spacing;
        const double weight = std::exp(-0.5 * t * t);
        if (weight < kMinGridWeight) break;
        taps.push_back(weight);
    }
    const std::size_t radius = taps.size() - 1;
    const std::size_t ch = values.channels;

    ValueField rows(values.pixel_count, ch);
    parallel_for(height, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            for (std::size_t c = 0; c < width; ++c) {
                double* out = rows.values.data() + (r * width + c) * ch;
                const std::size_t lo = c > radius ? c - radius : 0;
                const std::size_t hi = std::min(width - 1, c + radius);
                for (std::size_t k = lo; k <= hi; ++k) {
                    const double weight = taps[k > c ? k - c : c - k];
                    const double* in = values.values.data() + (r * width + k) * ch;
                    for (std::size_t q = 0; q < ch; ++q) out[q] += weight * in[q];
                }
            }
        }
    }, 16);
    ValueField out(values.pixel_count, ch);
    parallel_for(height, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const std::size_t lo = r > radius ? r - radius : 0;
            const std::size_t hi = std::min(height - 1, r + radius);
            double* dst = out.values.data() + r * width * ch;
            for (std::size_t k = lo; k <= hi; ++k) {
                const double weight = taps[k > r ? k - r : r - k];
                const double* src = rows.values.data() + k * width * ch;
                for (std::size_t q = 0; q < width * ch; ++q) dst[q] += weight * src[q];
            }
        }
    }, 16);
    return out;
}

ValueField normalized_filter(const ValueField& values, const FeatureField& features, const LatticeOptions& options) {
    if (values.pixel_count != features.pixel_count()) {
        throw ShapeError("normalized_filter: " + std::to_string(values.pixel_count) + " value pixels vs " +
                         std::to_string(features.pixel_count()) + " feature pixels");
    }
    PermutohedralLattice lattice(features, options);
    const ValueField ones = lattice.filter(ValueField(features.pixel_count(), 1, 1.0));
    return divide_by(lattice.filter(values), ones.values, features.width());
}

GaussianFilter::GaussianFilter(FeatureField features, FilterMethod method, const LatticeOptions& options)
    : features_(std::move(features)), method_(method) {
    threads_ = options.threads;
    if (method_ == FilterMethod::lattice) {
        lattice_ = std::make_unique<PermutohedralLattice>(features_, options);
    } else if (method_ == FilterMethod::separable) {
        grid_spacing_ = grid_feature_spacing(features_);
        if (grid_spacing_ == 0.0) throw ParameterError("separable filtering needs scaled pixel-grid features");
    } else if (features_.pixel_count() > kMaxExactPixels) {
        throw SizeLimitError("exact filtering of " + std::to_string(features_.pixel_count()) +
                             " pixels is too large (limit " + std::to_string(kMaxExactPixels) + ")");
    }
    normalizer_ = apply(ValueField(features_.pixel_count(), 1, 1.0)).values;
}

GaussianFilter::~GaussianFilter() = default;
GaussianFilter::GaussianFilter(GaussianFilter&&) noexcept = default;
GaussianFilter& GaussianFilter::operator=(GaussianFilter&&) noexcept = default;

std::size_t GaussianFilter::pixel_count() const noexcept { return features_.pixel_count(); }

ValueField GaussianFilter::apply(const ValueField& values) const {
    if (lattice_) return lattice_->filter(values);
    if (method_ == FilterMethod::separable) {
        return separable_grid_filter(values, features_.height(), features_.width(), grid_spacing_, threads_);
    }
    return brute_force_filter(values, features_);
}

ValueField GaussianFilter::normalized(const ValueField& values) const {
    if (values.pixel_count != features_.pixel_count()) {
        throw ShapeError("normalized filter: pixel count mismatch");
    }
    return divide_by(apply(values), normalizer_, features_.width());
}

}  // namespace crfseg
