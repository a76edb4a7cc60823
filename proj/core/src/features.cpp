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

#include <cmath>
#include <string>

#include "crfseg/errors.hpp"
#include "crfseg/filtering.hpp"

namespace crfseg {
namespace {

void check_width(double width, const char* name) {
    if (!std::isfinite(width) || width <= 0.0) {
        throw ParameterError(std::string("invalid kernel width: ") + name + "=" + std::to_string(width));
    }
}

}  // namespace

FeatureField::FeatureField(std::size_t height, std::size_t width, std::size_t dim, std::vector<double> features)
    : height_(height), width_(width), dim_(dim), features_(std::move(features)) {
    if (dim_ == 0) {
        throw ShapeError("feature dimension must be positive");
    }
    if (features_.size() != height_ * width_ * dim_) {
        throw ShapeError("feature field: expected " + std::to_string(height_ * width_ * dim_) + " values, got " +
                         std::to_string(features_.size()));
    }
    for (double f : features_) {
        if (!std::isfinite(f)) throw ParameterError("feature values must be finite");
    }
}

ValueField::ValueField(std::size_t pixels, std::size_t channels_per_pixel, std::vector<double> data)
    : pixel_count(pixels), channels(channels_per_pixel), values(std::move(data)) {
    if (values.size() != pixel_count * channels) {
        throw ShapeError("value field: expected " + std::to_string(pixel_count * channels) + " values, got " +
                         std::to_string(values.size()));
    }
}

FeatureField make_spatial_features(std::size_t height, std::size_t width, double theta_gamma) {
    check_width(theta_gamma, "theta_gamma");
    std::vector<double> f(height * width * 2);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            const std::size_t i = r * width + c;
            f[2 * i] = static_cast<double>(c) / theta_gamma;
            f[2 * i + 1] = static_cast<double>(r) / theta_gamma;
        }
    }
    return FeatureField(height, width, 2, std::move(f));
}

FeatureField make_bilateral_features(const ImageTensor& image, double theta_alpha, double theta_beta) {
    check_width(theta_alpha, "theta_alpha");
    check_width(theta_beta, "theta_beta");
    const std::size_t channels = image.channels();
    const std::size_t dim = 2 + channels;
    std::vector<double> f(image.pixel_count() * dim);
    for (std::size_t r = 0; r < image.height(); ++r) {
        for (std::size_t c = 0; c < image.width(); ++c) {
            const std::size_t i = r * image.width() + c;
            double* out = f.data() + i * dim;
            out[0] = static_cast<double>(c) / theta_alpha;
            out[1] = static_cast<double>(r) / theta_alpha;
            const auto px = image.pixel(i);
            for (std::size_t ch = 0; ch < channels; ++ch) out[2 + ch] = px[ch] / theta_beta;
        }
    }
    return FeatureField(image.height(), image.width(), dim, std::move(f));
}

ValueField brute_force_filter(const ValueField& values, const FeatureField& features) {
    const std::size_t n = features.pixel_count();
    if (values.pixel_count != n || values.values.size() != n * values.channels) {
        throw ShapeError("brute_force_filter: " + std::to_string(values.pixel_count) + " value pixels vs " +
                         std::to_string(n) + " feature pixels");
    }
    if (n > kMaxExactPixels) {
        throw SizeLimitError("brute_force_filter: " + std::to_string(n) + " pixels is too large for exact filtering (limit " +
                             std::to_string(kMaxExactPixels) + ")");
    }
    const std::size_t dim = features.dim();
    const std::size_t channels = values.channels;
    ValueField out(n, channels);
    for (std::size_t i = 0; i < n; ++i) {
        const auto fi = features.pixel(i);
        double* oi = out.values.data() + i * channels;
        for (std::size_t j = 0; j < n; ++j) {
            const auto fj = features.pixel(j);
            double dist2 = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double diff = fi[k] - fj[k];
                dist2 += diff * diff;
            }
            const double w = std::exp(-0.5 * dist2);
            const double* vj = values.values.data() + j * channels;
            for (std::size_t c = 0; c < channels; ++c) oi[c] += w * vj[c];
        }
    }
    return out;
}

}  // namespace crfseg
