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

#include "crfseg/fixtures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "crfseg/errors.hpp"

namespace crfseg {
namespace {

class FixtureRng {
public:
    explicit FixtureRng(std::uint64_t seed) : engine_(seed) {}

    // 53 random bits in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform in [0, bound) without modulo bias.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % bound;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        spare_ = radius * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return radius * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Periodic Gaussian blur along rows then columns.
std::vector<double> smooth(const std::vector<double>& field, std::size_t h, std::size_t w, double sigma) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        taps[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    }
    const auto wrap = [](std::ptrdiff_t i, std::size_t n) {
        const auto m = static_cast<std::ptrdiff_t>(n);
        return static_cast<std::size_t>(((i % m) + m) % m);
    };
    std::vector<double> rows(field.size(), 0.0);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            double sum = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                sum += taps[static_cast<std::size_t>(k + radius)] *
                       field[r * w + wrap(static_cast<std::ptrdiff_t>(c) + k, w)];
            }
            rows[r * w + c] = sum;
        }
    }
    std::vector<double> out(field.size(), 0.0);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            double sum = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                sum += taps[static_cast<std::size_t>(k + radius)] *
                       rows[wrap(static_cast<std::ptrdiff_t>(r) + k, h) * w + c];
            }
            out[r * w + c] = sum;
        }
    }
    return out;
}

std::vector<Label> blobs(FixtureRng& rng, std::size_t h, std::size_t w) {
    std::vector<double> noise(h * w);
    for (double& v : noise) v = rng.uniform() - 0.5;
    const double sigma = std::max(2.0, static_cast<double>(std::min(h, w)) / 10.0);
    const std::vector<double> field = smooth(noise, h, w, sigma);
    std::vector<double> sorted = field;
    const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    const double median = *mid;
    std::vector<Label> labels(h * w);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = field[i] < median ? 0 : 1;
    return labels;
}

// Cut positions splitting [0, n) into non-empty spans.
std::vector<std::size_t> cuts(FixtureRng& rng, std::size_t n, std::size_t parts) {
    std::vector<std::size_t> at{0};
    for (std::size_t k = 1; k < parts; ++k) {
        // Jitter each even cut by up to a quarter span either way.
        const double span = static_cast<double>(n) / static_cast<double>(parts);
        const double jitter = (rng.uniform() - 0.5) * 0.5 * span;
        auto pos = static_cast<std::size_t>(std::lround(span * static_cast<double>(k) + jitter));
        pos = std::clamp(pos, at.back() + 1, n - (parts - k));
        at.push_back(pos);
    }
    at.push_back(n);
    return at;
}

std::vector<Label> mosaic(FixtureRng& rng, std::size_t h, std::size_t w) {
    constexpr std::size_t kTiles = 4;
    constexpr std::size_t kClasses = 6;
    const std::vector<std::size_t> row_cuts = cuts(rng, h, kTiles);
    const std::vector<std::size_t> col_cuts = cuts(rng, w, kTiles);
    std::array<Label, kTiles * kTiles> tile_class{};
    // The first six tiles take a shuffled copy of every class.
    std::array<Label, kClasses> order{0, 1, 2, 3, 4, 5};
    for (std::size_t k = kClasses - 1; k > 0; --k) std::swap(order[k], order[rng.below(k + 1)]);
    for (std::size_t t = 0; t < tile_class.size(); ++t) {
        tile_class[t] = t < kClasses ? order[t] : static_cast<Label>(rng.below(kClasses));
    }
    std::vector<Label> labels(h * w);
    for (std::size_t tr = 0; tr < kTiles; ++tr) {
        for (std::size_t tc = 0; tc < kTiles; ++tc) {
            for (std::size_t r = row_cuts[tr]; r < row_cuts[tr + 1]; ++r) {
                for (std::size_t c = col_cuts[tc]; c < col_cuts[tc + 1]; ++c) {
                    labels[r * w + c] = tile_class[tr * kTiles + tc];
                }
            }
        }
    }
    return labels;
}

}  // namespace

std::string_view to_string(FixtureKind kind) noexcept {
    return kind == FixtureKind::binary_blobs ? "binary_blobs" : "potsdam_mosaic";
}

FixtureKind parse_fixture_kind(std::string_view name) {
    if (name == "binary_blobs") return FixtureKind::binary_blobs;
    if (name == "potsdam_mosaic") return FixtureKind::potsdam_mosaic;
    throw ParameterError("unknown fixture kind '" + std::string(name) + "' (expected binary_blobs or potsdam_mosaic)");
}

Fixture gen_fixture(FixtureKind kind, std::size_t height, std::size_t width, double noise_rate, std::uint64_t seed) {
    if (height < 8 || width < 8) {
        throw ParameterError("fixture must be at least 8x8, got " + std::to_string(height) + "x" +
                             std::to_string(width));
    }
    if (!(noise_rate >= 0.0 && noise_rate < 1.0)) {
        throw ParameterError("noise rate must lie in [0, 1), got " + std::to_string(noise_rate));
    }
    FixtureRng rng(seed);
    const bool binary = kind == FixtureKind::binary_blobs;
    const std::size_t num_classes = binary ? 2 : 6;
    std::vector<Label> clean = binary ? blobs(rng, height, width) : mosaic(rng, height, width);

    // Muted versions of the palette colors, so noise rarely clips.
    static constexpr double kBinaryBase[2][3] = {{0.80, 0.75, 0.25}, {0.25, 0.30, 0.75}};
    static constexpr double kMosaicBase[6][3] = {{0.80, 0.25, 0.25}, {0.80, 0.80, 0.25}, {0.25, 0.80, 0.80},
                                                 {0.25, 0.25, 0.80}, {0.25, 0.80, 0.25}, {0.80, 0.80, 0.80}};
    const std::size_t n = height * width;
    std::vector<double> pixels(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        const auto label = static_cast<std::size_t>(clean[i]);
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const double base = binary ? kBinaryBase[label][ch] : kMosaicBase[label][ch];
            pixels[i * 3 + ch] = std::clamp(base + kFixtureImageSigma * rng.normal(), 0.0, 1.0);
        }
    }

    std::vector<Label> noisy = clean;
    const auto flips = static_cast<std::size_t>(std::llround(noise_rate * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t k = 0; k < flips; ++k) {
        std::swap(order[k], order[k + rng.below(n - k)]);
        const std::size_t i = order[k];
        // Uniform over the other classes, skipping the clean one.
        auto label = static_cast<Label>(rng.below(num_classes - 1));
        if (label >= clean[i]) ++label;
        noisy[i] = label;
    }

    return {ImageTensor(height, width, 3, std::move(pixels)), LabelMap(height, width, num_classes, std::move(clean)),
            LabelMap(height, width, num_classes, std::move(noisy))};
}

}  // namespace crfseg
