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
#include <string_view>

#include "crfseg/types.hpp"

namespace crfseg {

enum class FixtureKind { binary_blobs, potsdam_mosaic };

std::string_view to_string(FixtureKind kind) noexcept;
FixtureKind parse_fixture_kind(std::string_view name);

struct Fixture {
    ImageTensor image;
    LabelMap clean;
    LabelMap noisy;
};

/// Pixel noise of the fixture images.
constexpr double kFixtureImageSigma = 0.05;

/// Deterministic test instance. binary_blobs thresholds smoothed white noise
/// at its median into 2 classes; potsdam_mosaic is a 4x4 grid of rectangles
/// over the 6 Potsdam classes, all of which appear. The image is a per-class
/// base color plus Gaussian noise, clamped to [0,1]. noisy flips exactly
/// round(noise_rate * N) distinct pixels to a uniformly drawn wrong class.
///
/// All randomness comes from raw std::mt19937_64 outputs (Box-Muller for
/// normals, rejection for bounded integers), so the same seed gives the same
/// fixture on any platform.
Fixture gen_fixture(FixtureKind kind, std::size_t height, std::size_t width, double noise_rate, std::uint64_t seed);

}  // namespace crfseg
