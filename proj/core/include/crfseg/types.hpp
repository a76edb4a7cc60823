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
#include <span>
#include <vector>

namespace crfseg {

using Label = std::int32_t;

/// H x W x C raster with intensities normalized to [0,1], stored pixel-major
/// (all channels of a pixel are contiguous).
class ImageTensor {
public:
    ImageTensor(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept { return height_ * width_; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<const double> pixel(std::size_t index) const noexcept {
        return {data_.data() + index * channels_, channels_};
    }
    double at(std::size_t row, std::size_t col, std::size_t channel) const noexcept {
        return data_[(row * width_ + col) * channels_ + channel];
    }

    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::size_t channels_;
    std::vector<double> data_;
};

/// H x W raster of class indices in [0, num_classes).
class LabelMap {
public:
    LabelMap(std::size_t height, std::size_t width, std::size_t num_classes, std::vector<Label> labels);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t pixel_count() const noexcept { return height_ * width_; }

    std::span<const Label> labels() const noexcept { return labels_; }
    Label operator[](std::size_t index) const noexcept { return labels_[index]; }
    Label at(std::size_t row, std::size_t col) const noexcept { return labels_[row * width_ + col]; }

    friend bool operator==(const LabelMap&, const LabelMap&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::size_t num_classes_;
    std::vector<Label> labels_;
};

/// Per-pixel negative log-probabilities, pixel-major (costs of pixel i are
/// the L consecutive entries starting at i * L).
class UnaryField {
public:
    UnaryField(std::size_t height, std::size_t width, std::size_t num_classes, std::vector<double> costs);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t pixel_count() const noexcept { return height_ * width_; }

    std::span<const double> costs() const noexcept { return costs_; }
    std::span<const double> pixel(std::size_t index) const noexcept {
        return {costs_.data() + index * num_classes_, num_classes_};
    }

    friend bool operator==(const UnaryField&, const UnaryField&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::size_t num_classes_;
    std::vector<double> costs_;
};

/// Per-pixel class marginals. Every entry lies in [0,1] and every pixel sums
/// to 1 within kMarginalSumTolerance; the constructor enforces both.
class MarginalField {
public:
    static constexpr double kMarginalSumTolerance = 1e-6;

    MarginalField(std::size_t height, std::size_t width, std::size_t num_classes, std::vector<double> q);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t pixel_count() const noexcept { return height_ * width_; }

    std::span<const double> values() const noexcept { return q_; }
    std::span<const double> pixel(std::size_t index) const noexcept {
        return {q_.data() + index * num_classes_, num_classes_};
    }

    friend bool operator==(const MarginalField&, const MarginalField&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::size_t num_classes_;
    std::vector<double> q_;
};

}  // namespace crfseg
