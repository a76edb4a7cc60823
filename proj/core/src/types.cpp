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

#include "crfseg/types.hpp"

#include <cmath>
#include <string>

#include "crfseg/errors.hpp"

namespace crfseg {
namespace {

void check_length(std::size_t actual, std::size_t expected, const char* what) {
    if (actual != expected) {
        throw ShapeError(std::string(what) + ": expected " + std::to_string(expected) + " values, got " +
                         std::to_string(actual));
    }
}

}  // namespace

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (channels_ != 1 && channels_ != 3 && channels_ != 4) {
        throw ShapeError("image must have 1, 3 or 4 channels, got " + std::to_string(channels_));
    }
    check_length(data_.size(), height_ * width_ * channels_, "image data");
    for (double v : data_) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw ParameterError("image intensity outside [0,1]: " + std::to_string(v));
        }
    }
}

LabelMap::LabelMap(std::size_t height, std::size_t width, std::size_t num_classes, std::vector<Label> labels)
    : height_(height), width_(width), num_classes_(num_classes), labels_(std::move(labels)) {
    if (num_classes_ < 2) {
        throw ParameterError("label map needs at least 2 classes");
    }
    check_length(labels_.size(), height_ * width_, "label map");
    for (Label l : labels_) {
        if (l < 0 || static_cast<std::size_t>(l) >= num_classes_) {
            throw ParameterError("label " + std::to_string(l) + " outside [0, " + std::to_string(num_classes_) + ")");
        }
    }
}

UnaryField::UnaryField(std::size_t height, std::size_t width, std::size_t num_classes, std::vector<double> costs)
    : height_(height), width_(width), num_classes_(num_classes), costs_(std::move(costs)) {
    if (num_classes_ < 2) {
        throw ParameterError("unary field needs at least 2 classes");
    }
    check_length(costs_.size(), height_ * width_ * num_classes_, "unary field");
    for (double c : costs_) {
        if (!std::isfinite(c) || c < 0.0) {
            throw ParameterError("unary cost must be finite and non-negative, got " + std::to_string(c));
        }
    }
}

MarginalField::MarginalField(std::size_t height, std::size_t width, std::size_t num_classes, std::vector<double> q)
    : height_(height), width_(width), num_classes_(num_classes), q_(std::move(q)) {
    if (num_classes_ < 2) {
        throw ParameterError("marginal field needs at least 2 classes");
    }
    check_length(q_.size(), height_ * width_ * num_classes_, "marginal field");
    for (std::size_t i = 0; i < height_ * width_; ++i) {
        double sum = 0.0;
        for (std::size_t l = 0; l < num_classes_; ++l) {
            const double v = q_[i * num_classes_ + l];
            if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                throw ParameterError("marginal outside [0,1] at pixel " + std::to_string(i));
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > kMarginalSumTolerance) {
            throw ParameterError("marginals of pixel " + std::to_string(i) + " sum to " + std::to_string(sum));
        }
    }
}

}  // namespace crfseg
