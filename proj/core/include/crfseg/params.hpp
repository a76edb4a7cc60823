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
#include <string_view>

namespace crfseg {

enum class ModelKind { dense, grid };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);

/// Parameters of one refinement run. Widths are in pixels (theta_alpha,
/// theta_gamma) and normalized intensity units (theta_beta).
struct CrfParams {
    /// Probability mass given to the observed label when building unaries.
    double label_confidence = 0.95;
    double theta_alpha = 80.0;
    double theta_beta = 0.05;
    double theta_gamma = 3.0;
    double w_appearance = 10.0;
    double w_smoothness = 3.0;
    int iterations = 5;
    ModelKind model = ModelKind::dense;
    /// Defaults to the smoothness weight: with 6 classes at p = 0.95 a weight
    /// below about 1.14 cannot overturn a label even when all 4 neighbors agree.
    double w_grid = 3.0;
    /// Q <- damping * update + (1 - damping) * Q. 1 disables damping.
    double damping = 1.0;
    /// Stop once the max |dQ| of a sweep drops below 1e-5.
    bool early_exit = false;

    friend bool operator==(const CrfParams&, const CrfParams&) = default;
};

/// Returns params unchanged when every field is valid for num_classes labels.
/// Throws ParameterError otherwise.
CrfParams validate_params(const CrfParams& params, std::size_t num_classes);

}  // namespace crfseg
