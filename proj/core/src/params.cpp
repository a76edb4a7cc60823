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

#include "crfseg/params.hpp"

#include <cmath>
#include <string>

#include "crfseg/errors.hpp"

namespace crfseg {

std::string_view to_string(ModelKind kind) noexcept {
    return kind == ModelKind::dense ? "dense" : "grid";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "dense") return ModelKind::dense;
    if (name == "grid") return ModelKind::grid;
    throw ParameterError("unknown model '" + std::string(name) + "' (valid: dense, grid)");
}

CrfParams validate_params(const CrfParams& params, std::size_t num_classes) {
    if (num_classes < 2) {
        throw ParameterError("need at least 2 classes");
    }
    const double p = params.label_confidence;
    const double lower = 1.0 / static_cast<double>(num_classes);
    if (!std::isfinite(p) || p <= lower || p >= 1.0) {
        throw ParameterError("confidence out of range: p=" + std::to_string(p) + " must lie strictly inside (" +
                             std::to_string(lower) + ", 1)");
    }
    for (double width : {params.theta_alpha, params.theta_beta, params.theta_gamma}) {
        if (!std::isfinite(width) || width <= 0.0) {
            throw ParameterError("invalid kernel width: " + std::to_string(width));
        }
    }
    for (double weight : {params.w_appearance, params.w_smoothness, params.w_grid}) {
        if (!std::isfinite(weight) || weight < 0.0) {
            throw ParameterError("invalid kernel weight: " + std::to_string(weight));
        }
    }
    if (params.iterations < 0) {
        throw ParameterError("iteration count must be non-negative");
    }
    if (!(params.damping > 0.0 && params.damping <= 1.0)) {
        throw ParameterError("damping must lie in (0, 1]");
    }
    return params;
}

}  // namespace crfseg
