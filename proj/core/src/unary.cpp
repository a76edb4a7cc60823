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

#include "crfseg/unary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crfseg/errors.hpp"

namespace crfseg {

UnaryField unary_from_labels(const LabelMap& labels, double confidence) {
    const std::size_t num_classes = labels.num_classes();
    const double lower = 1.0 / static_cast<double>(num_classes);
    if (!std::isfinite(confidence) || confidence <= lower || confidence >= 1.0) {
        throw ParameterError("confidence out of range: p=" + std::to_string(confidence) + " must lie strictly inside (" +
                             std::to_string(lower) + ", 1)");
    }
    const double observed = -std::log(confidence);
    const double other = -std::log((1.0 - confidence) / static_cast<double>(num_classes - 1));

    std::vector<double> costs(labels.pixel_count() * num_classes, other);
    for (std::size_t i = 0; i < labels.pixel_count(); ++i) {
        costs[i * num_classes + static_cast<std::size_t>(labels[i])] = observed;
    }
    return UnaryField(labels.height(), labels.width(), num_classes, std::move(costs));
}

UnaryField unary_from_probabilities(const MarginalField& probs, double floor) {
    if (!(floor > 0.0 && floor < 1.0)) {
        throw ParameterError("probability floor must lie in (0, 1)");
    }
    std::vector<double> costs(probs.values().size());
    std::transform(probs.values().begin(), probs.values().end(), costs.begin(),
                   [floor](double q) { return -std::log(std::max(q, floor)); });
    return UnaryField(probs.height(), probs.width(), probs.num_classes(), std::move(costs));
}

}  // namespace crfseg
