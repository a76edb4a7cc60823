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

#include "crfseg/types.hpp"

namespace crfseg {

constexpr double kDefaultProbabilityFloor = 1e-8;

/// Hard labels to unaries: the observed label costs -ln(p), every other label
/// costs -ln((1 - p) / (L - 1)). p must lie strictly inside (1/L, 1).
UnaryField unary_from_labels(const LabelMap& labels, double confidence);

/// Soft labels to unaries: cost = -ln(max(q, floor)).
UnaryField unary_from_probabilities(const MarginalField& probs, double floor = kDefaultProbabilityFloor);

}  // namespace crfseg
