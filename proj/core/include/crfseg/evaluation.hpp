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
#include <optional>
#include <utility>
#include <vector>

#include "crfseg/types.hpp"

namespace crfseg {

struct EvalReport {
    std::size_t num_classes = 0;
    double pixel_accuracy = 0.0;
    /// Row-major, rows = ground truth, columns = prediction.
    std::vector<std::uint64_t> confusion;
    /// TP / (TP + FP + FN); empty for classes absent from both maps.
    std::vector<std::optional<double>> per_class_iou;
    /// Mean over the defined entries of per_class_iou.
    double mean_iou = 0.0;

    std::uint64_t count(std::size_t truth, std::size_t pred) const { return confusion[truth * num_classes + pred]; }

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport evaluate(const LabelMap& pred, const LabelMap& truth);

struct SweepRow {
    double p = 0.0;
    double pixel_accuracy = 0.0;
    double mean_iou = 0.0;

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepSummary {
    /// Sorted by p ascending.
    std::vector<SweepRow> rows;
    /// Informational: whether accuracy never drops as p grows.
    bool accuracy_non_decreasing = true;
};

/// Throws ParameterError on an empty list or repeated p.
SweepSummary sweep_report(const std::vector<std::pair<double, EvalReport>>& reports);

}  // namespace crfseg
