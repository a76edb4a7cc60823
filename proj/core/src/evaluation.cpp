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

#include "crfseg/evaluation.hpp"

#include <algorithm>
#include <string>

#include "crfseg/errors.hpp"

namespace crfseg {

EvalReport evaluate(const LabelMap& pred, const LabelMap& truth) {
    if (pred.height() != truth.height() || pred.width() != truth.width()) {
        throw ShapeError("prediction is " + std::to_string(pred.height()) + "x" + std::to_string(pred.width()) +
                         ", ground truth is " + std::to_string(truth.height()) + "x" + std::to_string(truth.width()));
    }
    if (pred.num_classes() != truth.num_classes()) {
        throw ShapeError("prediction has " + std::to_string(pred.num_classes()) + " classes, ground truth has " +
                         std::to_string(truth.num_classes()));
    }
    const std::size_t L = truth.num_classes();
    EvalReport report;
    report.num_classes = L;
    report.confusion.assign(L * L, 0);
    for (std::size_t i = 0; i < truth.pixel_count(); ++i) {
        ++report.confusion[static_cast<std::size_t>(truth[i]) * L + static_cast<std::size_t>(pred[i])];
    }
    std::uint64_t correct = 0;
    for (std::size_t c = 0; c < L; ++c) correct += report.count(c, c);
    const std::size_t n = truth.pixel_count();
    report.pixel_accuracy = n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);

    report.per_class_iou.assign(L, std::nullopt);
    double iou_sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t c = 0; c < L; ++c) {
        std::uint64_t union_count = 0;
        for (std::size_t k = 0; k < L; ++k) union_count += report.count(c, k) + report.count(k, c);
        union_count -= report.count(c, c);
        if (union_count == 0) continue;
        const double iou = static_cast<double>(report.count(c, c)) / static_cast<double>(union_count);
        report.per_class_iou[c] = iou;
        iou_sum += iou;
        ++defined;
    }
    report.mean_iou = defined == 0 ? 0.0 : iou_sum / static_cast<double>(defined);
    return report;
}

SweepSummary sweep_report(const std::vector<std::pair<double, EvalReport>>& reports) {
    if (reports.empty()) throw ParameterError("sweep report needs at least one entry");
    SweepSummary summary;
    for (const auto& [p, report] : reports) summary.rows.push_back({p, report.pixel_accuracy, report.mean_iou});
    std::stable_sort(summary.rows.begin(), summary.rows.end(),
                     [](const SweepRow& a, const SweepRow& b) { return a.p < b.p; });
    for (std::size_t k = 1; k < summary.rows.size(); ++k) {
        if (summary.rows[k].p == summary.rows[k - 1].p) {
            throw ParameterError("duplicate p value " + std::to_string(summary.rows[k].p) + " in sweep");
        }
        if (summary.rows[k].pixel_accuracy < summary.rows[k - 1].pixel_accuracy) summary.accuracy_non_decreasing = false;
    }
    return summary;
}

}  // namespace crfseg
