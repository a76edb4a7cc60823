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

#include "crfseg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crfseg/errors.hpp"
#include "crfseg/parallel.hpp"

namespace crfseg {
namespace {

constexpr double kEarlyExitDelta = 1e-5;

void check_same_grid(std::size_t h1, std::size_t w1, std::size_t h2, std::size_t w2, const char* what) {
    if (h1 != h2 || w1 != w2) {
        throw ShapeError(std::string(what) + ": " + std::to_string(h1) + "x" + std::to_string(w1) + " vs " +
                         std::to_string(h2) + "x" + std::to_string(w2));
    }
}

void check_step_inputs(const MarginalField& q, const UnaryField& unary) {
    check_same_grid(q.height(), q.width(), unary.height(), unary.width(), "marginals vs unary");
    if (q.num_classes() != unary.num_classes()) {
        throw ShapeError("marginals have " + std::to_string(q.num_classes()) + " classes, unary has " +
                         std::to_string(unary.num_classes()));
    }
}

// Q'_i(l) proportional to exp(-cost_i(l) - message_i(l)), then optional
// damping towards the previous Q.
MarginalField update(const MarginalField& q, const UnaryField& unary, const std::vector<double>& message,
                     double damping, int threads) {
    const std::size_t n = q.pixel_count();
    const std::size_t labels = q.num_classes();
    const std::size_t width = q.width();
    std::vector<double> out(n * labels);
    const auto costs = unary.costs();
    const auto previous = q.values();
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t base = i * labels;
            double top = -HUGE_VAL;
            for (std::size_t l = 0; l < labels; ++l) {
                const double e = -costs[base + l] - message[base + l];
                out[base + l] = e;
                top = std::max(top, e);
            }
            if (!std::isfinite(top)) throw NumericalError("non-finite mean-field energy", i / width, i % width);
            double sum = 0.0;
            for (std::size_t l = 0; l < labels; ++l) {
                out[base + l] = std::exp(out[base + l] - top);
                sum += out[base + l];
            }
            for (std::size_t l = 0; l < labels; ++l) {
                double v = out[base + l] / sum;
                if (damping != 1.0) v = damping * v + (1.0 - damping) * previous[base + l];
                out[base + l] = v;
            }
        }
    });
    return MarginalField(q.height(), q.width(), labels, std::move(out));
}

std::optional<GaussianFilter> make_kernel(FeatureField features, double weight, const InferenceOptions& options,
                                          bool spatial_only) {
    if (weight == 0.0) return std::nullopt;
    if (options.method == PairwiseMethod::exact) return GaussianFilter(std::move(features), FilterMethod::exact);
    LatticeOptions lattice = options.lattice;
    lattice.threads = options.threads;
    return GaussianFilter(std::move(features), spatial_only ? FilterMethod::separable : FilterMethod::lattice,
                          lattice);
}

}  // namespace

MarginalField init_marginals(const UnaryField& unary) {
    const std::size_t labels = unary.num_classes();
    const auto costs = unary.costs();
    std::vector<double> q(costs.size());
    for (std::size_t i = 0; i < unary.pixel_count(); ++i) {
        const std::size_t base = i * labels;
        const double lowest = *std::min_element(costs.begin() + static_cast<std::ptrdiff_t>(base),
                                                costs.begin() + static_cast<std::ptrdiff_t>(base + labels));
        double sum = 0.0;
        for (std::size_t l = 0; l < labels; ++l) {
            q[base + l] = std::exp(lowest - costs[base + l]);
            sum += q[base + l];
        }
        for (std::size_t l = 0; l < labels; ++l) q[base + l] /= sum;
    }
    return MarginalField(unary.height(), unary.width(), labels, std::move(q));
}

DenseKernels::DenseKernels(const ImageTensor& image, const CrfParams& params, const InferenceOptions& options)
    : height_(image.height()),
      width_(image.width()),
      w_appearance_(params.w_appearance),
      w_smoothness_(params.w_smoothness),
      threads_(options.threads) {
    appearance_ = make_kernel(make_bilateral_features(image, params.theta_alpha, params.theta_beta),
                              params.w_appearance, options, false);
    smoothness_ = make_kernel(make_spatial_features(height_, width_, params.theta_gamma), params.w_smoothness,
                              options, true);
}

std::vector<double> DenseKernels::message(const MarginalField& q) const {
    check_same_grid(q.height(), q.width(), height_, width_, "marginals vs image");
    const std::size_t n = q.pixel_count();
    const std::size_t labels = q.num_classes();
    std::vector<double> message(n * labels, 0.0);
    const ValueField values(n, labels, std::vector<double>(q.values().begin(), q.values().end()));
    const auto add = [&](const GaussianFilter& kernel, double weight) {
        const ValueField raw = kernel.apply(values);
        const auto norm = kernel.normalizer();
        parallel_for(n, threads_, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const std::size_t base = i * labels;
                const double scale = weight / norm[i];
                double total = 0.0;
                for (std::size_t l = 0; l < labels; ++l) total += raw.values[base + l] - values.values[base + l];
                for (std::size_t l = 0; l < labels; ++l) {
                    message[base + l] += scale * (total - (raw.values[base + l] - values.values[base + l]));
                }
            }
        });
    };
    if (appearance_) add(*appearance_, w_appearance_);
    if (smoothness_) add(*smoothness_, w_smoothness_);
    return message;
}

MarginalField dense_mean_field_step(const MarginalField& q, const UnaryField& unary, const DenseKernels& kernels,
                                    const CrfParams& params) {
    check_step_inputs(q, unary);
    return update(q, unary, kernels.message(q), params.damping, 1);
}

MarginalField dense_mean_field_step(const MarginalField& q, const UnaryField& unary, const ImageTensor& image,
                                    const CrfParams& params, const InferenceOptions& options) {
    check_step_inputs(q, unary);
    const DenseKernels kernels(image, params, options);
    return update(q, unary, kernels.message(q), params.damping, options.threads);
}

MarginalField grid_mean_field_step(const MarginalField& q, const UnaryField& unary, const CrfParams& params) {
    check_step_inputs(q, unary);
    const std::size_t h = q.height();
    const std::size_t w = q.width();
    const std::size_t labels = q.num_classes();
    const auto values = q.values();
    std::vector<double> message(values.size(), 0.0);
    if (params.w_grid != 0.0) {
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                double* m = message.data() + (r * w + c) * labels;
                const auto visit = [&](std::size_t j) {
                    for (std::size_t l = 0; l < labels; ++l) m[l] += params.w_grid * (1.0 - values[j * labels + l]);
                };
                if (r > 0) visit((r - 1) * w + c);
                if (r + 1 < h) visit((r + 1) * w + c);
                if (c > 0) visit(r * w + c - 1);
                if (c + 1 < w) visit(r * w + c + 1);
            }
        }
    }
    return update(q, unary, message, params.damping, 1);
}

LabelMap map_labels(const MarginalField& q) {
    const std::size_t labels = q.num_classes();
    const auto values = q.values();
    std::vector<Label> out(q.pixel_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto first = values.begin() + static_cast<std::ptrdiff_t>(i * labels);
        // max_element returns the first maximum, so ties go to the lowest index.
        out[i] = static_cast<Label>(std::max_element(first, first + static_cast<std::ptrdiff_t>(labels)) - first);
    }
    return LabelMap(q.height(), q.width(), labels, std::move(out));
}

InferenceResult run_inference(const UnaryField& unary, const ImageTensor& image, const CrfParams& params,
                              const InferenceOptions& options) {
    const CrfParams checked = validate_params(params, unary.num_classes());
    check_same_grid(unary.height(), unary.width(), image.height(), image.width(), "unary vs image");

    MarginalField q = init_marginals(unary);
    InferenceTrace trace;
    std::optional<DenseKernels> kernels;
    if (checked.model == ModelKind::dense && checked.iterations > 0) kernels.emplace(image, checked, options);

    for (int it = 0; it < checked.iterations; ++it) {
        MarginalField next = checked.model == ModelKind::dense
                                 ? update(q, unary, kernels->message(q), checked.damping, options.threads)
                                 : grid_mean_field_step(q, unary, checked);
        double delta = 0.0;
        for (std::size_t k = 0; k < q.values().size(); ++k) {
            delta = std::max(delta, std::abs(next.values()[k] - q.values()[k]));
        }
        q = std::move(next);
        trace.per_iteration_max_delta.push_back(delta);
        ++trace.iterations_run;
        if (checked.early_exit && delta < kEarlyExitDelta) break;
    }

    LabelMap labels = map_labels(q);
    if (options.compute_energy && unary.pixel_count() <= kMaxExactPixels) {
        trace.final_energy = checked.model == ModelKind::dense ? dense_energy(labels, unary, image, checked)
                                                               : grid_energy(labels, unary, checked);
    }
    return {std::move(q), std::move(labels), std::move(trace)};
}

double dense_energy(const LabelMap& labels, const UnaryField& unary, const ImageTensor& image,
                    const CrfParams& params) {
    const std::size_t n = labels.pixel_count();
    if (n > kMaxExactPixels) {
        throw SizeLimitError("image of " + std::to_string(n) + " pixels is too large for exact energy (limit " +
                             std::to_string(kMaxExactPixels) + ")");
    }
    check_same_grid(labels.height(), labels.width(), unary.height(), unary.width(), "labels vs unary");
    check_same_grid(labels.height(), labels.width(), image.height(), image.width(), "labels vs image");
    if (labels.num_classes() != unary.num_classes()) throw ShapeError("labels vs unary: class count mismatch");

    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) energy += unary.pixel(i)[static_cast<std::size_t>(labels[i])];

    const FeatureField appearance = make_bilateral_features(image, params.theta_alpha, params.theta_beta);
    const FeatureField smoothness = make_spatial_features(image.height(), image.width(), params.theta_gamma);
    const auto kernel = [](const FeatureField& f, std::size_t i, std::size_t j) {
        const auto a = f.pixel(i);
        const auto b = f.pixel(j);
        double dist = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) dist += (a[k] - b[k]) * (a[k] - b[k]);
        return std::exp(-0.5 * dist);
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (labels[i] == labels[j]) continue;
            energy += params.w_appearance * kernel(appearance, i, j) + params.w_smoothness * kernel(smoothness, i, j);
        }
    }
    return energy;
}

double grid_energy(const LabelMap& labels, const UnaryField& unary, const CrfParams& params) {
    check_same_grid(labels.height(), labels.width(), unary.height(), unary.width(), "labels vs unary");
    if (labels.num_classes() != unary.num_classes()) throw ShapeError("labels vs unary: class count mismatch");
    double energy = 0.0;
    std::size_t cuts = 0;
    for (std::size_t r = 0; r < labels.height(); ++r) {
        for (std::size_t c = 0; c < labels.width(); ++c) {
            const std::size_t i = r * labels.width() + c;
            energy += unary.pixel(i)[static_cast<std::size_t>(labels[i])];
            if (c + 1 < labels.width() && labels[i] != labels[i + 1]) ++cuts;
            if (r + 1 < labels.height() && labels[i] != labels[i + labels.width()]) ++cuts;
        }
    }
    return energy + params.w_grid * static_cast<double>(cuts);
}

}  // namespace crfseg
