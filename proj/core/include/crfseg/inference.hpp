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
#include <optional>
#include <vector>

#include "crfseg/filtering.hpp"
#include "crfseg/params.hpp"
#include "crfseg/types.hpp"

namespace crfseg {

struct InferenceTrace {
    std::size_t iterations_run = 0;
    /// max |Q' - Q| over all pixels and classes, one entry per sweep.
    std::vector<double> per_iteration_max_delta;
    /// Energy of the final labeling; set only when requested and the image
    /// is small enough for exact evaluation.
    std::optional<double> final_energy;
};

/// How the dense pairwise sums are evaluated.
///   fast   appearance kernel on the lattice, smoothness kernel by the exact
///          separable grid filter
///   exact  brute force for both kernels (kMaxExactPixels guard)
enum class PairwiseMethod { fast, exact };

struct InferenceOptions {
    PairwiseMethod method = PairwiseMethod::fast;
    LatticeOptions lattice;
    /// 0 = machine parallelism. 1 is bitwise deterministic.
    int threads = 1;
    bool compute_energy = false;
};

/// Softmax of the negated unary costs.
MarginalField init_marginals(const UnaryField& unary);

/// Both Gaussian kernels of the dense model, bound to one image. Building is
/// the expensive part; steps reuse it.
class DenseKernels {
public:
    DenseKernels(const ImageTensor& image, const CrfParams& params, const InferenceOptions& options = {});

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }

    /// message_i(l) = sum_m w_m sum_{l' != l} (k_m * Q(l'))_i, each filtered
    /// response normalized by the all-ones response and with the self term
    /// removed.
    std::vector<double> message(const MarginalField& q) const;

private:
    std::size_t height_;
    std::size_t width_;
    double w_appearance_;
    double w_smoothness_;
    std::optional<GaussianFilter> appearance_;
    std::optional<GaussianFilter> smoothness_;
    int threads_;
};

MarginalField dense_mean_field_step(const MarginalField& q, const UnaryField& unary, const DenseKernels& kernels,
                                    const CrfParams& params);
MarginalField dense_mean_field_step(const MarginalField& q, const UnaryField& unary, const ImageTensor& image,
                                    const CrfParams& params, const InferenceOptions& options = {});

/// 4-connected Potts update: message_i(l) = w_grid * sum_{j in N4(i)} (1 - Q_j(l)).
MarginalField grid_mean_field_step(const MarginalField& q, const UnaryField& unary, const CrfParams& params);

struct InferenceResult {
    MarginalField marginals;
    LabelMap labels;
    InferenceTrace trace;
};

/// Per-pixel argmax; ties go to the lowest class index.
LabelMap map_labels(const MarginalField& q);

/// init_marginals followed by params.iterations steps of params.model.
InferenceResult run_inference(const UnaryField& unary, const ImageTensor& image, const CrfParams& params,
                              const InferenceOptions& options = {});

/// sum_i cost_i(x_i) + sum_{i<j} [x_i != x_j] (w_app k1(i,j) + w_sm k2(i,j)).
/// Throws SizeLimitError above kMaxExactPixels.
double dense_energy(const LabelMap& labels, const UnaryField& unary, const ImageTensor& image,
                    const CrfParams& params);

/// sum_i cost_i(x_i) + w_grid * (number of disagreeing 4-neighbor pairs).
double grid_energy(const LabelMap& labels, const UnaryField& unary, const CrfParams& params);

}  // namespace crfseg
