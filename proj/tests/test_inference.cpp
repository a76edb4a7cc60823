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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles/frozen_oracles.hpp"
#include "support.hpp"

using namespace crfseg;
using doctest::Approx;

namespace {

UnaryField uniform_unary(std::size_t h, std::size_t w, std::size_t classes) {
    return UnaryField(h, w, classes, std::vector<double>(h * w * classes, std::log(static_cast<double>(classes))));
}

MarginalField uniform_q(std::size_t h, std::size_t w, std::size_t classes) {
    return MarginalField(h, w, classes, std::vector<double>(h * w * classes, 1.0 / static_cast<double>(classes)));
}

ImageTensor oracle_image8() {
    std::vector<double> data;
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 8; ++c) {
            const double base[2][3] = {{0.8, 0.7, 0.3}, {0.2, 0.3, 0.7}};
            for (int ch = 0; ch < 3; ++ch) data.push_back(base[c < 4 ? 0 : 1][ch] + (((r * 8 + c) * 3 + ch) * 13 % 7) / 100.0);
        }
    }
    return ImageTensor(8, 8, 3, data);
}

LabelMap oracle_labels8() {
    std::vector<Label> labels;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) labels.push_back(c < 4 ? 0 : 1);
    labels[2 * 8 + 1] = 1;
    return LabelMap(8, 8, 2, labels);
}

CrfParams zero_pairwise() {
    CrfParams p;
    p.w_appearance = 0.0;
    p.w_smoothness = 0.0;
    p.w_grid = 0.0;
    return p;
}

std::vector<Label> unary_argmin(const UnaryField& u) {
    std::vector<Label> out;
    for (std::size_t i = 0; i < u.pixel_count(); ++i) {
        const auto c = u.pixel(i);
        out.push_back(static_cast<Label>(std::min_element(c.begin(), c.end()) - c.begin()));
    }
    return out;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("init marginals invert the unary construction") {
    const LabelMap labels(2, 2, 2, {0, 1, 1, 0});
    for (double p : {0.7, 0.9}) {
        const MarginalField q = init_marginals(unary_from_labels(labels, p));
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(q.pixel(i)[labels[i]] == Approx(p).epsilon(1e-12));
            CHECK(q.pixel(i)[1 - labels[i]] == Approx(1 - p).epsilon(1e-12));
        }
    }
    const MarginalField u = init_marginals(uniform_unary(3, 2, 4));
    for (double x : u.values()) CHECK(x == Approx(0.25).epsilon(1e-15));
    const MarginalField big = init_marginals(UnaryField(1, 1, 2, {1000.0, 1001.0}));
    CHECK(big.values()[0] == Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("exact dense step matches the frozen 8x8 oracle") {
    CrfParams params;
    params.label_confidence = 0.8;
    params.w_appearance = 4.0;
    params.theta_alpha = 3.0;
    params.theta_beta = 0.2;
    params.w_smoothness = 2.0;
    params.theta_gamma = 1.5;
    const UnaryField unary = unary_from_labels(oracle_labels8(), 0.8);
    InferenceOptions exact;
    exact.method = PairwiseMethod::exact;
    const MarginalField q = dense_mean_field_step(init_marginals(unary), unary, oracle_image8(), params, exact);
    REQUIRE(q.values().size() == std::size(oracles::kDenseStep8x8));
    for (std::size_t k = 0; k < q.values().size(); ++k) CHECK(q.values()[k] == Approx(oracles::kDenseStep8x8[k]).epsilon(1e-10));
    CHECK(map_labels(q).at(2, 1) == 0);

    const MarginalField fast = dense_mean_field_step(init_marginals(unary), unary, oracle_image8(), params);
    CHECK(testing::max_abs_diff({fast.values().begin(), fast.values().end()}, {q.values().begin(), q.values().end()}) < 0.05);
}

TEST_CASE("grid step matches the frozen 3x3 oracle") {
    const LabelMap labels(3, 3, 3, {0, 0, 1, 0, 2, 1, 1, 1, 1});
    const UnaryField unary = unary_from_labels(labels, 0.7);
    CrfParams params;
    params.model = ModelKind::grid;
    params.w_grid = 0.8;
    const MarginalField q = grid_mean_field_step(init_marginals(unary), unary, params);
    REQUIRE(q.values().size() == std::size(oracles::kGridStep3x3));
    for (std::size_t k = 0; k < q.values().size(); ++k) CHECK(q.values()[k] == Approx(oracles::kGridStep3x3[k]).epsilon(1e-12));
}

TEST_CASE("grid message counts disagreeing neighbors") {
    std::vector<double> q;
    for (int i = 0; i < 9; ++i) {
        q.push_back(i == 4 ? 0.5 : 1.0);
        q.push_back(i == 4 ? 0.5 : 0.0);
    }
    CrfParams params;
    params.w_grid = 0.6;
    const MarginalField out = grid_mean_field_step(MarginalField(3, 3, 2, q), uniform_unary(3, 3, 2), params);
    // Center: class 1 pays 4 * w_grid more than class 0.
    CHECK(out.pixel(4)[1] / out.pixel(4)[0] == Approx(std::exp(-4 * 0.6)).epsilon(1e-12));
    // Corner (0,0) sees (0,1) and (1,0), both certain of class 0.
    CHECK(out.pixel(0)[1] / out.pixel(0)[0] == Approx(std::exp(-2 * 0.6)).epsilon(1e-12));
}

TEST_CASE("uniform marginals are a fixed point of both models") {
    std::mt19937_64 rng(71);
    const ImageTensor image = testing::random_image(12, 10, 3, rng);
    const UnaryField unary = uniform_unary(12, 10, 3);
    CrfParams params;
    for (PairwiseMethod method : {PairwiseMethod::fast, PairwiseMethod::exact}) {
        InferenceOptions options;
        options.method = method;
        const MarginalField q = dense_mean_field_step(uniform_q(12, 10, 3), unary, image, params, options);
        for (double x : q.values()) CHECK(x == Approx(1.0 / 3.0).epsilon(1e-6));
    }
    const MarginalField g = grid_mean_field_step(uniform_q(12, 10, 3), unary, params);
    for (double x : g.values()) CHECK(x == Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("zero pairwise weights return the unary marginals") {
    std::mt19937_64 rng(73);
    const ImageTensor image = testing::random_image(7, 9, 3, rng);
    const LabelMap labels = testing::random_labels(7, 9, 4, rng);
    const UnaryField unary = unary_from_labels(labels, 0.6);
    const MarginalField start = init_marginals(unary_from_labels(testing::random_labels(7, 9, 4, rng), 0.9));
    const CrfParams params = zero_pairwise();
    const MarginalField expected = init_marginals(unary);
    CHECK(dense_mean_field_step(start, unary, image, params) == expected);
    CHECK(grid_mean_field_step(start, unary, params) == expected);
    for (ModelKind model : {ModelKind::dense, ModelKind::grid}) {
        CrfParams p = params;
        p.model = model;
        p.iterations = 7;
        const InferenceResult r = run_inference(unary, image, p);
        CHECK(r.labels == labels);
        CHECK(std::vector<Label>(r.labels.labels().begin(), r.labels.labels().end()) == unary_argmin(unary));
    }
}

TEST_CASE("zero iterations return the input labels") {
    std::mt19937_64 rng(79);
    const LabelMap labels = testing::random_labels(10, 10, 6, rng);
    CrfParams params;
    params.iterations = 0;
    const InferenceResult r = run_inference(unary_from_labels(labels, 0.5), testing::random_image(10, 10, 3, rng), params);
    CHECK(r.labels == labels);
    CHECK(r.trace.iterations_run == 0);
    CHECK(r.trace.per_iteration_max_delta.empty());
}

TEST_CASE("trace, damping and early exit") {
    std::mt19937_64 rng(83);
    const Fixture fx = gen_fixture(FixtureKind::binary_blobs, 24, 24, 0.1, 5);
    const UnaryField unary = unary_from_labels(fx.noisy, 0.9);
    CrfParams params;
    params.iterations = 6;
    const InferenceResult plain = run_inference(unary, fx.image, params);
    CHECK(plain.trace.iterations_run == 6);
    REQUIRE(plain.trace.per_iteration_max_delta.size() == 6);
    for (double d : plain.trace.per_iteration_max_delta) CHECK(d >= 0.0);
    testing::check_normalized(plain.marginals);

    CrfParams damped = params;
    damped.damping = 0.5;
    const InferenceResult half = run_inference(unary, fx.image, damped);
    CHECK(half.trace.per_iteration_max_delta[0] == Approx(0.5 * plain.trace.per_iteration_max_delta[0]).epsilon(1e-12));
    testing::check_normalized(half.marginals);

    CrfParams early = params;
    early.iterations = 200;
    early.early_exit = true;
    const InferenceResult stopped = run_inference(unary, fx.image, early);
    CHECK(stopped.trace.iterations_run < 200);
    CHECK(stopped.trace.per_iteration_max_delta.back() < 1e-5);
    CHECK(stopped.trace.per_iteration_max_delta.size() == stopped.trace.iterations_run);
}

TEST_CASE("energy is reported only when asked for and small enough") {
    const Fixture fx = gen_fixture(FixtureKind::binary_blobs, 16, 16, 0.1, 9);
    const UnaryField unary = unary_from_labels(fx.noisy, 0.9);
    CrfParams params;
    CHECK_FALSE(run_inference(unary, fx.image, params).trace.final_energy);
    InferenceOptions options;
    options.compute_energy = true;
    const InferenceResult r = run_inference(unary, fx.image, params, options);
    REQUIRE(r.trace.final_energy);
    CHECK(*r.trace.final_energy == Approx(dense_energy(r.labels, unary, fx.image, params)));
    // Mean field should not end above the energy of the noisy input.
    CHECK(*r.trace.final_energy <= dense_energy(fx.noisy, unary, fx.image, params));
}

TEST_CASE("dense energy") {
    CrfParams params;
    params.w_appearance = 2.0;
    params.theta_alpha = 1.5;
    params.theta_beta = 0.3;
    params.w_smoothness = 1.0;
    params.theta_gamma = 1.0;
    std::vector<double> gray;
    for (int k = 0; k < 9; ++k) gray.push_back((k * 5 % 9) / 8.0);
    const LabelMap labels(3, 3, 2, {0, 1, 0, 1, 1, 0, 0, 0, 1});
    const UnaryField unary = unary_from_labels(labels, 0.75);
    CHECK(dense_energy(labels, unary, ImageTensor(3, 3, 1, gray), params) ==
          Approx(oracles::kDenseEnergy3x3[0]).epsilon(1e-12));

    const UnaryField single(1, 1, 2, {0.4, 1.7});
    CHECK(dense_energy(LabelMap(1, 1, 2, {1}), single, ImageTensor(1, 1, 1, {0.5}), params) == 1.7);
    const UnaryField pair(1, 2, 2, {0.1, 2.0, 0.3, 1.0});
    CHECK(dense_energy(LabelMap(1, 2, 2, {0, 0}), pair, ImageTensor(1, 2, 1, {0.0, 1.0}), params) == Approx(0.4));

    const Fixture big = gen_fixture(FixtureKind::binary_blobs, 65, 64, 0.0, 1);
    CHECK_THROWS_WITH_AS(dense_energy(big.clean, unary_from_labels(big.clean, 0.9), big.image, params),
                         doctest::Contains("too large for exact energy"), SizeLimitError);
}

TEST_CASE("grid energy") {
    const LabelMap labels(2, 2, 2, {0, 1, 1, 1});
    const UnaryField unary(2, 2, 2, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
    CrfParams params;
    params.w_grid = 1.5;
    CHECK(grid_energy(labels, unary, params) == Approx(0.1 + 0.4 + 0.6 + 0.8 + 2 * 1.5));
}

TEST_CASE("fast and exact pairwise agree after five iterations") {
    std::mt19937_64 rng(89);
    for (int trial = 0; trial < 3; ++trial) {
        const Fixture fx = gen_fixture(FixtureKind::binary_blobs, 32, 32, 0.15, rng());
        const UnaryField unary = unary_from_labels(fx.noisy, 0.8);
        CrfParams params;
        params.theta_alpha = 10.0;
        params.theta_beta = 0.2;
        InferenceOptions exact;
        exact.method = PairwiseMethod::exact;
        const InferenceResult a = run_inference(unary, fx.image, params);
        const InferenceResult b = run_inference(unary, fx.image, params, exact);
        std::size_t agree = 0;
        for (std::size_t i = 0; i < 1024; ++i) agree += a.labels[i] == b.labels[i];
        CHECK(agree >= 1014);
        CHECK(testing::max_abs_diff({a.marginals.values().begin(), a.marginals.values().end()},
                                    {b.marginals.values().begin(), b.marginals.values().end()}) <= 0.05);
    }
}

TEST_CASE("denoising beats the input accuracy") {
    const Fixture fx = gen_fixture(FixtureKind::binary_blobs, 64, 64, 0.1, 2024);
    const InferenceResult r = run_inference(unary_from_labels(fx.noisy, 0.95), fx.image, CrfParams{});
    CHECK(evaluate(r.labels, fx.clean).pixel_accuracy > evaluate(fx.noisy, fx.clean).pixel_accuracy);
    testing::check_normalized(r.marginals);
}

TEST_CASE("confidence near one keeps the input labels") {
    for (FixtureKind kind : {FixtureKind::binary_blobs, FixtureKind::potsdam_mosaic}) {
        const Fixture fx = gen_fixture(kind, 48, 48, 0.1, 7);
        const InferenceResult r = run_inference(unary_from_labels(fx.noisy, 1.0 - 1e-6), fx.image, CrfParams{});
        CHECK(r.labels == fx.noisy);
    }
}

TEST_CASE("relabeling classes relabels the output") {
    const Fixture fx = gen_fixture(FixtureKind::potsdam_mosaic, 40, 40, 0.15, 3);
    const std::vector<Label> perm = {3, 5, 0, 1, 4, 2};
    std::vector<Label> permuted;
    for (Label l : fx.noisy.labels()) permuted.push_back(perm[l]);
    for (ModelKind model : {ModelKind::dense, ModelKind::grid}) {
        CrfParams params;
        params.model = model;
        const InferenceResult a = run_inference(unary_from_labels(fx.noisy, 0.9), fx.image, params);
        const InferenceResult b =
            run_inference(unary_from_labels(LabelMap(40, 40, 6, permuted), 0.9), fx.image, params);
        for (std::size_t i = 0; i < 1600; ++i) CHECK(b.labels[i] == perm[a.labels[i]]);
    }
}

TEST_CASE("single-threaded runs are bitwise reproducible and threads stay within 1e-6") {
    const Fixture fx = gen_fixture(FixtureKind::potsdam_mosaic, 64, 64, 0.15, 11);
    const UnaryField unary = unary_from_labels(fx.noisy, 0.9);
    const InferenceResult a = run_inference(unary, fx.image, CrfParams{});
    const InferenceResult b = run_inference(unary, fx.image, CrfParams{});
    CHECK(a.marginals == b.marginals);
    CHECK(a.labels == b.labels);
    InferenceOptions many;
    many.threads = 4;
    const InferenceResult c = run_inference(unary, fx.image, CrfParams{}, many);
    CHECK(testing::max_abs_diff({a.marginals.values().begin(), a.marginals.values().end()},
                                {c.marginals.values().begin(), c.marginals.values().end()}) < 1e-6);
}

TEST_CASE("argmax ties go to the lowest class") {
    const MarginalField q(1, 3, 3, {0.4, 0.4, 0.2, 0.2, 0.4, 0.4, 1.0 / 3, 1.0 / 3, 1.0 / 3});
    const LabelMap m = map_labels(q);
    CHECK(m[0] == 0);
    CHECK(m[1] == 1);
    CHECK(m[2] == 0);
}

TEST_CASE("shape mismatches are reported") {
    std::mt19937_64 rng(97);
    const UnaryField unary = uniform_unary(4, 4, 2);
    CHECK_THROWS_AS(run_inference(unary, testing::random_image(4, 5, 3, rng), CrfParams{}), ShapeError);
    CHECK_THROWS_AS(grid_mean_field_step(uniform_q(4, 4, 3), unary, CrfParams{}), ShapeError);
    CHECK_THROWS_AS(grid_mean_field_step(uniform_q(4, 3, 2), unary, CrfParams{}), ShapeError);
    CrfParams bad;
    bad.label_confidence = 0.4;
    CHECK_THROWS_AS(run_inference(unary, testing::random_image(4, 4, 3, rng), bad), ParameterError);
}

}  // TEST_SUITE
