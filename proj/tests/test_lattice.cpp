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
#include "support.hpp"

using namespace crfseg;
using doctest::Approx;

namespace {

struct ContractError {
    double ones_relative = 0.0;
    double values_scaled = 0.0;
};

// Worst errors against brute force, in the units of the accuracy contract:
// relative error of the all-ones response and absolute error over max output.
ContractError contract_error(const ValueField& values, const FeatureField& features, const LatticeOptions& options) {
    const PermutohedralLattice lattice(features, options);
    const ValueField ones(features.pixel_count(), 1, 1.0);
    const auto exact_ones = brute_force_filter(ones, features).values;
    const auto fast_ones = lattice.filter(ones).values;
    ContractError err;
    for (std::size_t i = 0; i < exact_ones.size(); ++i) {
        err.ones_relative = std::max(err.ones_relative, std::abs(fast_ones[i] - exact_ones[i]) / exact_ones[i]);
    }
    const auto exact = brute_force_filter(values, features).values;
    const auto fast = lattice.filter(values).values;
    const double peak = *std::max_element(exact.begin(), exact.end());
    err.values_scaled = testing::max_abs_diff(fast, exact) / peak;
    return err;
}

FeatureField random_bilateral(std::size_t h, std::size_t w, std::size_t channels, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double theta_alpha = 1.0 + 9.0 * u(rng);
    const double theta_beta = 0.05 + 0.45 * u(rng);
    return make_bilateral_features(testing::random_image(h, w, channels, rng), theta_alpha, theta_beta);
}

}  // namespace

TEST_SUITE("lattice") {

TEST_CASE("impulse on a spatial grid reproduces the Gaussian bump") {
    const FeatureField f = make_spatial_features(8, 8, 1.5);
    ValueField impulse(64, 1);
    impulse.at(3 * 8 + 4, 0) = 1.0;
    const auto err = contract_error(impulse, f, {});
    CHECK(err.ones_relative <= 0.05);
    CHECK(err.values_scaled <= 0.05);
    const auto out = fast_filter(impulse, f).values;
    CHECK(out[3 * 8 + 4] == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("16x16 bilateral field stays inside the accuracy contract") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 3; ++trial) {
        const FeatureField f = random_bilateral(16, 16, 3, rng);
        REQUIRE(f.dim() == 5);
        const auto err = contract_error(testing::random_values(256, 2, rng), f, {});
        CHECK(err.ones_relative <= 0.05);
        CHECK(err.values_scaled <= 0.05);
    }
}

TEST_CASE("every interpolation mode and resolution meets the contract") {
    std::mt19937_64 rng(43);
    const FeatureField f5 = random_bilateral(12, 12, 3, rng);
    const FeatureField f3 = random_bilateral(12, 12, 1, rng);
    const FeatureField f2 = make_spatial_features(12, 12, 2.5);
    const ValueField v = testing::random_values(144, 1, rng);
    for (const FeatureField* f : {&f2, &f3, &f5}) {
        for (double res : {1.25, 1.5, 2.0}) {
            LatticeOptions eq;
            eq.interpolation = LatticeInterpolation::equalized;
            eq.resolution = res;
            const auto e = contract_error(v, *f, eq);
            CHECK(e.ones_relative <= 0.05);
            CHECK(e.values_scaled <= 0.05);
        }
        for (double res : {2.0, 2.5, 3.0}) {
            LatticeOptions bary;
            bary.interpolation = LatticeInterpolation::barycentric;
            bary.resolution = res;
            const auto e = contract_error(v, *f, bary);
            CHECK(e.ones_relative <= 0.05);
            CHECK(e.values_scaled <= 0.05);
        }
    }
}

TEST_CASE("finer barycentric lattices are more accurate") {
    std::mt19937_64 rng(47);
    const FeatureField f = random_bilateral(14, 14, 3, rng);
    const ValueField v = testing::random_values(196, 1, rng);
    LatticeOptions coarse;
    coarse.interpolation = LatticeInterpolation::barycentric;
    coarse.resolution = 1.0;
    LatticeOptions fine = coarse;
    fine.resolution = 3.0;
    CHECK(contract_error(v, f, fine).ones_relative < contract_error(v, f, coarse).ones_relative);
}

TEST_CASE("automatic selection follows the work budgets") {
    std::mt19937_64 rng(53);
    const PermutohedralLattice small(random_bilateral(16, 16, 3, rng));
    CHECK(small.interpolation() == LatticeInterpolation::equalized);
    CHECK(small.dim() == 5);
    CHECK(small.pixel_count() == 256);

    const PermutohedralLattice large(random_bilateral(96, 96, 3, rng));
    CHECK(large.interpolation() == LatticeInterpolation::barycentric);
    CHECK(std::find(std::begin(kResolutionLadder), std::end(kResolutionLadder), large.resolution()) !=
          std::end(kResolutionLadder));

    LatticeOptions tight;
    tight.max_blur_pairs = 1;
    const PermutohedralLattice coarsest(random_bilateral(96, 96, 3, rng), tight);
    CHECK(coarsest.resolution() == kResolutionLadder[0]);
    CHECK(coarsest.vertex_count() > 0);
    CHECK(coarsest.blur_pair_count() > 0);
}

TEST_CASE("fast filter is linear, symmetric and non-negative") {
    std::mt19937_64 rng(59);
    const FeatureField f = random_bilateral(20, 20, 3, rng);
    const PermutohedralLattice lattice(f);
    const ValueField u = testing::random_values(400, 2, rng);
    const ValueField v = testing::random_values(400, 2, rng);
    ValueField mix(400, 2);
    for (std::size_t k = 0; k < mix.values.size(); ++k) mix.values[k] = 1.5 * u.values[k] + 0.25 * v.values[k];
    const auto fu = lattice.filter(u).values;
    const auto fv = lattice.filter(v).values;
    const auto fm = lattice.filter(mix).values;
    for (std::size_t k = 0; k < fm.size(); ++k) CHECK(std::abs(fm[k] - (1.5 * fu[k] + 0.25 * fv[k])) < 1e-6);
    const double a = std::inner_product(fu.begin(), fu.end(), v.values.begin(), 0.0);
    const double b = std::inner_product(u.values.begin(), u.values.end(), fv.begin(), 0.0);
    CHECK(a == Approx(b).epsilon(1e-9));
    for (double x : fu) CHECK(x >= -1e-9);
}

TEST_CASE("normalized filter") {
    std::mt19937_64 rng(61);
    const FeatureField f = random_bilateral(9, 11, 3, rng);
    for (double x : normalized_filter(ValueField(99, 3, 1.0), f).values) CHECK(x == 1.0);
    for (double x : normalized_filter(ValueField(99, 1, 0.37), f).values) CHECK(x == Approx(0.37).epsilon(1e-6));
    const FeatureField single(1, 1, 5, {0.1, 0.2, 0.3, 0.4, 0.5});
    CHECK(normalized_filter(ValueField(1, 2, std::vector<double>{0.25, 4.0}), single).values ==
          std::vector<double>{0.25, 4.0});
    CHECK_THROWS_AS(normalized_filter(ValueField(98, 1), f), ShapeError);
}

TEST_CASE("thread count does not change results beyond 1e-6") {
    std::mt19937_64 rng(67);
    const FeatureField f = random_bilateral(40, 40, 3, rng);
    const ValueField v = testing::random_values(1600, 3, rng);
    LatticeOptions one;
    LatticeOptions four;
    four.threads = 4;
    const auto a = fast_filter(v, f, one).values;
    CHECK(testing::max_abs_diff(a, fast_filter(v, f, four).values) < 1e-6);
    CHECK(a == fast_filter(v, f, one).values);
}

TEST_CASE("bad options and shapes are rejected") {
    const FeatureField f9(2, 2, 9, std::vector<double>(36, 0.0));
    CHECK_THROWS_AS(PermutohedralLattice{f9}, ParameterError);
    const FeatureField f6(2, 2, 6, std::vector<double>(24, 0.0));
    CHECK_NOTHROW(PermutohedralLattice{f6});
    LatticeOptions eq;
    eq.interpolation = LatticeInterpolation::equalized;
    CHECK_THROWS_AS(PermutohedralLattice(f6, eq), ParameterError);
    LatticeOptions res;
    res.resolution = 0.5;
    CHECK_THROWS_AS(PermutohedralLattice(f6, res), ParameterError);
    res.resolution = 4.5;
    CHECK_THROWS_AS(PermutohedralLattice(f6, res), ParameterError);
    LatticeOptions trunc;
    trunc.truncation = 0.0;
    CHECK_THROWS_AS(PermutohedralLattice(f6, trunc), ParameterError);
    CHECK_THROWS_AS(fast_filter(ValueField(3, 1), f6), ShapeError);
}

}  // TEST_SUITE
