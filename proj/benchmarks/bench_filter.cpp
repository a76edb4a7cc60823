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

#include <benchmark/benchmark.h>

#include "crfseg/crfseg.hpp"

namespace {

crfseg::FeatureField bilateral(std::size_t side) {
    const auto fx = crfseg::gen_fixture(crfseg::FixtureKind::potsdam_mosaic, side, side, 0.0, 1);
    return crfseg::make_bilateral_features(fx.image, 80.0, 0.05);
}

void BM_LatticeBuild(benchmark::State& state) {
    const auto features = bilateral(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        crfseg::PermutohedralLattice lattice(features);
        benchmark::DoNotOptimize(lattice.vertex_count());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(features.pixel_count()));
}
BENCHMARK(BM_LatticeBuild)->Arg(64)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_LatticeFilter(benchmark::State& state) {
    const auto features = bilateral(static_cast<std::size_t>(state.range(0)));
    const crfseg::PermutohedralLattice lattice(features);
    const crfseg::ValueField values(features.pixel_count(), 6, 1.0 / 6.0);
    for (auto _ : state) benchmark::DoNotOptimize(lattice.filter(values));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(features.pixel_count()));
}
BENCHMARK(BM_LatticeFilter)->Arg(64)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SeparableFilter(benchmark::State& state) {
    const auto side = static_cast<std::size_t>(state.range(0));
    const crfseg::ValueField values(side * side, 6, 1.0 / 6.0);
    for (auto _ : state) benchmark::DoNotOptimize(crfseg::separable_grid_filter(values, side, side, 1.0 / 3.0));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(side * side));
}
BENCHMARK(BM_SeparableFilter)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_BruteForce(benchmark::State& state) {
    const auto features = bilateral(static_cast<std::size_t>(state.range(0)));
    const crfseg::ValueField values(features.pixel_count(), 2, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(crfseg::brute_force_filter(values, features));
}
BENCHMARK(BM_BruteForce)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
