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

void run(benchmark::State& state, crfseg::ModelKind model) {
    const auto side = static_cast<std::size_t>(state.range(0));
    const auto fx = crfseg::gen_fixture(crfseg::FixtureKind::potsdam_mosaic, side, side, 0.15, 2024);
    const auto unary = crfseg::unary_from_labels(fx.noisy, 0.95);
    crfseg::CrfParams params;
    params.model = model;
    for (auto _ : state) benchmark::DoNotOptimize(crfseg::run_inference(unary, fx.image, params));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(side * side));
}

void BM_DenseInference(benchmark::State& state) { run(state, crfseg::ModelKind::dense); }
BENCHMARK(BM_DenseInference)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_GridInference(benchmark::State& state) { run(state, crfseg::ModelKind::grid); }
BENCHMARK(BM_GridInference)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
