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
#include <functional>

namespace crfseg {

/// Thread count used when a caller passes 0.
int default_thread_count() noexcept;

/// Splits [0, count) into contiguous chunks and runs body(begin, end) on up to
/// `threads` threads. Chunk boundaries never affect results as long as body
/// writes disjoint outputs. Each thread gets at least `min_chunk` items.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 1024);

}  // namespace crfseg
