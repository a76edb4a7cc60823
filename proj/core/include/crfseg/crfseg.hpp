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

#include "crfseg/errors.hpp"
#include "crfseg/evaluation.hpp"
#include "crfseg/filtering.hpp"
#include "crfseg/fixtures.hpp"
#include "crfseg/inference.hpp"
#include "crfseg/parallel.hpp"
#include "crfseg/palette.hpp"
#include "crfseg/params.hpp"
#include "crfseg/raster_io.hpp"
#include "crfseg/types.hpp"
#include "crfseg/unary.hpp"
#include "crfseg/version.hpp"
