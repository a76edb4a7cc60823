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

#include <filesystem>
#include <string>
#include <string_view>

#include "crfseg/evaluation.hpp"
#include "crfseg/palette.hpp"
#include "crfseg/types.hpp"

namespace crfseg {

/// Largest RGB distance at which a label pixel snaps to the nearest palette color.
constexpr double kDefaultColorTolerance = 10.0;

/// 8- or 16-bit gray, RGB or RGBA PNG, normalized to [0,1]. Palette and
/// low-bit-depth gray files are expanded first. Throws FileNotFoundError,
/// UnsupportedFormatError or CorruptDataError.
ImageTensor load_image(const std::filesystem::path& path);

/// Writes an 8-bit PNG with round(255 * value) per channel.
void save_image(const ImageTensor& image, const std::filesystem::path& path);

/// Maps every pixel to the palette class of its color: exact match first,
/// else the nearest palette color within tolerance (lowest index on ties).
/// Throws LabelColorError naming the unmatched colors and their counts.
LabelMap load_labels(const std::filesystem::path& path, const ClassPalette& palette,
                     double tolerance = kDefaultColorTolerance);

/// 8-bit RGB PNG of the palette colors.
void save_labels(const LabelMap& labels, const ClassPalette& palette, const std::filesystem::path& path);

/// Palette from a builtin name or a "name R G B" text file.
ClassPalette load_palette(std::string_view name_or_path);

/// {"pixel_accuracy", "confusion" (row-major), "per_class_iou" (null when
/// undefined), "mean_iou", "num_classes"}.
std::string report_json(const EvalReport& report);
EvalReport parse_report_json(std::string_view text);
void write_report(const EvalReport& report, const std::filesystem::path& path);

/// Header "p,pixel_accuracy,mean_iou" then one row per entry.
std::string sweep_csv(const SweepSummary& summary);
std::string sweep_json(const SweepSummary& summary);
void write_sweep(const SweepSummary& summary, const std::filesystem::path& csv_path,
                 const std::filesystem::path& json_path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace crfseg
