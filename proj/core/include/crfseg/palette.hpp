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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crfseg {

using Rgb = std::array<std::uint8_t, 3>;

struct PaletteEntry {
    std::string name;
    Rgb color;

    friend bool operator==(const PaletteEntry&, const PaletteEntry&) = default;
};

/// Ordered class <-> color table. Class index = position in the table.
class ClassPalette {
public:
    explicit ClassPalette(std::vector<PaletteEntry> entries);

    std::size_t num_classes() const noexcept { return entries_.size(); }
    const std::vector<PaletteEntry>& entries() const noexcept { return entries_; }
    const PaletteEntry& operator[](std::size_t index) const { return entries_.at(index); }

    std::optional<std::size_t> index_of(std::string_view name) const;
    std::optional<std::size_t> index_of(const Rgb& color) const;

    friend bool operator==(const ClassPalette&, const ClassPalette&) = default;

private:
    std::vector<PaletteEntry> entries_;
};

/// "city_binary" (urban/yellow, rural/blue) or "potsdam" (six ISPRS classes).
ClassPalette builtin_palette(std::string_view name);

/// Parses the text palette format: one "name R G B" per line, blank lines and
/// lines starting with '#' ignored.
ClassPalette parse_palette(std::string_view text);

std::string format_rgb(const Rgb& color);

}  // namespace crfseg
