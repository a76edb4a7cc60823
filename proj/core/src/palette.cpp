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

#include "crfseg/palette.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "crfseg/errors.hpp"

namespace crfseg {

ClassPalette::ClassPalette(std::vector<PaletteEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) {
        throw ParameterError("palette must have at least one entry");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        for (std::size_t j = i + 1; j < entries_.size(); ++j) {
            if (entries_[i].name == entries_[j].name) {
                throw ParameterError("palette lists class '" + entries_[i].name + "' twice");
            }
            if (entries_[i].color == entries_[j].color) {
                throw ParameterError("palette entries '" + entries_[i].name + "' and '" + entries_[j].name +
                                     "' share color " + format_rgb(entries_[i].color));
            }
        }
    }
}

std::optional<std::size_t> ClassPalette::index_of(std::string_view name) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const PaletteEntry& e) { return e.name == name; });
    if (it == entries_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - entries_.begin());
}

std::optional<std::size_t> ClassPalette::index_of(const Rgb& color) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const PaletteEntry& e) { return e.color == color; });
    if (it == entries_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - entries_.begin());
}

ClassPalette builtin_palette(std::string_view name) {
    if (name == "city_binary") {
        return ClassPalette({{"urban", {255, 255, 0}}, {"rural", {0, 0, 255}}});
    }
    if (name == "potsdam") {
        return ClassPalette({
            {"clutter", {255, 0, 0}},
            {"car", {255, 255, 0}},
            {"low_vegetation", {0, 255, 255}},
            {"building", {0, 0, 255}},
            {"tree", {0, 255, 0}},
            {"impervious", {255, 255, 255}},
        });
    }
    throw ParameterError("unknown palette '" + std::string(name) + "' (valid: city_binary, potsdam)");
}

ClassPalette parse_palette(std::string_view text) {
    std::vector<PaletteEntry> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        std::string name;
        int r = -1, g = -1, b = -1;
        std::string extra;
        if (!(fields >> name >> r >> g >> b) || (fields >> extra) || r < 0 || r > 255 || g < 0 || g > 255 || b < 0 ||
            b > 255) {
            throw ParameterError("palette line " + std::to_string(line_no) + ": expected 'name R G B' with 0..255");
        }
        entries.push_back({name, {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                  static_cast<std::uint8_t>(b)}});
    }
    return ClassPalette(std::move(entries));
}

std::string format_rgb(const Rgb& color) {
    return "(" + std::to_string(color[0]) + "," + std::to_string(color[1]) + "," + std::to_string(color[2]) + ")";
}

}  // namespace crfseg
