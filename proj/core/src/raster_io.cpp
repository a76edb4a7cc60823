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

#include "crfseg/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "crfseg/errors.hpp"
#include "json.hpp"

namespace crfseg {
namespace {

using json = nlohmann::json;

// Decoded PNG samples, 8 or 16 bits each, before normalization.
struct RawImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    int bit_depth = 8;
    std::vector<std::uint16_t> samples;
};

struct PngContext {
    const std::vector<unsigned char>* data = nullptr;
    std::size_t offset = 0;
    char message[256] = {};
};

void png_error_to_context(png_structp png, png_const_charp message) {
    auto* ctx = static_cast<PngContext*>(png_get_error_ptr(png));
    std::snprintf(ctx->message, sizeof ctx->message, "%s", message);
    png_longjmp(png, 1);
}

void png_ignore_warning(png_structp, png_const_charp) {}

void png_read_from_memory(png_structp png, png_bytep out, png_size_t length) {
    auto* ctx = static_cast<PngContext*>(png_get_io_ptr(png));
    if (ctx->offset + length > ctx->data->size()) png_error(png, "unexpected end of file");
    std::memcpy(out, ctx->data->data() + ctx->offset, length);
    ctx->offset += length;
}

void png_write_to_memory(png_structp png, png_bytep in, png_size_t length) {
    auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
    out->insert(out->end(), in, in + length);
}

void png_flush_nothing(png_structp) {}

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) throw FileNotFoundError("file not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    return bytes;
}

void write_bytes(const std::filesystem::path& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    out.close();
    if (!out) throw IoError("write failed: " + path.string());
}

RawImage decode_png(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = read_bytes(path);
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw UnsupportedFormatError(path.string() + ": not a PNG file");
    }
    PngContext ctx;
    ctx.data = &bytes;
    RawImage raw;
    std::vector<png_bytep> rows;
    std::vector<unsigned char> pixels;
    volatile bool unsupported = false;

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &ctx, png_error_to_context, png_ignore_warning);
    if (png == nullptr) throw IoError("libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng initialization failed");
    }
    // Everything the decoder touches lives in this frame, so a longjmp back
    // here skips no destructors.
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw CorruptDataError(path.string() + ": corrupt PNG data (" + ctx.message + ")");
    }
    png_set_read_fn(png, &ctx, png_read_from_memory);
    png_read_info(png, info);
    const int color_type = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        unsupported = true;
    } else {
        if (color_type == PNG_COLOR_TYPE_PALETTE) {
            png_set_palette_to_rgb(png);
            if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
        }
        if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        png_set_interlace_handling(png);
        png_read_update_info(png, info);
        raw.height = png_get_image_height(png, info);
        raw.width = png_get_image_width(png, info);
        raw.channels = png_get_channels(png, info);
        raw.bit_depth = png_get_bit_depth(png, info);
        const std::size_t row_bytes = png_get_rowbytes(png, info);
        pixels.resize(row_bytes * raw.height);
        rows.resize(raw.height);
        for (std::size_t r = 0; r < raw.height; ++r) rows[r] = pixels.data() + r * row_bytes;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (unsupported) throw UnsupportedFormatError(path.string() + ": gray+alpha PNG is not supported");
    if (raw.channels != 1 && raw.channels != 3 && raw.channels != 4) {
        throw UnsupportedFormatError(path.string() + ": unsupported channel count " + std::to_string(raw.channels));
    }

    const std::size_t count = raw.height * raw.width * raw.channels;
    raw.samples.resize(count);
    if (raw.bit_depth == 16) {
        for (std::size_t k = 0; k < count; ++k) {
            raw.samples[k] = static_cast<std::uint16_t>((pixels[2 * k] << 8) | pixels[2 * k + 1]);
        }
    } else {
        std::copy(pixels.begin(), pixels.begin() + static_cast<std::ptrdiff_t>(count), raw.samples.begin());
    }
    return raw;
}

void encode_png(const std::filesystem::path& path, std::size_t height, std::size_t width, int color_type,
                const std::vector<unsigned char>& pixels, std::size_t channels) {
    if (height == 0 || width == 0) throw ParameterError("cannot write an empty image");
    std::vector<unsigned char> out;
    std::vector<png_bytep> rows(height);
    for (std::size_t r = 0; r < height; ++r) {
        rows[r] = const_cast<png_bytep>(pixels.data() + r * width * channels);
    }
    PngContext ctx;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &ctx, png_error_to_context, png_ignore_warning);
    if (png == nullptr) throw IoError("libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(path.string() + ": PNG encoding failed (" + ctx.message + ")");
    }
    png_set_write_fn(png, &out, png_write_to_memory, png_flush_nothing);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    write_bytes(path, out.data(), out.size());
}

std::uint32_t pack(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return (static_cast<std::uint32_t>(r) << 16) | (static_cast<std::uint32_t>(g) << 8) | b;
}

}  // namespace

ImageTensor load_image(const std::filesystem::path& path) {
    const RawImage raw = decode_png(path);
    const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<double> data(raw.samples.size());
    for (std::size_t k = 0; k < data.size(); ++k) data[k] = raw.samples[k] / scale;
    return ImageTensor(raw.height, raw.width, raw.channels, std::move(data));
}

void save_image(const ImageTensor& image, const std::filesystem::path& path) {
    const auto data = image.data();
    std::vector<unsigned char> pixels(data.size());
    for (std::size_t k = 0; k < data.size(); ++k) {
        pixels[k] = static_cast<unsigned char>(std::lround(data[k] * 255.0));
    }
    const int color_type = image.channels() == 1   ? PNG_COLOR_TYPE_GRAY
                           : image.channels() == 3 ? PNG_COLOR_TYPE_RGB
                                                   : PNG_COLOR_TYPE_RGB_ALPHA;
    encode_png(path, image.height(), image.width(), color_type, pixels, image.channels());
}

LabelMap load_labels(const std::filesystem::path& path, const ClassPalette& palette, double tolerance) {
    const RawImage raw = decode_png(path);
    const std::size_t n = raw.height * raw.width;
    const auto to8 = [&](std::uint16_t v) {
        return static_cast<std::uint8_t>(raw.bit_depth == 16 ? (v + 128) / 257 : v);
    };
    std::unordered_map<std::uint32_t, Label> lookup;
    std::map<std::uint32_t, std::size_t> unmatched;
    std::vector<Label> labels(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t* px = raw.samples.data() + i * raw.channels;
        const Rgb color = raw.channels < 3 ? Rgb{to8(px[0]), to8(px[0]), to8(px[0])}
                                           : Rgb{to8(px[0]), to8(px[1]), to8(px[2])};
        const std::uint32_t key = pack(color[0], color[1], color[2]);
        auto it = lookup.find(key);
        if (it == lookup.end()) {
            Label best = -1;
            if (const auto exact = palette.index_of(color)) {
                best = static_cast<Label>(*exact);
            } else {
                double best_dist = tolerance;
                for (std::size_t c = 0; c < palette.num_classes(); ++c) {
                    double dist = 0.0;
                    for (std::size_t k = 0; k < 3; ++k) {
                        const double t = static_cast<double>(color[k]) - palette[c].color[k];
                        dist += t * t;
                    }
                    dist = std::sqrt(dist);
                    if (dist <= best_dist && (best < 0 || dist < best_dist)) {
                        best = static_cast<Label>(c);
                        best_dist = dist;
                    }
                }
            }
            it = lookup.emplace(key, best).first;
        }
        if (it->second < 0) {
            ++unmatched[key];
        } else {
            labels[i] = it->second;
        }
    }
    if (!unmatched.empty()) {
        std::ostringstream msg;
        msg << path.string() << ": " << unmatched.size() << " color(s) farther than " << tolerance
            << " from every palette entry:";
        std::size_t shown = 0;
        for (const auto& [key, count] : unmatched) {
            if (shown++ == 8) {
                msg << " ...";
                break;
            }
            const Rgb color{static_cast<std::uint8_t>(key >> 16), static_cast<std::uint8_t>(key >> 8),
                            static_cast<std::uint8_t>(key)};
            msg << ' ' << format_rgb(color) << " x" << count;
        }
        throw LabelColorError(msg.str());
    }
    return LabelMap(raw.height, raw.width, palette.num_classes(), std::move(labels));
}

void save_labels(const LabelMap& labels, const ClassPalette& palette, const std::filesystem::path& path) {
    std::vector<unsigned char> pixels(labels.pixel_count() * 3);
    for (std::size_t i = 0; i < labels.pixel_count(); ++i) {
        const auto l = static_cast<std::size_t>(labels[i]);
        if (l >= palette.num_classes()) {
            throw ParameterError("label " + std::to_string(l) + " has no palette color (palette has " +
                                 std::to_string(palette.num_classes()) + " entries)");
        }
        std::copy(palette[l].color.begin(), palette[l].color.end(), pixels.begin() + static_cast<std::ptrdiff_t>(3 * i));
    }
    encode_png(path, labels.height(), labels.width(), PNG_COLOR_TYPE_RGB, pixels, 3);
}

ClassPalette load_palette(std::string_view name_or_path) {
    if (name_or_path == "city_binary" || name_or_path == "potsdam") return builtin_palette(name_or_path);
    return parse_palette(read_text_file(std::filesystem::path(std::string(name_or_path))));
}

std::string format_double(double value) {
    std::array<char, 32> buffer{};
    const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
    return std::string(buffer.data(), result.ptr);
}

std::string report_json(const EvalReport& report) {
    json doc;
    doc["num_classes"] = report.num_classes;
    doc["pixel_accuracy"] = report.pixel_accuracy;
    doc["confusion"] = report.confusion;
    json iou = json::array();
    for (const auto& v : report.per_class_iou) iou.push_back(v ? json(*v) : json(nullptr));
    doc["per_class_iou"] = iou;
    doc["mean_iou"] = report.mean_iou;
    return doc.dump(2) + "\n";
}

EvalReport parse_report_json(std::string_view text) {
    try {
        const json doc = json::parse(text);
        EvalReport report;
        report.num_classes = doc.at("num_classes").get<std::size_t>();
        report.pixel_accuracy = doc.at("pixel_accuracy").get<double>();
        report.confusion = doc.at("confusion").get<std::vector<std::uint64_t>>();
        for (const auto& v : doc.at("per_class_iou")) {
            report.per_class_iou.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
        }
        report.mean_iou = doc.at("mean_iou").get<double>();
        if (report.confusion.size() != report.num_classes * report.num_classes ||
            report.per_class_iou.size() != report.num_classes) {
            throw CorruptDataError("report JSON: array sizes disagree with num_classes");
        }
        return report;
    } catch (const json::exception& e) {
        throw CorruptDataError(std::string("report JSON: ") + e.what());
    }
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
    write_text_file(path, report_json(report));
}

std::string sweep_csv(const SweepSummary& summary) {
    std::string out = "p,pixel_accuracy,mean_iou\n";
    for (const auto& row : summary.rows) {
        out += format_double(row.p) + "," + format_double(row.pixel_accuracy) + "," + format_double(row.mean_iou) + "\n";
    }
    return out;
}

std::string sweep_json(const SweepSummary& summary) {
    json doc;
    json rows = json::array();
    for (const auto& row : summary.rows) {
        rows.push_back({{"p", row.p}, {"pixel_accuracy", row.pixel_accuracy}, {"mean_iou", row.mean_iou}});
    }
    doc["rows"] = rows;
    doc["accuracy_non_decreasing"] = summary.accuracy_non_decreasing;
    return doc.dump(2) + "\n";
}

void write_sweep(const SweepSummary& summary, const std::filesystem::path& csv_path,
                 const std::filesystem::path& json_path) {
    write_text_file(csv_path, sweep_csv(summary));
    write_text_file(json_path, sweep_json(summary));
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    write_bytes(path, content.data(), content.size());
}

std::string read_text_file(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = read_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

}  // namespace crfseg
