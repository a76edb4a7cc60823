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

#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace crfseg;

TEST_SUITE("core_model") {

TEST_CASE("city_binary palette is urban yellow then rural blue") {
    const ClassPalette p = builtin_palette("city_binary");
    REQUIRE(p.num_classes() == 2);
    CHECK(p[0].name == "urban");
    CHECK(p[0].color == Rgb{255, 255, 0});
    CHECK(p[1].name == "rural");
    CHECK(p[1].color == Rgb{0, 0, 255});
}

TEST_CASE("potsdam palette lists six classes with low vegetation in cyan") {
    const ClassPalette p = builtin_palette("potsdam");
    REQUIRE(p.num_classes() == 6);
    const char* names[] = {"clutter", "car", "low_vegetation", "building", "tree", "impervious"};
    const Rgb colors[] = {{255, 0, 0}, {255, 255, 0}, {0, 255, 255}, {0, 0, 255}, {0, 255, 0}, {255, 255, 255}};
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(p[k].name == names[k]);
        CHECK(p[k].color == colors[k]);
    }
    CHECK(p.index_of("low_vegetation") == 2u);
    CHECK(p.index_of(Rgb{0, 255, 255}) == 2u);
}

TEST_CASE("unknown palette name lists the valid ones") {
    try {
        builtin_palette("landsat");
        FAIL("expected ParameterError");
    } catch (const ParameterError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("city_binary") != std::string::npos);
        CHECK(msg.find("potsdam") != std::string::npos);
    }
}

TEST_CASE("palette text format") {
    const ClassPalette p = parse_palette("# two classes\n\nwater 0 0 200\n  forest 10 120 30  \n");
    REQUIRE(p.num_classes() == 2);
    CHECK(p[1] == PaletteEntry{"forest", {10, 120, 30}});
    CHECK_THROWS_AS(parse_palette("water 0 0 300\n"), ParameterError);
    CHECK_THROWS_AS(parse_palette("water 0 0\n"), ParameterError);
    CHECK_THROWS_AS(parse_palette("a 1 2 3\nb 1 2 3\n"), ParameterError);
    CHECK_THROWS_AS(parse_palette("a 1 2 3\na 4 5 6\n"), ParameterError);
    CHECK_THROWS_AS(parse_palette(""), ParameterError);
}

TEST_CASE("validate_params accepts defaults and rejects bad fields") {
    CrfParams p;
    CHECK(validate_params(p, 2) == p);
    CHECK(validate_params(validate_params(p, 6), 6) == p);

    CrfParams half = p;
    half.label_confidence = 0.5;
    CHECK_THROWS_WITH_AS(validate_params(half, 2), doctest::Contains("confidence out of range"), ParameterError);
    half.label_confidence = 1.0;
    CHECK_THROWS_AS(validate_params(half, 2), ParameterError);
    half.label_confidence = 0.3;
    CHECK(validate_params(half, 6).label_confidence == 0.3);

    for (double CrfParams::*field : {&CrfParams::theta_alpha, &CrfParams::theta_beta, &CrfParams::theta_gamma}) {
        CrfParams bad = p;
        bad.*field = 0.0;
        CHECK_THROWS_WITH_AS(validate_params(bad, 2), doctest::Contains("invalid kernel width"), ParameterError);
    }
    CrfParams neg = p;
    neg.w_smoothness = -1.0;
    CHECK_THROWS_AS(validate_params(neg, 2), ParameterError);
    neg = p;
    neg.iterations = -1;
    CHECK_THROWS_AS(validate_params(neg, 2), ParameterError);
    neg = p;
    neg.damping = 0.0;
    CHECK_THROWS_AS(validate_params(neg, 2), ParameterError);
}

TEST_CASE("model kind names") {
    CHECK(parse_model_kind("dense") == ModelKind::dense);
    CHECK(parse_model_kind(to_string(ModelKind::grid)) == ModelKind::grid);
    CHECK_THROWS_AS(parse_model_kind("crf"), ParameterError);
}

TEST_CASE("containers check their shape") {
    CHECK_THROWS_AS(ImageTensor(2, 2, 3, std::vector<double>(11)), ShapeError);
    CHECK_THROWS_AS(ImageTensor(1, 1, 1, {1.5}), ParameterError);
    CHECK_THROWS_AS(LabelMap(1, 2, 2, {0, 2}), ParameterError);
    CHECK_THROWS_AS(LabelMap(1, 2, 2, {0, -1}), ParameterError);
    CHECK_THROWS_AS(MarginalField(1, 1, 2, {0.5, 0.6}), ParameterError);
    CHECK_THROWS_AS(MarginalField(1, 1, 2, {1.1, -0.1}), ParameterError);
    CHECK_NOTHROW(MarginalField(1, 1, 2, {0.5, 0.5 + 5e-7}));
    const ImageTensor img(1, 2, 1, {0.1, 0.3});
    CHECK(img.at(0, 1, 0) == 0.3);
    CHECK(img.pixel(0)[0] == 0.1);
}

TEST_CASE("label maps survive palette encode and decode") {
    std::mt19937_64 rng(11);
    const ClassPalette palette = builtin_palette("potsdam");
    for (int trial = 0; trial < 20; ++trial) {
        const LabelMap labels = testing::random_labels(1 + rng() % 9, 1 + rng() % 9, 6, rng);
        std::vector<Label> decoded;
        for (Label l : labels.labels()) decoded.push_back(static_cast<Label>(*palette.index_of(palette[l].color)));
        CHECK(LabelMap(labels.height(), labels.width(), 6, decoded) == labels);
    }
}

}  // TEST_SUITE
