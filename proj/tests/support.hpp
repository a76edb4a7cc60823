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

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "crfseg/crfseg.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("crfseg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::vector<unsigned char> file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline crfseg::ImageTensor random_image(std::size_t h, std::size_t w, std::size_t channels, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> data(h * w * channels);
    for (double& v : data) v = u(rng);
    return crfseg::ImageTensor(h, w, channels, std::move(data));
}

inline crfseg::LabelMap random_labels(std::size_t h, std::size_t w, std::size_t classes, std::mt19937_64& rng) {
    std::vector<crfseg::Label> labels(h * w);
    for (auto& l : labels) l = static_cast<crfseg::Label>(rng() % classes);
    return crfseg::LabelMap(h, w, classes, std::move(labels));
}

inline crfseg::ValueField random_values(std::size_t n, std::size_t channels, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    crfseg::ValueField v(n, channels);
    for (double& x : v.values) x = u(rng);
    return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

inline void check_normalized(const crfseg::MarginalField& q, double tolerance = 1e-6) {
    const auto values = q.values();
    for (std::size_t i = 0; i < q.pixel_count(); ++i) {
        double sum = 0.0;
        for (std::size_t l = 0; l < q.num_classes(); ++l) {
            const double v = values[i * q.num_classes() + l];
            if (v < 0.0 || v > 1.0) throw std::runtime_error("marginal outside [0,1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > tolerance) throw std::runtime_error("marginals do not sum to 1");
    }
}

}  // namespace testing
