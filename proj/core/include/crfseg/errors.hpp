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
#include <stdexcept>
#include <string>

namespace crfseg {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Out-of-range or inconsistent parameter (confidence, kernel width, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// An exact O(N^2) path was asked for more pixels than it accepts.
class SizeLimitError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

/// Two inputs that must share dimensions do not.

class ShapeError : public Error {
public:
    using Error::Error;
};

/// A non-finite or degenerate intermediate value; carries the pixel it was seen at.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, std::size_t row, std::size_t col)
        : Error(what + " at pixel (row " + std::to_string(row) + ", col " + std::to_string(col) + ")"),
          row_(row), col_(col) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FileNotFoundError : public IoError {
public:
    using IoError::IoError;
};

class UnsupportedFormatError : public IoError {
public:
    using IoError::IoError;
};

class CorruptDataError : public IoError {
public:
    using IoError::IoError;
};

/// A label raster contains colors that do not match the palette.
class LabelColorError : public IoError {
public:
    using IoError::IoError;
};

}  // namespace crfseg
