/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: image.hpp
 *
 * Copyright 2026 The partfit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Core>

#include <filesystem>

namespace partfit {

/// Grayscale image, intensities in [0, 1]; pixels(y, x).
struct GrayImage {
    Eigen::MatrixXd pixels;

    int width() const { return static_cast<int>(pixels.cols()); }
    int height() const { return static_cast<int>(pixels.rows()); }

    /// Pixel with coordinates clamped to the image (edge replication).
    double at_clamped(int x, int y) const;
};

/// Reads binary or ASCII PGM/PPM (P2, P3, P5, P6); colour is converted with
/// Rec. 601 luma weights.
GrayImage load_pnm(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM.
void save_pgm(const GrayImage& image, const std::filesystem::path& path);

/// Left-right mirror.
GrayImage flip_horizontal(const GrayImage& image);

} // namespace partfit
