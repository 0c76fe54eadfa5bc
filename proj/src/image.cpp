/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: image.cpp
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

#include "partfit/image.hpp"

#include "partfit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

namespace partfit {

double GrayImage::at_clamped(int x, int y) const
{
    return pixels(std::clamp(y, 0, height() - 1), std::clamp(x, 0, width() - 1));
}

namespace {

void skip_space_and_comments(std::istream& in)
{
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (c != EOF && std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

long read_header_value(std::istream& in, const std::string& path)
{
    skip_space_and_comments(in);
    long value = -1;
    if (!(in >> value) || value <= 0) {
        throw Error("load_pnm: malformed header in " + path);
    }
    return value;
}

} // namespace

GrayImage load_pnm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("load_pnm: cannot open " + path.string());
    }
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
        throw Error("load_pnm: unsupported format '" + magic + "' in " + path.string());
    }
    const long width = read_header_value(in, path.string());
    const long height = read_header_value(in, path.string());
    const long maxval = read_header_value(in, path.string());
    if (maxval > 65535) {
        throw Error("load_pnm: maxval out of range in " + path.string());
    }
    const bool colour = magic == "P3" || magic == "P6";
    const bool binary = magic == "P5" || magic == "P6";
    const int channels = colour ? 3 : 1;
    const std::size_t count = static_cast<std::size_t>(width * height * channels);
    std::vector<double> samples(count);
    if (binary) {
        in.get(); // single whitespace after maxval
        const int bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(count * static_cast<std::size_t>(bytes));
        if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
            throw Error("load_pnm: truncated pixel data in " + path.string());
        }
        for (std::size_t i = 0; i < count; ++i) {
            samples[i] = bytes == 1 ? raw[i] : raw[2 * i] * 256.0 + raw[2 * i + 1];
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            long value = 0;
            skip_space_and_comments(in);
            if (!(in >> value)) {
                throw Error("load_pnm: truncated pixel data in " + path.string());
            }
            samples[i] = static_cast<double>(value);
        }
    }
    GrayImage image;
    image.pixels.resize(height, width);
    for (long y = 0; y < height; ++y) {
        for (long x = 0; x < width; ++x) {
            const std::size_t base = static_cast<std::size_t>((y * width + x) * channels);
            const double value = colour ? 0.299 * samples[base] + 0.587 * samples[base + 1] +
                                              0.114 * samples[base + 2]
                                        : samples[base];
            image.pixels(y, x) = value / static_cast<double>(maxval);
        }
    }
    return image;
}

void save_pgm(const GrayImage& image, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("save_pgm: cannot write " + path.string());
    }
    out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(image.width()));
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const double value = std::clamp(image.pixels(y, x), 0.0, 1.0);
            row[static_cast<std::size_t>(x)] = static_cast<unsigned char>(std::lround(value * 255.0));
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
}

GrayImage flip_horizontal(const GrayImage& image)
{
    return {image.pixels.rowwise().reverse()};
}

} // namespace partfit
