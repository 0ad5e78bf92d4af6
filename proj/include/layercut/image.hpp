#pragma once

#include "layercut/math.hpp"

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace layercut {

/// Dense row-major image, `channels` interleaved doubles per pixel.
struct Image {
    int height = 0, width = 0, channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, fill) {}

    bool empty() const { return data.empty(); }
    double& at(int row, int col, int c) {
        return data[(static_cast<size_t>(row) * width + col) * channels + c];
    }
    double at(int row, int col, int c) const {
        return data[(static_cast<size_t>(row) * width + col) * channels + c];
    }
    size_t pixel_count() const { return static_cast<size_t>(height) * width; }
};

/// Write 8-bit PNG. values are mapped from [lo, hi] to [0, 255];
/// channels must be 1 (grayscale) or 3 (RGB).
inline void write_png(const std::string& path, const Image& img, double lo = 0.0, double hi = 1.0) {
    require(img.channels == 1 || img.channels == 3, "write_png: channels must be 1 or 3");
    std::vector<std::uint8_t> bytes(img.data.size());
    const double scale = 255.0 / (hi - lo);
    for (size_t i = 0; i < img.data.size(); ++i) {
        const double v = (img.data[i] - lo) * scale;
        bytes[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0) + 0.5);
    }
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width);
    png.height = static_cast<png_uint_32>(img.height);
    png.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr))
        throw std::runtime_error("write_png: " + path + ": " + png.message);
}

/// Read a PNG as grayscale in [0,1] (color inputs are converted).
inline Image read_png_gray(const std::string& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str()))
        throw std::runtime_error("read_png_gray: " + path + ": " + png.message);
    png.format = PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr))
        throw std::runtime_error("read_png_gray: " + path + ": " + png.message);
    Image img(static_cast<int>(png.height), static_cast<int>(png.width), 1);
    for (size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0;
    return img;
}

/// Raw 32-bit little-endian dump of a face-id buffer (`.fid`).
inline void write_fid(const std::string& path, const std::vector<std::int32_t>& face_id) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_fid: cannot open " + path);
    for (std::int32_t v : face_id) {
        std::uint32_t u = static_cast<std::uint32_t>(v);
        std::uint8_t b[4] = {static_cast<std::uint8_t>(u & 0xff),
                             static_cast<std::uint8_t>((u >> 8) & 0xff),
                             static_cast<std::uint8_t>((u >> 16) & 0xff),
                             static_cast<std::uint8_t>((u >> 24) & 0xff)};
        out.write(reinterpret_cast<const char*>(b), 4);
    }
}

}  // namespace layercut
