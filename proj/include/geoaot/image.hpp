// Minimal float image container, the synthetic bearing-encoding panorama
// used by tests and demos, and a stable content hash for determinism
// checks. Real panoramas are 2:1 equirectangular images.
#pragma once

#include <cctype>
#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoaot/geo.hpp"

namespace geoaot {

// Planar float image, row-major, `channels` interleaved samples per pixel.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c) : width(w), height(h), channels(c) {
        if (w <= 0 || h <= 0 || c <= 0)
            throw std::invalid_argument("Image: dimensions must be positive");
        data.assign(static_cast<std::size_t>(w) * h * c, 0.0f);
    }

    float& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool is_equirect() const { return width == 2 * height; }
};

// FNV-1a over the raw sample bytes. Stable across runs of one binary;
// used to compare rendered views for determinism.
inline std::uint64_t image_hash(const Image& img) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(img.data.data());
    const std::size_t n = img.data.size() * sizeof(float);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    h ^= static_cast<std::uint64_t>(img.width) * 31 + static_cast<std::uint64_t>(img.height);
    return h;
}

// Synthetic panorama whose pixels encode their own compass bearing: for a
// pano with center column at `heading_ref`, channel 0/1 hold sin/cos of
// the bearing each column faces and channel 2 is a vertical gradient.
// Encoding the angle as (sin, cos) keeps bilinear interpolation smooth
// across the 360-to-0 seam; decode with atan2.
inline Image make_bearing_pano(int width = 512, double heading_ref = 0.0) {
    if (width % 2 != 0) throw std::invalid_argument("make_bearing_pano: width must be even");
    Image img(width, width / 2, 3);
    for (int x = 0; x < img.width; ++x) {
        const double frac = (static_cast<double>(x) + 0.5) / img.width;  // [0,1)
        const double bearing = wrap_deg_360(heading_ref + (frac - 0.5) * 360.0);
        const float s = static_cast<float>(std::sin(deg2rad(bearing)));
        const float c = static_cast<float>(std::cos(deg2rad(bearing)));
        for (int y = 0; y < img.height; ++y) {
            img.at(x, y, 0) = s;
            img.at(x, y, 1) = c;
            img.at(x, y, 2) = static_cast<float>(y) / img.height;
        }
    }
    return img;
}

// Recovers the encoded bearing at one pixel of a bearing pano (or of a
// view rendered from one).
inline double decode_bearing(const Image& img, int x, int y) {
    const double s = img.at(x, y, 0), c = img.at(x, y, 1);
    return wrap_deg_360(rad2deg(std::atan2(s, c)));
}

// --- PPM (binary P6, maxval 255) ----------------------------------------
// The on-disk pano format. Values map [0,1] <-> 0..255; channels beyond
// three are dropped, fewer are replicated.

inline std::string encode_ppm(const Image& img) {
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                      "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(img.width) * img.height * 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = img.at(x, y, c < img.channels ? c : img.channels - 1);
                const float clamped = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
                out.push_back(static_cast<char>(static_cast<int>(clamped * 255.0f + 0.5f)));
            }
    return out;
}

inline Image decode_ppm(const std::string& bytes) {
    std::size_t pos = 0;
    auto token = [&]() -> std::string {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
        std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        return bytes.substr(start, pos - start);
    };
    if (token() != "P6") throw std::invalid_argument("decode_ppm: not a binary PPM");
    const int w = std::stoi(token()), h = std::stoi(token()), maxval = std::stoi(token());
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw std::invalid_argument("decode_ppm: bad header");
    ++pos;  // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (bytes.size() - pos < need) throw std::invalid_argument("decode_ppm: truncated pixel data");
    Image img(w, h, 3);
    for (std::size_t i = 0; i < need; ++i)
        img.data[i] = static_cast<float>(static_cast<unsigned char>(bytes[pos + i])) /
                      static_cast<float>(maxval);
    return img;
}

}  // namespace geoaot
