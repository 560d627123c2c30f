// Gnomonic (rectilinear) perspective crops out of 2:1 equirectangular
// panoramas: per output pixel, cast the camera ray, rotate it by pitch
// then yaw, convert to spherical angles and sample the source with
// bilinear interpolation, wrapping horizontally.
#pragma once

#include <cmath>
#include <stdexcept>

#include "geoaot/image.hpp"

namespace geoaot {

namespace detail {

// Bilinear sample with horizontal wraparound and vertical clamp. u and v
// are continuous pixel coordinates (sample centers at integer + 0.5).
inline float sample_bilinear(const Image& img, double u, double v, int channel) {
    const double fu = u - 0.5, fv = v - 0.5;
    int x0 = static_cast<int>(std::floor(fu));
    int y0 = static_cast<int>(std::floor(fv));
    const double ax = fu - x0, ay = fv - y0;

    const auto wrap_x = [&](int x) {
        x %= img.width;
        return x < 0 ? x + img.width : x;
    };
    const auto clamp_y = [&](int y) { return std::clamp(y, 0, img.height - 1); };

    const int x1 = x0 + 1, y1 = y0 + 1;
    const float v00 = img.at(wrap_x(x0), clamp_y(y0), channel);
    const float v10 = img.at(wrap_x(x1), clamp_y(y0), channel);
    const float v01 = img.at(wrap_x(x0), clamp_y(y1), channel);
    const float v11 = img.at(wrap_x(x1), clamp_y(y1), channel);
    const double top = v00 + ax * (v10 - v00);
    const double bot = v01 + ax * (v11 - v01);
    return static_cast<float>(top + ay * (bot - top));
}

}  // namespace detail

// Renders a perspective view. `yaw` is relative to the panorama's
// heading reference, so the output center looks along compass bearing
// (heading_ref + yaw); positive pitch looks up. fov is the horizontal
// field of view in degrees, in (0, 120]; pitch in [-89, 89].
inline Image render_view(const Image& pano, double heading_ref, double yaw_deg,
                         double pitch_deg, double fov_deg, int out_w, int out_h) {
    if (!pano.is_equirect())
        throw std::invalid_argument("render_view: source must be 2:1 equirectangular");
    if (!(fov_deg > 0.0 && fov_deg <= 120.0))
        throw std::invalid_argument("render_view: fov must be in (0, 120]");
    if (!(pitch_deg >= -89.0 && pitch_deg <= 89.0))
        throw std::invalid_argument("render_view: pitch must be in [-89, 89]");
    if (out_w <= 0 || out_h <= 0)
        throw std::invalid_argument("render_view: output dimensions must be positive");
    (void)heading_ref;  // the pano's center column is its heading reference

    Image out(out_w, out_h, pano.channels);
    const double focal = (out_w / 2.0) / std::tan(deg2rad(fov_deg) / 2.0);
    const double yaw = deg2rad(yaw_deg);
    const double pitch = deg2rad(pitch_deg);
    const double cp = std::cos(pitch), sp = std::sin(pitch);

    for (int j = 0; j < out_h; ++j) {
        for (int i = 0; i < out_w; ++i) {
            // Camera ray in view space: x right, y up, z forward.
            const double x = (i + 0.5) - out_w / 2.0;
            const double y = out_h / 2.0 - (j + 0.5);
            const double z = focal;
            // Pitch about the x axis, then yaw about the vertical.
            const double y1 = y * cp + z * sp;
            const double z1 = -y * sp + z * cp;
            const double theta = yaw + std::atan2(x, z1);  // azimuth from pano center
            const double phi = std::atan2(y1, std::hypot(x, z1));  // elevation

            const double u = (theta / (2.0 * kPi) + 0.5) * pano.width;
            const double v = (0.5 - phi / kPi) * pano.height;
            // Wrap the azimuth into the source's horizontal range.
            double uw = std::fmod(u, static_cast<double>(pano.width));
            if (uw < 0.0) uw += pano.width;
            for (int c = 0; c < pano.channels; ++c)
                out.at(i, j, c) = detail::sample_bilinear(pano, uw, v, c);
        }
    }
    return out;
}

}  // namespace geoaot
