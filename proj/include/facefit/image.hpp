#pragma once

#include <string>
#include <vector>

#include "facefit/types.hpp"

namespace facefit {

/// RGB image with values in [0,1], row-major, interleaved channels.
/// Pixel centers sit at integer coordinates.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data; // width*height*3

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

    double& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + static_cast<std::size_t>(c)];
    }
    double at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + static_cast<std::size_t>(c)];
    }
    Vec3 pixel(int x, int y) const { return Vec3(at(x, y, 0), at(x, y, 1), at(x, y, 2)); }
    void set_pixel(int x, int y, const Vec3& rgb) {
        for (int c = 0; c < 3; ++c) at(x, y, c) = rgb[c];
    }
};

struct BilinearSample {
    Vec3 color = Vec3::Zero();
    bool valid = false;
};

/// Bilinear interpolation of the four pixels around uv. Invalid when the
/// 2x2 neighborhood exits the image, i.e. outside [0, W-1] x [0, H-1].
BilinearSample bilinear_sample(const Image& image, const Vec2& uv);

/// Sample plus the 3x2 Jacobian of the sampled color with respect to uv
/// (constant within a cell; callers treat the cell choice as fixed).
struct BilinearSampleGrad {
    Vec3 color = Vec3::Zero();
    Vec3 d_du = Vec3::Zero();
    Vec3 d_dv = Vec3::Zero();
    bool valid = false;
};
BilinearSampleGrad bilinear_sample_grad(const Image& image, const Vec2& uv);

/// Box average over factor x factor blocks; trailing remainder pixels are
/// dropped. factor 1 returns the input unchanged.
Image downsample(const Image& image, int factor);

/// Binary PPM (P6), 8-bit; colors clamped to [0,1] then scaled to 255.
void save_ppm(const Image& image, const std::string& path);
Image load_ppm(const std::string& path);

/// 8-bit PNG (gray, gray+alpha, RGB or RGBA; alpha dropped).
Image load_png(const std::string& path);

/// Dispatch on file extension (.png, .ppm).
Image load_image(const std::string& path);

} // namespace facefit
