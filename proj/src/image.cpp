#include "facefit/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

namespace facefit {

BilinearSample bilinear_sample(const Image& image, const Vec2& uv) {
    BilinearSampleGrad g = bilinear_sample_grad(image, uv);
    return {g.color, g.valid};
}

BilinearSampleGrad bilinear_sample_grad(const Image& image, const Vec2& uv) {
    BilinearSampleGrad out;
    const double u = uv.x(), v = uv.y();
    if (!(u >= 0.0 && u <= image.width - 1 && v >= 0.0 && v <= image.height - 1)) return out;
    int x0 = static_cast<int>(std::floor(u));
    int y0 = static_cast<int>(std::floor(v));
    // keep the 2x2 cell inside the image when uv sits on the far edge
    x0 = std::min(x0, image.width - 2);
    y0 = std::min(y0, image.height - 2);
    if (image.width == 1) x0 = 0;
    if (image.height == 1) y0 = 0;
    const int x1 = std::min(x0 + 1, image.width - 1);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double fu = u - x0;
    const double fv = v - y0;
    const Vec3 c00 = image.pixel(x0, y0), c10 = image.pixel(x1, y0);
    const Vec3 c01 = image.pixel(x0, y1), c11 = image.pixel(x1, y1);
    out.color = (1.0 - fu) * (1.0 - fv) * c00 + fu * (1.0 - fv) * c10 +
                (1.0 - fu) * fv * c01 + fu * fv * c11;
    out.d_du = (1.0 - fv) * (c10 - c00) + fv * (c11 - c01);
    out.d_dv = (1.0 - fu) * (c01 - c00) + fu * (c11 - c10);
    out.valid = true;
    return out;
}

Image downsample(const Image& image, int factor) {
    if (factor <= 1) return image;
    const int w = image.width / factor, h = image.height / factor;
    if (w < 1 || h < 1) throw data_error("downsample factor larger than image");
    Image out(w, h);
    const double inv = 1.0 / (factor * factor);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec3 sum = Vec3::Zero();
            for (int dy = 0; dy < factor; ++dy)
                for (int dx = 0; dx < factor; ++dx)
                    sum += image.pixel(x * factor + dx, y * factor + dy);
            out.set_pixel(x, y, sum * inv);
        }
    return out;
}

void save_ppm(const Image& image, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error("cannot open image for writing: " + path);
    os << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(image.width) * 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(image.at(x, y, c), 0.0, 1.0);
                row[static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!os) throw data_error("failed writing image: " + path);
}

namespace {

int read_pnm_token(std::istream& is) {
    // skips whitespace and '#' comments
    while (true) {
        int ch = is.peek();
        if (ch == '#') {
            std::string line;
            std::getline(is, line);
        } else if (std::isspace(ch)) {
            is.get();
        } else {
            break;
        }
    }
    int value = 0;
    if (!(is >> value)) throw data_error("malformed PPM header");
    return value;
}

} // namespace

Image load_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error("cannot open image: " + path);
    char p, six;
    is.get(p);
    is.get(six);
    if (p != 'P' || six != '6') throw data_error("not a binary PPM (P6) file: " + path);
    const int w = read_pnm_token(is);
    const int h = read_pnm_token(is);
    const int maxval = read_pnm_token(is);
    if (w <= 0 || h <= 0 || maxval != 255)
        throw data_error("unsupported PPM dimensions or depth: " + path);
    is.get(); // single whitespace after maxval
    Image image(w, h);
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!is) throw data_error("truncated PPM file: " + path);
    for (std::size_t i = 0; i < raw.size(); ++i) image.data[i] = raw[i] / 255.0;
    return image;
}

Image load_png(const std::string& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!fp) throw data_error("cannot open image: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw data_error("libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw data_error("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw data_error("failed decoding PNG: " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    // normalize everything to 8-bit RGB
    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        rows[static_cast<std::size_t>(y)] = raw.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    Image image(w, h);
    for (std::size_t i = 0; i < raw.size(); ++i) image.data[i] = raw[i] / 255.0;
    return image;
}

Image load_image(const std::string& path) {
    auto ends_with = [&](const char* suffix) {
        const std::string s(suffix);
        if (path.size() < s.size()) return false;
        std::string tail = path.substr(path.size() - s.size());
        std::transform(tail.begin(), tail.end(), tail.begin(),
                       [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        return tail == s;
    };
    if (ends_with(".png")) return load_png(path);
    if (ends_with(".ppm")) return load_ppm(path);
    throw data_error("unsupported image format (expected .png or .ppm): " + path);
}

} // namespace facefit
