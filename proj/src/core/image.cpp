#include "poseac/core/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "poseac/core/check.hpp"

namespace poseac {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

void save_png(const Image& img, const std::filesystem::path& path) {
    POSEAC_CHECK(img.c == 3, "save_png expects RGB, got c=", img.c);
    POSEAC_CHECK(img.h > 0 && img.w > 0, "empty image");
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    POSEAC_CHECK(fp != nullptr, "cannot open for write: ", path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    POSEAC_CHECK(png, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        POSEAC_CHECK(false, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng write error: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.w, img.h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(static_cast<size_t>(img.w) * 3);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                float v = std::clamp(img.at(y, x, ch), 0.f, 1.f);
                row[static_cast<size_t>(x) * 3 + ch] =
                    static_cast<unsigned char>(std::lround(v * 255.f));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image load_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    POSEAC_CHECK(fp != nullptr, "cannot open for read: ", path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    POSEAC_CHECK(png, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        POSEAC_CHECK(false, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("libpng read error: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    // Normalize any input to 8-bit RGB.
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_read_update_info(png, info);
    POSEAC_CHECK(png_get_rowbytes(png, info) == w * 3, "unexpected row size in ", path.string());

    Image img(static_cast<int>(h), static_cast<int>(w), 3);
    std::vector<unsigned char> row(w * 3);
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                img.at(static_cast<int>(y), static_cast<int>(x), ch) =
                    row[static_cast<size_t>(x) * 3 + ch] / 255.f;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

Image resize_bilinear(const Image& src, int out_h, int out_w) {
    POSEAC_CHECK(out_h > 0 && out_w > 0 && src.h > 0 && src.w > 0, "bad resize dims");
    Image dst(out_h, out_w, src.c);
    const float sy = static_cast<float>(src.h) / out_h;
    const float sx = static_cast<float>(src.w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        // Align pixel centers between the two grids.
        float fy = (y + 0.5f) * sy - 0.5f;
        int y0 = static_cast<int>(std::floor(fy));
        float wy = fy - y0;
        int y0c = std::clamp(y0, 0, src.h - 1);
        int y1c = std::clamp(y0 + 1, 0, src.h - 1);
        for (int x = 0; x < out_w; ++x) {
            float fx = (x + 0.5f) * sx - 0.5f;
            int x0 = static_cast<int>(std::floor(fx));
            float wx = fx - x0;
            int x0c = std::clamp(x0, 0, src.w - 1);
            int x1c = std::clamp(x0 + 1, 0, src.w - 1);
            for (int ch = 0; ch < src.c; ++ch) {
                float top = src.at(y0c, x0c, ch) * (1.f - wx) + src.at(y0c, x1c, ch) * wx;
                float bot = src.at(y1c, x0c, ch) * (1.f - wx) + src.at(y1c, x1c, ch) * wx;
                dst.at(y, x, ch) = top * (1.f - wy) + bot * wy;
            }
        }
    }
    return dst;
}

Image crop_image(const Image& src, int x0, int y0, int w, int h) {
    POSEAC_CHECK(x0 >= 0 && y0 >= 0 && w > 0 && h > 0 && x0 + w <= src.w &&
                     y0 + h <= src.h,
                 "crop (", x0, ",", y0, ",", w, "x", h, ") outside ", src.w, "x", src.h);
    Image dst(h, w, src.c);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < src.c; ++ch) dst.at(y, x, ch) = src.at(y0 + y, x0 + x, ch);
    return dst;
}

void clamp01(Image& img) {
    for (float& v : img.px) v = std::clamp(v, 0.f, 1.f);
}

namespace {

inline void blend_px(Image& img, int y, int x, float cov, const float color[3]) {
    if (cov <= 0.f) return;
    cov = std::min(cov, 1.f);
    for (int ch = 0; ch < 3; ++ch) {
        float& dst = img.at(y, x, ch);
        dst = dst * (1.f - cov) + color[ch] * cov;
    }
}

}  // namespace

void draw_line_aa(Image& img, float x0, float y0, float x1, float y1, float half_width,
                  const float color[3]) {
    const float dx = x1 - x0, dy = y1 - y0;
    const float len2 = dx * dx + dy * dy;
    const int xmin = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - half_width - 1.f)));
    const int xmax = std::min(img.w - 1, static_cast<int>(std::ceil(std::max(x0, x1) + half_width + 1.f)));
    const int ymin = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - half_width - 1.f)));
    const int ymax = std::min(img.h - 1, static_cast<int>(std::ceil(std::max(y0, y1) + half_width + 1.f)));
    for (int y = ymin; y <= ymax; ++y) {
        for (int x = xmin; x <= xmax; ++x) {
            float px = x + 0.5f, py = y + 0.5f;
            float t = 0.f;
            if (len2 > 0.f) t = std::clamp(((px - x0) * dx + (py - y0) * dy) / len2, 0.f, 1.f);
            float cx = x0 + t * dx, cy = y0 + t * dy;
            float dist = std::sqrt((px - cx) * (px - cx) + (py - cy) * (py - cy));
            blend_px(img, y, x, half_width + 0.5f - dist, color);
        }
    }
}

void draw_disc_aa(Image& img, float cx, float cy, float radius, const float color[3]) {
    const int xmin = std::max(0, static_cast<int>(std::floor(cx - radius - 1.f)));
    const int xmax = std::min(img.w - 1, static_cast<int>(std::ceil(cx + radius + 1.f)));
    const int ymin = std::max(0, static_cast<int>(std::floor(cy - radius - 1.f)));
    const int ymax = std::min(img.h - 1, static_cast<int>(std::ceil(cy + radius + 1.f)));
    for (int y = ymin; y <= ymax; ++y) {
        for (int x = xmin; x <= xmax; ++x) {
            float dist = std::sqrt((x + 0.5f - cx) * (x + 0.5f - cx) + (y + 0.5f - cy) * (y + 0.5f - cy));
            blend_px(img, y, x, radius + 0.5f - dist, color);
        }
    }
}

}  // namespace poseac
