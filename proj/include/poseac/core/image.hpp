#pragma once

#include <filesystem>
#include <vector>

namespace poseac {

// Float image, HWC layout, values nominally in [0,1].
struct Image {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<float> px;

    Image() = default;
    Image(int h_, int w_, int c_, float fill = 0.f)
        : h(h_), w(w_), c(c_), px(static_cast<size_t>(h_) * w_ * c_, fill) {}

    float& at(int y, int x, int ch) { return px[(static_cast<size_t>(y) * w + x) * c + ch]; }
    float at(int y, int x, int ch) const { return px[(static_cast<size_t>(y) * w + x) * c + ch]; }
    size_t size() const { return px.size(); }
    bool same_shape(const Image& o) const { return h == o.h && w == o.w && c == o.c; }
};

// 8-bit PNG round trip. Write quantizes with round(v*255) after clamping.
void save_png(const Image& img, const std::filesystem::path& path);
Image load_png(const std::filesystem::path& path);

Image resize_bilinear(const Image& src, int out_h, int out_w);

// Copy of the pixel rectangle columns [x0, x0+w), rows [y0, y0+h).
Image crop_image(const Image& src, int x0, int y0, int w, int h);

void clamp01(Image& img);

// Anti-aliased drawing, used by the walker renderer and report overlays.
// Coverage falls off linearly over one pixel at the shape boundary.
void draw_line_aa(Image& img, float x0, float y0, float x1, float y1, float half_width,
                  const float color[3]);
void draw_disc_aa(Image& img, float cx, float cy, float radius, const float color[3]);

}  // namespace poseac
