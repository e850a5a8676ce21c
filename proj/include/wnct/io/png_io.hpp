#pragma once

#include <png.h>

#include <cstdio>
#include <string>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/image.hpp"

namespace wnct::io {

/// Write a 16-bit grayscale PNG. Values are windowed from [lo, hi] to the
/// full sample range and clamped.
inline void write_png16(const std::string& path, const std::vector<double>& values, int height,
                        int width, double lo = 0.0, double hi = 1.0) {
    require(int(values.size()) == height * width, "write_png16: size mismatch");
    require(hi > lo, "write_png16: window must be increasing");
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    require(fp != nullptr, "write_png16: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw data_error("write_png16: libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw data_error("write_png16: libpng write failed for " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(std::size_t(width) * 2);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double t = (values[std::size_t(r) * width + c] - lo) / (hi - lo);
            t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
            const unsigned v = unsigned(t * 65535.0 + 0.5);
            row[std::size_t(c) * 2] = (unsigned char)(v >> 8); // network byte order
            row[std::size_t(c) * 2 + 1] = (unsigned char)(v & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

/// Side-by-side panel montage with thin separators, each panel one image.
inline void write_montage_png(const std::string& path, const std::vector<Image>& panels,
                              double lo = 0.0, double hi = 1.0) {
    require(!panels.empty(), "write_montage_png: no panels");
    const int h = panels[0].height, w = panels[0].width;
    for (const auto& p : panels)
        require(p.height == h && p.width == w, "write_montage_png: panel size mismatch");
    const int sep = 2;
    const int total_w = int(panels.size()) * w + (int(panels.size()) - 1) * sep;
    std::vector<double> canvas(std::size_t(h) * total_w, hi); // separators come out white
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const int x0 = int(p) * (w + sep);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                canvas[std::size_t(r) * total_w + x0 + c] = panels[p].at(r, c);
    }
    write_png16(path, canvas, h, total_w, lo, hi);
}

} // namespace wnct::io
