#include <catch2/catch.hpp>

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "wnct/io/container.hpp"
#include "wnct/io/csv.hpp"
#include "wnct/io/manifest.hpp"
#include "wnct/io/png_io.hpp"
#include "wnct/rng.hpp"

using namespace wnct;

namespace {

std::string tmp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("wnct_io_" + name)).string();
}

std::string read_all(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("tensor container round trip is bitwise lossless", "[container]") {
    Rng rng(201);
    io::TensorFile t;
    t.dtype = 0;
    t.dims = {3, 5, 7};
    for (int i = 0; i < 3 * 5 * 7; ++i) t.f32.push_back(float(rng.normal()));
    const std::string path = tmp_file("roundtrip.wnct");
    io::write_tensor(path, t);
    const auto back = io::read_tensor(path);
    REQUIRE(back.dtype == 0);
    REQUIRE(back.dims == t.dims);
    REQUIRE(std::memcmp(back.f32.data(), t.f32.data(), t.f32.size() * 4) == 0);

    io::TensorFile d;
    d.dtype = 1;
    d.dims = {4, 4};
    for (int i = 0; i < 16; ++i) d.f64.push_back(rng.normal());
    io::write_tensor(path, d);
    const auto back64 = io::read_tensor(path);
    REQUIRE(back64.dtype == 1);
    REQUIRE(std::memcmp(back64.f64.data(), d.f64.data(), d.f64.size() * 8) == 0);
}

TEST_CASE("tensor container header layout is pinned", "[container]") {
    io::TensorFile t;
    t.dtype = 0;
    t.dims = {2};
    t.f32 = {1.0f, -2.0f};
    const std::string path = tmp_file("header.wnct");
    io::write_tensor(path, t);
    const std::string raw = read_all(path);
    REQUIRE(raw.size() == 4 + 2 + 1 + 1 + 4 + 8);
    REQUIRE(raw.substr(0, 4) == "WNCT");
    REQUIRE(std::uint8_t(raw[4]) == 1); // version u16 little-endian
    REQUIRE(std::uint8_t(raw[5]) == 0);
    REQUIRE(std::uint8_t(raw[6]) == 0); // dtype f32
    REQUIRE(std::uint8_t(raw[7]) == 1); // rank
    REQUIRE(std::uint8_t(raw[8]) == 2); // dims[0] = 2 LE
}

TEST_CASE("tensor container rejects corrupt input", "[container]") {
    const std::string path = tmp_file("corrupt.wnct");
    {
        std::ofstream f(path, std::ios::binary);
        f << "NOPE";
    }
    REQUIRE_THROWS_AS(io::read_tensor(path), data_error);

    io::TensorFile t;
    t.dtype = 0;
    t.dims = {4};
    t.f32 = {1, 2, 3, 4};
    io::write_tensor(path, t);
    auto raw = read_all(path);
    raw.pop_back(); // truncate payload
    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << raw;
    }
    REQUIRE_THROWS_AS(io::read_tensor(path), data_error);

    io::TensorFile mismatch;
    mismatch.dtype = 0;
    mismatch.dims = {5};
    mismatch.f32 = {1, 2};
    REQUIRE_THROWS_AS(io::write_tensor(path, mismatch), data_error);
}

TEST_CASE("csv files carry the version comment and header") {
    const std::string path = tmp_file("out.csv");
    {
        io::CsvWriter csv(path, {"a", "b"}, "deadbeef");
        csv.write_row({"1", io::format_double(0.5)});
    }
    const std::string raw = read_all(path);
    REQUIRE(raw.rfind("# wnct ", 0) == 0);
    REQUIRE(raw.find("config_hash=deadbeef") != std::string::npos);
    REQUIRE(raw.find("a,b\n") != std::string::npos);
    REQUIRE(raw.find("1,0.5\n") != std::string::npos);
}

TEST_CASE("format_double round-trips exactly", "[property]") {
    Rng rng(203);
    for (int i = 0; i < 2000; ++i) {
        double v;
        switch (i % 4) {
            case 0: v = rng.normal(); break;
            case 1: v = rng.normal() * 1e-12; break;
            case 2: v = rng.normal() * 1e15; break;
            default: v = double(float(rng.normal())); break;
        }
        double back = 0.0;
        std::sscanf(io::format_double(v).c_str(), "%lf", &back);
        REQUIRE(back == v);
    }
}

TEST_CASE("config hash is stable") {
    REQUIRE(io::fnv1a64("") == 0xcbf29ce484222325ull);
    REQUIRE(io::fnv1a64("wnct") == io::fnv1a64("wnct"));
    REQUIRE(io::fnv1a64("wnct") != io::fnv1a64("wnCt"));
    REQUIRE(io::hash_hex(0x1234abcdull) == "000000001234abcd");
}

TEST_CASE("phantom specs survive a JSON round trip") {
    const auto spec = ct::random_abdomen(77);
    const auto j = io::phantom_to_json(spec);
    const auto back = io::phantom_from_json(j);
    REQUIRE(back.ellipses.size() == spec.ellipses.size());
    REQUIRE(back.vessels.size() == spec.vessels.size());
    for (std::size_t i = 0; i < spec.ellipses.size(); ++i) {
        REQUIRE(back.ellipses[i].a == spec.ellipses[i].a);
        REQUIRE(back.ellipses[i].value == spec.ellipses[i].value);
    }
}

TEST_CASE("16-bit png writes what we asked for", "[png]") {
    const int h = 8, w = 12;
    std::vector<double> values(std::size_t(h) * w);
    for (int i = 0; i < h * w; ++i) values[std::size_t(i)] = double(i) / (h * w - 1);
    const std::string path = tmp_file("gray.png");
    io::write_png16(path, values, h, w);

    std::FILE* fp = std::fopen(path.c_str(), "rb");
    REQUIRE(fp != nullptr);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, fp);
    png_read_info(png, info);
    REQUIRE(png_get_image_width(png, info) == png_uint_32(w));
    REQUIRE(png_get_image_height(png, info) == png_uint_32(h));
    REQUIRE(png_get_bit_depth(png, info) == 16);
    REQUIRE(png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY);
    std::vector<unsigned char> row(std::size_t(w) * 2);
    double worst = 0.0;
    for (int r = 0; r < h; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (int c = 0; c < w; ++c) {
            const unsigned v = (unsigned(row[std::size_t(c) * 2]) << 8) | row[std::size_t(c) * 2 + 1];
            worst = std::max(worst, std::fabs(v / 65535.0 - values[std::size_t(r) * w + c]));
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    REQUIRE(worst < 1.0 / 65535.0);
}

TEST_CASE("montage stitches panels with separators", "[png]") {
    Image a(16, 16), b(16, 16);
    for (auto& v : a.v) v = 0.25;
    for (auto& v : b.v) v = 0.75;
    const std::string path = tmp_file("montage.png");
    io::write_montage_png(path, {a, b});
    REQUIRE(std::filesystem::file_size(path) > 0);
}
