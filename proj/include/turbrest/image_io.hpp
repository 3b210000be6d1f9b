#pragma once
// Grayscale frame I/O: PNG through libpng, binary PGM (P5) directly.
// Color PNGs are reduced with Rec. 601 luma weights; all inputs map to [0,1].

#include "turbrest/core.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace turbrest {

namespace fs = std::filesystem;

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline std::string lower_extension(const fs::path& p)
{
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

inline unsigned char to_byte(double v)
{
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

/// Decodes to 8-bit gray or RGB; returns false on any libpng error. Buffers live in
/// the caller because libpng reports errors by longjmp, which skips destructors.
inline bool png_decode(std::FILE* fp, std::vector<unsigned char>& pixels, std::vector<png_bytep>& row_ptrs,
                       png_uint_32& width, png_uint_32& height, int& channels)
{
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) {
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_tRNS_to_alpha(png);
        png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);
    channels = png_get_channels(png, info);
    if ((channels != 1 && channels != 3) || png_get_bit_depth(png, info) != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
    pixels.resize(stride * height);
    row_ptrs.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        row_ptrs[y] = pixels.data() + static_cast<std::size_t>(y) * stride;
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

inline bool png_encode(std::FILE* fp, const std::vector<unsigned char>& pixels, png_uint_32 width, png_uint_32 height)
{
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) {
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (png_uint_32 y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(y) * width));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

}  // namespace detail

inline Frame read_png(const fs::path& path)
{
    detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) {
        throw Error("cannot open " + path.string());
    }
    std::vector<unsigned char> pixels;
    std::vector<png_bytep> row_ptrs;
    png_uint_32 w = 0;
    png_uint_32 h = 0;
    int channels = 0;
    if (!detail::png_decode(fp.get(), pixels, row_ptrs, w, h, channels) || w == 0 || h == 0) {
        throw Error("cannot decode PNG " + path.string());
    }
    // Luma weights apply to the stored (gamma-encoded) values, not linear light.
    Frame f(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(w));
    for (png_uint_32 y = 0; y < h; ++y) {
        for (png_uint_32 x = 0; x < w; ++x) {
            const unsigned char* p = pixels.data() + (static_cast<std::size_t>(y) * w + x) * static_cast<std::size_t>(channels);
            f(y, x) = (channels == 1 ? p[0] : 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
        }
    }
    return f;
}

/// 8-bit grayscale PNG; values are clamped to [0,1] and rounded to the nearest level.
inline void write_png(const fs::path& path, const Frame& frame)
{
    const auto w = static_cast<png_uint_32>(frame.cols());
    const auto h = static_cast<png_uint_32>(frame.rows());
    std::vector<unsigned char> pixels(static_cast<std::size_t>(w) * h);
    for (png_uint_32 y = 0; y < h; ++y) {
        for (png_uint_32 x = 0; x < w; ++x) {
            pixels[static_cast<std::size_t>(y) * w + x] = detail::to_byte(frame(y, x));
        }
    }
    detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) {
        throw Error("cannot write " + path.string());
    }
    if (!detail::png_encode(fp.get(), pixels, w, h)) {
        throw Error("cannot encode PNG " + path.string());
    }
}

/// Binary PGM with maxval up to 65535 (two bytes per sample, big-endian, above 255).
inline Frame read_pgm(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    auto token = [&]() {
        std::string t;
        char c = 0;
        while (in.get(c)) {
            if (c == '#') {
                std::string skip;
                std::getline(in, skip);
            } else if (!std::isspace(static_cast<unsigned char>(c))) {
                t.push_back(c);
                break;
            }
        }
        while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) {
            t.push_back(c);
        }
        return t;
    };
    if (token() != "P5") {
        throw Error(path.string() + " is not a binary PGM (P5)");
    }
    long w = 0, h = 0, maxval = 0;
    try {
        w = std::stol(token());
        h = std::stol(token());
        maxval = std::stol(token());
    } catch (const std::exception&) {
        throw Error("malformed PGM header in " + path.string());
    }
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) {
        throw Error("malformed PGM header in " + path.string());
    }
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> data(static_cast<std::size_t>(w * h * bytes));
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (in.gcount() != static_cast<std::streamsize>(data.size())) {
        throw Error("truncated PGM data in " + path.string());
    }
    Frame f(h, w);
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>((y * w + x) * bytes);
            const long v = bytes == 2 ? (data[i] << 8) | data[i + 1] : data[i];
            f(y, x) = std::min(1.0, static_cast<double>(v) / static_cast<double>(maxval));
        }
    }
    return f;
}

inline void write_pgm(const fs::path& path, const Frame& frame)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "P5\n" << frame.cols() << ' ' << frame.rows() << "\n255\n";
    for (Eigen::Index y = 0; y < frame.rows(); ++y) {
        for (Eigen::Index x = 0; x < frame.cols(); ++x) {
            out.put(static_cast<char>(detail::to_byte(frame(y, x))));
        }
    }
    if (!out) {
        throw Error("cannot write " + path.string());
    }
}

inline bool is_image_file(const fs::path& p)
{
    const std::string ext = detail::lower_extension(p);
    return ext == ".png" || ext == ".pgm";
}

/// Reads a PNG or PGM by extension.
inline Frame read_image(const fs::path& path)
{
    const std::string ext = detail::lower_extension(path);
    if (ext == ".png") return read_png(path);
    if (ext == ".pgm") return read_pgm(path);
    throw Error("unsupported image format: " + path.string());
}

inline void write_image(const fs::path& path, const Frame& frame)
{
    if (detail::lower_extension(path) == ".pgm") {
        write_pgm(path, frame);
    } else {
        write_png(path, frame);
    }
}

/// Every PNG/PGM in `dir`, in lexicographic filename order.
inline std::vector<fs::path> list_frames(const fs::path& dir)
{
    if (!fs::is_directory(dir)) {
        throw Error(dir.string() + " is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    return files;
}

/// Loads a directory as a stack; frames whose size differs from the first are listed in the error.
inline FrameStack read_frame_directory(const fs::path& dir)
{
    const auto files = list_frames(dir);
    if (files.empty()) {
        throw Error("no PNG or PGM frames in " + dir.string());
    }
    std::vector<Frame> frames;
    frames.reserve(files.size());
    std::vector<std::string> offending;
    for (const auto& f : files) {
        frames.push_back(read_image(f));
        if (frames.back().rows() != frames.front().rows() || frames.back().cols() != frames.front().cols()) {
            offending.push_back(f.filename().string() + " (" + std::to_string(frames.back().cols()) + "x" +
                                std::to_string(frames.back().rows()) + ")");
        }
    }
    if (!offending.empty()) {
        std::ostringstream msg;
        msg << "mixed frame dimensions: expected " << frames.front().cols() << "x" << frames.front().rows() << " from "
            << files.front().filename().string() << ", got";
        for (const auto& o : offending) {
            msg << ' ' << o;
        }
        throw Error(msg.str());
    }
    return FrameStack(std::move(frames));
}

}  // namespace turbrest
