#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "scirecon/core.hpp"

namespace scirecon {

namespace detail {

inline void png_put_u32be(std::vector<unsigned char>& out, uint32_t v) {
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>(v & 0xff));
}

inline void png_chunk(std::vector<unsigned char>& out, const char type[4],
                      const std::vector<unsigned char>& data) {
    png_put_u32be(out, static_cast<uint32_t>(data.size()));
    const size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + start, static_cast<uInt>(4 + data.size()));
    png_put_u32be(out, static_cast<uint32_t>(crc));
}

}  // namespace detail

/// Minimal PNG encoder: 8-bit grayscale or RGB, filter type 0 on every
/// scanline, one zlib-compressed IDAT chunk.
inline std::vector<unsigned char> encode_png(const unsigned char* pixels, int width, int height,
                                             int channels) {
    if (width < 1 || height < 1) throw DimensionError("png: image must be at least 1x1");
    if (channels != 1 && channels != 3) throw ConfigError("png: only gray or rgb supported");

    const size_t stride = static_cast<size_t>(width) * channels;
    std::vector<unsigned char> raw;
    raw.reserve((stride + 1) * height);
    for (int r = 0; r < height; ++r) {
        raw.push_back(0);  // filter byte: none
        raw.insert(raw.end(), pixels + r * stride, pixels + (r + 1) * stride);
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> packed(bound);
    if (compress2(packed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw ParseError("png: deflate failed");
    packed.resize(bound);

    std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<unsigned char> ihdr;
    detail::png_put_u32be(ihdr, static_cast<uint32_t>(width));
    detail::png_put_u32be(ihdr, static_cast<uint32_t>(height));
    ihdr.push_back(8);                                   // bit depth
    ihdr.push_back(channels == 1 ? 0 : 2);               // colour type
    ihdr.insert(ihdr.end(), {0, 0, 0});                  // compression, filter, interlace
    detail::png_chunk(out, "IHDR", ihdr);
    detail::png_chunk(out, "IDAT", packed);
    detail::png_chunk(out, "IEND", {});
    return out;
}

inline void write_png(const std::string& path, const std::vector<unsigned char>& pixels,
                      int width, int height, int channels) {
    if (pixels.size() != static_cast<size_t>(width) * height * channels)
        throw DimensionError("png: pixel buffer does not match the stated size");
    auto bytes = encode_png(pixels.data(), width, height, channels);
    std::ofstream outf(path, std::ios::binary | std::ios::trunc);
    if (!outf) throw ParseError("cannot write " + path);
    outf.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    if (!outf) throw ParseError("write failed on " + path);
}

inline void write_png_gray(const std::string& path, const std::vector<unsigned char>& pixels,
                           int width, int height) {
    write_png(path, pixels, width, height, 1);
}

inline void write_png_rgb(const std::string& path, const std::vector<unsigned char>& pixels,
                          int width, int height) {
    write_png(path, pixels, width, height, 3);
}

}  // namespace scirecon
