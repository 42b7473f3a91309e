// Just enough PNG parsing to verify what the encoder wrote: chunk walk with
// CRC checks, then one inflate of the concatenated IDAT payload.
#pragma once

#include <gtest/gtest.h>

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <zlib.h>

struct ParsedPng {
    uint32_t width = 0, height = 0;
    int bit_depth = 0, colour_type = 0;
    std::vector<unsigned char> pixels;  // filter bytes stripped
};

inline uint32_t png_be32(const unsigned char* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

inline ParsedPng parse_png(const std::vector<unsigned char>& b) {
    static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    ParsedPng out;
    EXPECT_GE(b.size(), 8u);
    if (b.size() < 8) return out;
    EXPECT_EQ(0, std::memcmp(b.data(), sig, 8));
    std::vector<unsigned char> idat;
    size_t pos = 8;
    bool saw_end = false;
    while (pos + 12 <= b.size()) {
        const uint32_t len = png_be32(&b[pos]);
        EXPECT_LE(pos + 12 + len, b.size());
        if (pos + 12 + len > b.size()) return out;
        const std::string type(reinterpret_cast<const char*>(&b[pos + 4]), 4);
        uLong crc = crc32(0L, Z_NULL, 0);
        crc = crc32(crc, &b[pos + 4], 4 + len);
        EXPECT_EQ(static_cast<uint32_t>(crc), png_be32(&b[pos + 8 + len])) << "crc for " << type;
        const unsigned char* data = &b[pos + 8];
        if (type == "IHDR") {
            EXPECT_EQ(len, 13u);
            if (len != 13) return out;
            out.width = png_be32(data);
            out.height = png_be32(data + 4);
            out.bit_depth = data[8];
            out.colour_type = data[9];
            EXPECT_EQ(data[10], 0);  // compression
            EXPECT_EQ(data[11], 0);  // filter method
            EXPECT_EQ(data[12], 0);  // no interlace
        } else if (type == "IDAT") {
            idat.insert(idat.end(), data, data + len);
        } else if (type == "IEND") {
            EXPECT_EQ(len, 0u);
            saw_end = true;
        }
        pos += 12 + len;
    }
    EXPECT_EQ(pos, b.size());
    EXPECT_TRUE(saw_end);

    const int ch = out.colour_type == 2 ? 3 : 1;
    const size_t stride = static_cast<size_t>(out.width) * ch;
    std::vector<unsigned char> raw((stride + 1) * out.height);
    uLongf raw_len = static_cast<uLongf>(raw.size());
    if (uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
        raw_len != raw.size()) {
        ADD_FAILURE() << "inflate failed";
        return out;
    }
    for (uint32_t r = 0; r < out.height; ++r) {
        EXPECT_EQ(raw[r * (stride + 1)], 0) << "filter byte, row " << r;
        out.pixels.insert(out.pixels.end(), raw.begin() + r * (stride + 1) + 1,
                          raw.begin() + (r + 1) * (stride + 1));
    }
    return out;
}
