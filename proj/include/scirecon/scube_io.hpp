#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "scirecon/core.hpp"

namespace scirecon {

/// FNV-1a, 64-bit. Used for input digests in run manifests.
inline uint64_t fnv1a64(const unsigned char* p, size_t n) {
    uint64_t h = 14695981039346656037ULL;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t fnv1a64(const std::vector<unsigned char>& bytes) {
    return fnv1a64(bytes.data(), bytes.size());
}

inline uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(reinterpret_cast<const unsigned char*>(s.data()), s.size());
}

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (in.bad()) throw ParseError("read failed on " + path);
    return bytes;
}

inline uint64_t file_digest(const std::string& path) { return fnv1a64(read_file_bytes(path)); }

/// Spectral cube container format:
///   "SCUB", version byte 1, then channels/rows/cols as u32 little-endian,
///   then channels·rows·cols IEEE f32 little-endian in [channel][row][col]
///   order, then an optional wavelength block: marker 0x57 plus one f32 per
///   channel (nanometres). Round trips are bit exact.
struct ScubeData {
    Cube<float> cube;
    std::vector<float> wavelengths;  // empty when the file carries none
};

namespace detail {

inline void put_u32le(std::vector<unsigned char>& out, uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

inline void put_f32le(std::vector<unsigned char>& out, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32le(out, v);
}

class ByteReader {
  public:
    ByteReader(const std::vector<unsigned char>& bytes, std::string origin)
        : bytes_(bytes), origin_(std::move(origin)) {}

    unsigned char u8() {
        need(1);
        return bytes_[pos_++];
    }

    uint32_t u32le() {
        need(4);
        uint32_t v = static_cast<uint32_t>(bytes_[pos_]) |
                     (static_cast<uint32_t>(bytes_[pos_ + 1]) << 8) |
                     (static_cast<uint32_t>(bytes_[pos_ + 2]) << 16) |
                     (static_cast<uint32_t>(bytes_[pos_ + 3]) << 24);
        pos_ += 4;
        return v;
    }

    float f32le() {
        uint32_t v = u32le();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }

    size_t remaining() const { return bytes_.size() - pos_; }

    void need(size_t n) const {
        if (bytes_.size() - pos_ < n) throw ParseError(origin_ + ": truncated file");
    }

  private:
    const std::vector<unsigned char>& bytes_;
    std::string origin_;
    size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> encode_scube(const Cube<float>& cube,
                                               const std::vector<float>* wavelengths = nullptr) {
    if (wavelengths && !wavelengths->empty() &&
        static_cast<int>(wavelengths->size()) != cube.channels)
        throw DimensionError("wavelength list must have one entry per channel");
    std::vector<unsigned char> out;
    out.reserve(17 + 4 * cube.data.size());
    out.insert(out.end(), {'S', 'C', 'U', 'B'});
    out.push_back(1);
    detail::put_u32le(out, static_cast<uint32_t>(cube.channels));
    detail::put_u32le(out, static_cast<uint32_t>(cube.rows));
    detail::put_u32le(out, static_cast<uint32_t>(cube.cols));
    for (float f : cube.data) detail::put_f32le(out, f);
    if (wavelengths && !wavelengths->empty()) {
        out.push_back(0x57);
        for (float f : *wavelengths) detail::put_f32le(out, f);
    }
    return out;
}

inline ScubeData decode_scube(const std::vector<unsigned char>& bytes,
                              const std::string& origin = "scube") {
    detail::ByteReader rd(bytes, origin);
    rd.need(4);
    if (rd.u8() != 'S' || rd.u8() != 'C' || rd.u8() != 'U' || rd.u8() != 'B')
        throw ParseError(origin + ": not a spectral cube file (bad magic)");
    unsigned version = rd.u8();
    if (version != 1)
        throw ParseError(origin + ": unsupported version " + std::to_string(version));
    uint32_t nl = rd.u32le(), nr = rd.u32le(), nc = rd.u32le();
    if (nl == 0 || nr == 0 || nc == 0) throw ParseError(origin + ": zero dimension in header");
    const uint64_t count = static_cast<uint64_t>(nl) * nr * nc;
    if (count > (1ULL << 30)) throw ParseError(origin + ": header dimensions implausibly large");

    ScubeData out;
    out.cube = Cube<float>(static_cast<int>(nl), static_cast<int>(nr), static_cast<int>(nc));
    rd.need(4 * count);
    for (size_t i = 0; i < count; ++i) out.cube.data[i] = rd.f32le();

    if (rd.remaining() > 0) {
        if (rd.u8() != 0x57) throw ParseError(origin + ": unknown trailing block");
        out.wavelengths.resize(nl);
        for (uint32_t i = 0; i < nl; ++i) out.wavelengths[i] = rd.f32le();
    }
    if (rd.remaining() != 0) throw ParseError(origin + ": trailing bytes after payload");
    return out;
}

inline void write_scube(const std::string& path, const Cube<float>& cube,
                        const std::vector<float>* wavelengths = nullptr) {
    auto bytes = encode_scube(cube, wavelengths);
    std::ofstream outf(path, std::ios::binary | std::ios::trunc);
    if (!outf) throw ParseError("cannot write " + path);
    outf.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    if (!outf) throw ParseError("write failed on " + path);
}

inline ScubeData read_scube(const std::string& path) {
    return decode_scube(read_file_bytes(path), path);
}

}  // namespace scirecon
