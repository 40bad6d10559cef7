// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "lvgen/common.hpp"
#include "lvgen/model.hpp"
#include "lvgen/tensor.hpp"

namespace lvgen {

// LVTF: magic "LVTF", u32 version, u8 dtype (0 = f32 LE, 1 = f64 LE),
// u32 ndim, u32 dims[ndim], then raw row-major payload.
constexpr std::uint32_t kLvtfVersion = 1;
enum class LvtfDtype : std::uint8_t { F32 = 0, F64 = 1 };

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct ByteReader {
    const std::string& buf;
    std::size_t pos = 0;

    bool avail(std::size_t n) const { return pos + n <= buf.size(); }

    std::uint8_t u8(const char* what) {
        if (!avail(1)) throw FormatError(std::string("truncated ") + what + " at byte offset " + std::to_string(pos));
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::uint32_t u32(const char* what) {
        if (!avail(4)) throw FormatError(std::string("truncated ") + what + " at byte offset " + std::to_string(pos));
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        if (!avail(8)) throw FormatError(std::string("truncated ") + what + " at byte offset " + std::to_string(pos));
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 8;
        return v;
    }
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return buf;
}

inline void write_file(const std::string& path, const std::string& buf) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw FormatError("write failed for " + path);
}

// Append an IEEE-754 value little-endian.
inline void put_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

inline void put_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(buf, bits);
}

inline std::uint64_t fnv1a64(const char* data, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<std::uint8_t>(data[i]);
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

inline void write_lvtf(const std::string& path, const VideoTensor& tensor, LvtfDtype dtype = LvtfDtype::F64) {
    std::string buf;
    buf += "LVTF";
    detail::put_u32(buf, kLvtfVersion);
    buf.push_back(static_cast<char>(dtype));
    detail::put_u32(buf, 4);
    for (std::int64_t d : {tensor.t, tensor.c, tensor.h, tensor.w})
        detail::put_u32(buf, static_cast<std::uint32_t>(d));
    for (double v : tensor.data) {
        if (dtype == LvtfDtype::F32)
            detail::put_f32(buf, static_cast<float>(v));
        else
            detail::put_f64(buf, v);
    }
    detail::write_file(path, buf);
}

inline VideoTensor read_lvtf(const std::string& path) {
    const std::string buf = detail::read_file(path);
    detail::ByteReader r{buf};
    if (!r.avail(4) || buf.compare(0, 4, "LVTF") != 0)
        throw FormatError(path + ": bad magic at byte offset 0 (expected \"LVTF\")");
    r.pos = 4;
    const std::uint32_t version = r.u32("version");
    if (version != kLvtfVersion)
        throw FormatError(path + ": unsupported version " + std::to_string(version) + " at byte offset 4");
    const std::uint8_t dtype = r.u8("dtype");
    if (dtype > 1)
        throw FormatError(path + ": unsupported dtype code " + std::to_string(dtype) + " at byte offset 8");
    const std::uint32_t ndim = r.u32("ndim");
    if (ndim != 4) throw FormatError(path + ": expected 4 dims, got " + std::to_string(ndim));
    std::int64_t dims[4];
    std::uint64_t count = 1;
    for (auto& d : dims) {
        d = static_cast<std::int64_t>(r.u32("dims"));
        count *= static_cast<std::uint64_t>(d);
    }
    const std::size_t elem = dtype == 0 ? 4 : 8;
    const std::size_t expected = static_cast<std::size_t>(count) * elem;
    if (buf.size() - r.pos != expected)
        throw FormatError(path + ": payload length " + std::to_string(buf.size() - r.pos) + " at byte offset " +
                          std::to_string(r.pos) + " does not match declared " + std::to_string(expected) + " bytes");
    VideoTensor out(dims[0], dims[1], dims[2], dims[3]);
    for (double& v : out.data) {
        if (dtype == 0) {
            const std::uint32_t bits = r.u32("payload");
            float f;
            std::memcpy(&f, &bits, 4);
            v = static_cast<double>(f);
        } else {
            const std::uint64_t bits = r.u64("payload");
            double d;
            std::memcpy(&d, &bits, 8);
            v = d;
        }
    }
    return out;
}

// LVCK checkpoint: magic, version, ModelConfig fields, named f32 weight
// tensors, and a trailing FNV-1a checksum of all weight payload bytes.
constexpr std::uint32_t kLvckVersion = 1;

inline void save_checkpoint(const std::string& path, ControlDiT& model) {
    std::string buf;
    buf += "LVCK";
    detail::put_u32(buf, kLvckVersion);
    const ModelConfig& c = model.config;
    for (std::int64_t v : {c.token_dim, c.n_base_blocks, c.n_control_blocks, c.n_heads, c.patch, c.timesteps,
                           c.lat_t, c.lat_c, c.lat_h, c.lat_w})
        detail::put_u32(buf, static_cast<std::uint32_t>(v));

    std::uint32_t n_tensors = 0;
    model.visit_all([&](const std::string&, Param&) { ++n_tensors; });
    detail::put_u32(buf, n_tensors);

    std::uint64_t checksum = 0xCBF29CE484222325ULL;
    model.visit_all([&](const std::string& name, Param& p) {
        detail::put_u32(buf, static_cast<std::uint32_t>(name.size()));
        buf += name;
        detail::put_u32(buf, static_cast<std::uint32_t>(p.shape.size()));
        for (std::int64_t d : p.shape) detail::put_u32(buf, static_cast<std::uint32_t>(d));
        std::string payload;
        for (double v : p.w) detail::put_f32(payload, static_cast<float>(v));
        checksum = detail::fnv1a64(payload.data(), payload.size(), checksum);
        buf += payload;
    });
    detail::put_u64(buf, checksum);
    detail::write_file(path, buf);
}

inline ControlDiT load_checkpoint(const std::string& path) {
    const std::string buf = detail::read_file(path);
    detail::ByteReader r{buf};
    if (!r.avail(4) || buf.compare(0, 4, "LVCK") != 0)
        throw FormatError(path + ": bad magic at byte offset 0 (expected \"LVCK\")");
    r.pos = 4;
    const std::uint32_t version = r.u32("version");
    if (version != kLvckVersion)
        throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));
    ModelConfig c;
    for (std::int64_t* f : {&c.token_dim, &c.n_base_blocks, &c.n_control_blocks, &c.n_heads, &c.patch,
                            &c.timesteps, &c.lat_t, &c.lat_c, &c.lat_h, &c.lat_w})
        *f = static_cast<std::int64_t>(r.u32("config"));
    ControlDiT model = init_model(c, 0);

    const std::uint32_t n_tensors = r.u32("tensor count");
    std::uint32_t seen = 0;
    std::uint64_t checksum = 0xCBF29CE484222325ULL;
    std::vector<std::pair<std::string, Param*>> params;
    model.visit_all([&](const std::string& name, Param& p) { params.emplace_back(name, &p); });
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const std::uint32_t name_len = r.u32("name length");
        if (!r.avail(name_len)) throw FormatError(path + ": truncated tensor name at byte offset " + std::to_string(r.pos));
        const std::string name = buf.substr(r.pos, name_len);
        r.pos += name_len;
        const std::uint32_t ndim = r.u32("tensor ndim");
        std::vector<std::int64_t> shape;
        std::uint64_t count = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            shape.push_back(static_cast<std::int64_t>(r.u32("tensor dims")));
            count *= static_cast<std::uint64_t>(shape.back());
        }
        Param* target = nullptr;
        for (auto& [pname, p] : params)
            if (pname == name) target = p;
        if (!target) throw FormatError(path + ": unknown tensor \"" + name + "\"");
        if (target->shape != shape) throw FormatError(path + ": shape mismatch for tensor \"" + name + "\"");
        const std::size_t payload_start = r.pos;
        for (double& v : target->w) {
            const std::uint32_t bits = r.u32("tensor payload");
            float f;
            std::memcpy(&f, &bits, 4);
            v = static_cast<double>(f);
        }
        checksum = detail::fnv1a64(buf.data() + payload_start, static_cast<std::size_t>(count) * 4, checksum);
        ++seen;
    }
    if (seen != n_tensors) throw FormatError(path + ": tensor count mismatch");
    const std::uint64_t declared = r.u64("checksum");
    if (declared != checksum)
        throw FormatError(path + ": weight checksum mismatch at byte offset " + std::to_string(r.pos - 8));
    return model;
}

// Grayscale frame dump for eyeballing; values clamped to [0, 1].
inline void write_pgm(const std::string& path, const VideoTensor& video, std::int64_t frame) {
    if (frame < 0 || frame >= video.t) throw InvalidInput("write_pgm: frame out of range");
    std::string buf = "P5\n" + std::to_string(video.w) + " " + std::to_string(video.h) + "\n255\n";
    for (std::int64_t y = 0; y < video.h; ++y)
        for (std::int64_t x = 0; x < video.w; ++x) {
            double v = video.at(frame, 0, y, x);
            v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            buf.push_back(static_cast<char>(static_cast<int>(v * 255.0 + 0.5)));
        }
    detail::write_file(path, buf);
}

}  // namespace lvgen
