#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlalab/core/tensor.hpp"

namespace vlalab::core {

using json = nlohmann::json;

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hash_hex(const std::string& s) {
    uint64_t h = fnv1a64(s.data(), s.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

namespace io {

inline void write_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void write_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    write_bytes(os, b, 8);
}

inline void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    write_bytes(os, b, 4);
}

inline void write_f32(std::ostream& os, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    write_u32(os, u);
}

inline void write_f32_span(std::ostream& os, const float* p, size_t n) {
    // little-endian host assumed for the bulk path
    write_bytes(os, p, n * sizeof(float));
}

inline void read_bytes(std::istream& is, void* p, size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is.gcount()) != n) throw std::runtime_error("read_bytes: truncated stream");
}

inline uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    read_bytes(is, b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    read_bytes(is, b, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

inline float read_f32(std::istream& is) {
    uint32_t u = read_u32(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

inline void read_f32_span(std::istream& is, float* p, size_t n) { read_bytes(is, p, n * sizeof(float)); }

}  // namespace io

// -----------------------------------------------------------------------------
// Checkpoint container: 16-byte magic, u64 length-prefixed JSON metadata block,
// then raw little-endian f32 payloads in declaration order.
// -----------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[16] = {'V', 'L', 'A', 'L', 'A', 'B', '.', 'C', 'K', 'P', 'T', '.', 'v', '1', 0, 0};

struct Checkpoint {
    json meta;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

inline void save_checkpoint(const std::string& path, const json& user_meta,
                            const std::vector<std::pair<std::string, Tensor>>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open '" + path + "' for writing");
    io::write_bytes(os, kCheckpointMagic, 16);
    json meta;
    meta["format_version"] = 1;
    meta["user"] = user_meta;
    json tl = json::array();
    for (const auto& [name, t] : tensors) {
        json e;
        e["name"] = name;
        e["shape"] = t.shape();
        tl.push_back(e);
    }
    meta["tensors"] = tl;
    std::string ms = meta.dump();
    io::write_u64(os, ms.size());
    io::write_bytes(os, ms.data(), ms.size());
    for (const auto& [name, t] : tensors) io::write_f32_span(os, t.data(), static_cast<size_t>(t.numel()));
    if (!os) throw std::runtime_error("save_checkpoint: write failed for '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
    char magic[16];
    io::read_bytes(is, magic, 16);
    if (std::memcmp(magic, kCheckpointMagic, 16) != 0)
        throw std::runtime_error("load_checkpoint: '" + path + "' is not a checkpoint file (bad magic)");
    uint64_t mlen = io::read_u64(is);
    std::string ms(mlen, '\0');
    io::read_bytes(is, ms.data(), mlen);
    json meta = json::parse(ms);
    Checkpoint ck;
    ck.meta = meta["user"];
    for (const auto& e : meta["tensors"]) {
        Shape shape = e["shape"].get<Shape>();
        Tensor t = Tensor::zeros(shape);
        io::read_f32_span(is, t.data(), static_cast<size_t>(t.numel()));
        ck.tensors.emplace_back(e["name"].get<std::string>(), t);
    }
    return ck;
}

// Restores payload values into live parameters by name; shapes must match.
inline void load_into(const Checkpoint& ck, std::vector<std::pair<std::string, Tensor>>& params) {
    if (ck.tensors.size() != params.size())
        throw std::runtime_error("load_into: checkpoint has " + std::to_string(ck.tensors.size()) + " tensors, model has " +
                                 std::to_string(params.size()));
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& [cname, ct] = ck.tensors[i];
        auto& [pname, pt] = params[i];
        if (cname != pname)
            throw std::runtime_error("load_into: tensor order mismatch at " + std::to_string(i) + ": '" + cname +
                                     "' vs '" + pname + "'");
        if (ct.shape() != pt.shape())
            throw std::runtime_error("load_into: shape mismatch for '" + cname + "': " + shape_str(ct.shape()) + " vs " +
                                     shape_str(pt.shape()));
        pt.values() = ct.values();
    }
}

}  // namespace vlalab::core
