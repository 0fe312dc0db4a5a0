#include "glarify/io_util.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "glarify/error.hpp"

namespace glarify {
namespace {

void dump_into(const json& v, std::string& out) {
    switch (v.type()) {
        case json::value_t::object: {
            out.push_back('{');
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out.push_back(',');
                first = false;
                out += json(it.key()).dump();
                out.push_back(':');
                dump_into(it.value(), out);
            }
            out.push_back('}');
            break;
        }
        case json::value_t::array: {
            out.push_back('[');
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out.push_back(',');
                dump_into(v[i], out);
            }
            out.push_back(']');
            break;
        }
        case json::value_t::number_float: {
            const double d = v.get<double>();
            if (!std::isfinite(d)) throw DataError("non-finite number cannot be serialized");
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6f", d);
            // "-0.000000" and "0.000000" must not differ
            if (std::string_view(buf) == "-0.000000") std::snprintf(buf, sizeof buf, "0.000000");
            out += buf;
            break;
        }
        default:
            out += v.dump();
    }
}

}  // namespace

std::string canonical_dump(const json& value) {
    std::string out;
    dump_into(value, out);
    return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot open " + tmp.string() + " for writing");
        os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!os) throw DataError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string tensor_digest(std::span<const double> values) {
    return sha256_hex(std::string_view(reinterpret_cast<const char*>(values.data()),
                                       values.size() * sizeof(double)));
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::initializer_list<std::string_view> parts) {
    std::string buf;
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((global_seed >> (8 * i)) & 0xff));
    for (auto p : parts) {
        put_u32_le(buf, static_cast<std::uint32_t>(p.size()));
        buf.append(p);
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(buf.data(), buf.size(), digest, &len, EVP_sha256(), nullptr);
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed |= static_cast<std::uint64_t>(digest[i]) << (8 * i);
    return seed;
}

double quantize_micro(double v) { return std::round(v * 1e6) / 1e6; }

void put_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32_le(std::string& out, float v) { put_u32_le(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32_le(std::string_view in, std::size_t offset) {
    if (offset + 4 > in.size()) throw DataError("truncated binary data");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    return v;
}

float get_f32_le(std::string_view in, std::size_t offset) {
    return std::bit_cast<float>(get_u32_le(in, offset));
}

}  // namespace glarify
