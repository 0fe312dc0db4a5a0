#include "glarify/checkpoint.hpp"

#include <cmath>
#include <numeric>

#include "glarify/error.hpp"
#include "glarify/io_util.hpp"

namespace glarify {

namespace {

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

void Checkpoint::add(std::string name, std::vector<std::size_t> shape, std::vector<double> values) {
    if (element_count(shape) != values.size())
        throw UsageError("tensor " + name + " has " + std::to_string(values.size()) + " values for shape " +
                         shape_string(shape));
    for (const auto& t : tensors)
        if (t.name == name) throw UsageError("duplicate tensor " + name);
    tensors.push_back({std::move(name), std::move(shape), std::move(values)});
}

const CheckpointTensor& Checkpoint::get(std::string_view name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t;
    throw DataError("checkpoint has no tensor " + std::string(name));
}

void Checkpoint::load_into(std::string_view name, const std::vector<std::size_t>& shape,
                           std::vector<double>& out) const {
    const auto& t = get(name);
    if (t.shape != shape)
        throw DataError("tensor " + std::string(name) + " has shape " + shape_string(t.shape) + ", expected " +
                        shape_string(shape));
    out = t.values;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
    json manifest{{"schema", kCheckpointSchema}, {"config", ckpt.config}, {"tensors", json::array()}};
    std::size_t offset = 0;
    for (const auto& t : ckpt.tensors) {
        for (double v : t.values)
            if (!std::isfinite(v)) throw DataError("tensor " + t.name + " holds a non-finite value");
        manifest["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"count", t.values.size()}});
        offset += t.values.size();
    }
    const std::string header = canonical_dump(manifest);
    std::string out = "GLCK";
    put_u32_le(out, kCheckpointFormatVersion);
    put_u32_le(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    out.reserve(out.size() + offset * 4);
    for (const auto& t : ckpt.tensors)
        for (double v : t.values) put_f32_le(out, static_cast<float>(v));
    return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    if (bytes.size() < 12 || bytes.substr(0, 4) != "GLCK") throw DataError("not a glarify checkpoint");
    const auto version = get_u32_le(bytes, 4);
    if (version != kCheckpointFormatVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    const auto header_len = get_u32_le(bytes, 8);
    if (bytes.size() < 12 + std::size_t{header_len}) throw DataError("truncated checkpoint manifest");
    json manifest;
    try {
        manifest = json::parse(bytes.substr(12, header_len));
    } catch (const json::exception& e) {
        throw DataError(std::string("bad checkpoint manifest: ") + e.what());
    }
    Checkpoint ckpt;
    try {
        const auto schema = manifest.at("schema").get<std::string>();
        if (schema != kCheckpointSchema)
            throw DataError("checkpoint schema mismatch: expected " + std::string(kCheckpointSchema) + ", found " +
                            schema);
        ckpt.config = manifest.at("config");
        const std::size_t data_start = 12 + header_len;
        const std::size_t total = (bytes.size() - data_start) / 4;
        if ((bytes.size() - data_start) % 4 != 0) throw DataError("checkpoint data is not whole float32 values");
        std::size_t expected_offset = 0;
        for (const auto& entry : manifest.at("tensors")) {
            CheckpointTensor t;
            t.name = entry.at("name").get<std::string>();
            t.shape = entry.at("shape").get<std::vector<std::size_t>>();
            const auto offset = entry.at("offset").get<std::size_t>();
            const auto count = entry.at("count").get<std::size_t>();
            if (count != element_count(t.shape) || offset != expected_offset || offset + count > total)
                throw DataError("checkpoint tensor " + t.name + " has an inconsistent manifest entry");
            t.values.resize(count);
            for (std::size_t i = 0; i < count; ++i)
                t.values[i] = get_f32_le(bytes, data_start + 4 * (offset + i));
            expected_offset += count;
            ckpt.tensors.push_back(std::move(t));
        }
        if (expected_offset != total) throw DataError("checkpoint has trailing data");
    } catch (const json::exception& e) {
        throw DataError(std::string("bad checkpoint manifest: ") + e.what());
    }
    return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace glarify
