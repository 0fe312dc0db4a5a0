#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace glarify {

inline constexpr std::string_view kCheckpointSchema = "glarify-ckpt/1";
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct CheckpointTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;  // float32-representable after a round trip

    friend bool operator==(const CheckpointTensor&, const CheckpointTensor&) = default;
};

/// Named-tensor container. Binary layout: "GLCK", u32 version, u32 manifest
/// byte length, canonical JSON manifest {schema, config, tensors: [{name,
/// shape, offset, count}]}, then every tensor as little-endian float32 in
/// manifest order. Offsets count floats from the start of the data block.
struct Checkpoint {
    nlohmann::json config = nlohmann::json::object();
    std::vector<CheckpointTensor> tensors;

    void add(std::string name, std::vector<std::size_t> shape, std::vector<double> values);
    /// Throws DataError when absent.
    [[nodiscard]] const CheckpointTensor& get(std::string_view name) const;
    /// Copies a stored tensor into `out`, checking the expected shape.
    void load_into(std::string_view name, const std::vector<std::size_t>& shape, std::vector<double>& out) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace glarify
