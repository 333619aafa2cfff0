#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ircount/dnas.hpp"
#include "ircount/quant.hpp"

namespace ircount {

/// Single-file model artifact: a text manifest followed by length-prefixed
/// binary blobs, each with a CRC32. See docs/model_format.md.
struct ModelFile {
    std::vector<std::pair<std::string, std::string>> manifest;
    std::vector<std::pair<std::string, std::vector<uint8_t>>> blobs;

    const std::string& get(const std::string& key) const;
    bool has(const std::string& key) const;
    const std::vector<uint8_t>& blob(const std::string& name) const;
    void set(const std::string& key, const std::string& value) { manifest.emplace_back(key, value); }
};

uint32_t crc32(const uint8_t* data, size_t n);

void write_model_file(const std::string& path, const ModelFile& mf);
/// Verifies the magic line and every blob checksum.
ModelFile read_model_file(const std::string& path);

std::string double_to_hex(double v);
double hex_to_double(const std::string& s);

/// Stage tag of a model file: float | nas | qat | int.
std::string model_stage(const std::string& path);

using ManifestExtra = std::vector<std::pair<std::string, std::string>>;

void save_float_model(const std::string& path, const SeedNetwork& net, const ManifestExtra& extra = {});
SeedNetwork load_float_model(const std::string& path);

void save_nas_model(const std::string& path, const MaskedNetwork& mnet, double lambda, uint64_t seed,
                    const ManifestExtra& extra = {});
MaskedNetwork load_nas_model(const std::string& path);

void save_qat_model(const std::string& path, const QatNetwork& qnet, const ManifestExtra& extra = {});
QatNetwork load_qat_model(const std::string& path);

void save_int_model(const std::string& path, const QuantizedNetwork& qnet, const ManifestExtra& extra = {});
QuantizedNetwork load_int_model(const std::string& path);

}  // namespace ircount
