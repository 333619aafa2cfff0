#pragma once

#include <array>
#include <string>
#include <vector>

#include "ircount/tensor.hpp"

namespace ircount {

struct Sample {
    std::array<float, 64> frame{};  // 8x8 Celsius values, row-major
    int label = 0;                  // people count, 0..3
    int session = 1;
    int frame_idx = 0;              // strictly increasing within a session
};

struct Dataset {
    std::vector<Sample> samples;

    std::vector<int> session_ids() const;
    /// Indices of one session in frame order.
    std::vector<size_t> session_indices(int session) const;
    std::vector<size_t> indices_excluding(int session) const;
    size_t session_count(int session) const;
};

/// CSV schema: header `session,frame,label,p0,...,p63`, one row per frame,
/// pixels row-major. Throws naming the offending row on malformed input,
/// out-of-range labels or non-monotone frame indices.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

struct SynthConfig {
    int sessions = 5;
    int per_session = 220;
    uint64_t seed = 7;
    double noise = 0.25;
    double keep_prob = 0.95;      // per-frame probability the count stays
    double min_separation = 2.4;  // between blob centers, pixels
};

/// Synthetic frames: per-session ambient temperature plus `label` Gaussian
/// thermal blobs with temporally coherent motion and sensor noise.
/// Deterministic for a given seed.
Dataset synth_generate(const SynthConfig& cfg);

/// Batch tensor (N,1,8,8) and labels for the given sample indices.
std::pair<Tensor, std::vector<int>> make_tensor(const Dataset& ds, const std::vector<size_t>& idx);

}  // namespace ircount
