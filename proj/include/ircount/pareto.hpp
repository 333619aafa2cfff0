#pragma once

#include <string>
#include <vector>

namespace ircount {

/// One trained/quantized model in the accuracy-vs-cost plane.
struct ParetoPoint {
    std::string model_id;
    double bas_mean = 0.0;
    double bas_std = 0.0;
    long long params = 0;
    long long macs = 0;
    long long cycles = 0;      // 0 for FLOAT32 models (not executable on the integer ISA)
    long long mem_bytes = 0;   // weights + biases at the model's precision
    std::string spec;          // "FLOAT32" or e.g. "8-4-4-8"
    double lambda = 0.0;
};

enum class ParetoAxis { kParams, kMacs, kCycles, kMemory };

ParetoAxis pareto_axis_from_string(const std::string& s);
long long pareto_cost(const ParetoPoint& p, ParetoAxis axis);

/// Non-dominated subset (higher BAS better, lower cost better), sorted by
/// cost then model_id. Equal-cost equal-BAS duplicates keep the lowest
/// model_id. Points with cost 0 on the cycles axis are skipped.
std::vector<ParetoPoint> pareto_extract(const std::vector<ParetoPoint>& points, ParetoAxis axis);

}  // namespace ircount
