#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ircount/dataset.hpp"
#include "ircount/dnas.hpp"
#include "ircount/metrics.hpp"
#include "ircount/pareto.hpp"
#include "ircount/quant.hpp"

namespace ircount {

/// Desk-scale defaults; paper-scale values (500 epochs, 10 seeds, batch 128)
/// stay reachable through the config file / flags.
struct PipelineConfig {
    std::string data_csv;  // empty -> synthesize
    SynthConfig synth;
    std::string out_dir = "out";
    int epochs_nas = 18;
    int epochs_ft = 10;
    int epochs_qat = 8;
    int batch = 16;
    double lr = 1e-3;
    double mask_lr = 5e-2;
    int seeds = 3;
    int quant_seeds = 2;
    uint64_t seed_base = 1;
    std::vector<double> lambda_grid = {1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    bool specs_first8 = true;
    CostMetric metric = CostMetric::kParams;
    int test_session = 2;
    int vote_window = 5;
    int workers = 1;
    double energy_sdotp = 1.8;
    std::string cv_spec = "float";  // "float" or a quant spec like "8-8-8-8"
    double cv_lambda = 1e-3;
    std::string backend = "host";   // host | isa-sim

    /// Applies `key=value` pairs; unknown keys are an error.
    void apply(const std::map<std::string, std::string>& kv);
};

/// Key-value config file: one `key = value` per line, '#' comments.
PipelineConfig load_config(const std::string& path);
std::map<std::string, std::string> parse_config_text(const std::string& text);

struct TrainOpts {
    int epochs = 10;
    int batch = 32;
    double lr = 1e-3;
    uint64_t seed = 1;
};

/// Plain float training (Adam, cross-entropy); deterministic per seed.
void train_float(SeedNetwork& net, const Tensor& x, const std::vector<int>& labels, const TrainOpts& opts);

/// Two-phase fine-tune: the full rate for `epochs`, then a fifth of it for
/// half as long. Settles the held-out accuracy of the larger networks.
void finetune_float(SeedNetwork& net, const Tensor& x, const std::vector<int>& labels, const TrainOpts& opts);

std::vector<int> predict_float(SeedNetwork& net, const Tensor& x);
std::vector<int> predict_qat(QatNetwork& net, const Tensor& x);
std::vector<int> predict_int_host(const QuantizedNetwork& qnet, const Dataset& ds, const std::vector<size_t>& idx);

/// One trained (lambda, seed) architecture with its fine-tuned float weights.
struct SweepModel {
    int lambda_index = 0;
    double lambda = 0.0;
    uint64_t seed = 0;
    SeedConfig arch;
    double bas = 0.0;
    SeedNetwork net;
};

struct NasSweepResult {
    std::vector<SweepModel> models;
    std::vector<ParetoPoint> points;  // one per lambda, BAS stats over seeds
};

/// Search on session-1 data, extraction, fine-tuning on the training fold
/// and evaluation on the held-out session, for every (lambda, seed) pair.
NasSweepResult run_search_sweep(const PipelineConfig& cfg, const Dataset& ds,
                                const std::string& model_dir = "");

struct QuantSweepResult {
    std::vector<ParetoPoint> points;  // one per (lambda, spec)
};

/// Mixed-precision exploration of the float frontier architectures:
/// BN folding, QAT per spec, integer lowering and host evaluation.
QuantSweepResult run_quant_sweep(const PipelineConfig& cfg, const Dataset& ds, const NasSweepResult& nas,
                                 const std::string& model_dir = "");

struct CvCell {
    int fold_session = 0;
    uint64_t seed = 0;
    double bas = 0.0;
};

struct CvTable {
    std::string stage;
    std::vector<CvCell> cells;
    std::string to_csv() const;
};

/// Leave-one-session-out protocol: session 1 is always in the training
/// fold; every other session rotates as the test set.
CvTable cross_validate(const PipelineConfig& cfg, const Dataset& ds);

struct FlowResult {
    std::vector<ParetoPoint> float_points;
    std::vector<ParetoPoint> quant_points;
};

/// synth/load -> search sweep -> quantization of the frontier -> reports.
/// Every artifact lands under cfg.out_dir with deterministic bytes.
FlowResult run_full_flow(const PipelineConfig& cfg);

void write_results_csv(const std::string& path, const std::vector<ParetoPoint>& points);
std::vector<ParetoPoint> read_results_csv(const std::string& path);
void write_frontier_csv(const std::string& path, const std::vector<ParetoPoint>& frontier);
/// Self-contained SVG of all points plus the frontier polyline
/// (log-scaled cost axis).
void write_frontier_svg(const std::string& path, const std::vector<ParetoPoint>& all,
                        const std::vector<ParetoPoint>& frontier, ParetoAxis axis);

/// Deterministic fan-out of independent jobs over a bounded worker pool.
void run_jobs(int workers, std::vector<std::function<void()>>& jobs);

}  // namespace ircount
