#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ircount/isa.hpp"
#include "ircount/kernels.hpp"
#include "ircount/model_io.hpp"
#include "ircount/pipeline.hpp"
#include "ircount/postproc.hpp"

namespace {

using namespace ircount;

/// Every subcommand honors --config first, then explicit flags on top.
struct ConfigArgs {
    std::string config_path;
    std::map<std::string, std::string> overrides;

    PipelineConfig resolve() const {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        cfg.apply(overrides);
        return cfg;
    }
};

void add_config_option(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("--config", args.config_path, "key = value config file");
}

/// Registers a flag that lands in the override map under `key`.
void add_kv(CLI::App* cmd, ConfigArgs& args, const std::string& flag, const std::string& key,
            const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&args, key](const std::string& v) { args.overrides[key] = v; }, help);
}

Dataset resolve_dataset(const PipelineConfig& cfg) {
    if (!cfg.data_csv.empty()) {
        const Dataset ds = load_dataset(cfg.data_csv);
        std::printf("loaded %s: %zu samples;", cfg.data_csv.c_str(), ds.samples.size());
        for (const int s : ds.session_ids()) std::printf(" session %d: %zu", s, ds.session_count(s));
        std::printf("\n");
        return ds;
    }
    return synth_generate(cfg.synth);
}

int cmd_synth(const ConfigArgs& args, const std::string& out_path) {
    const PipelineConfig cfg = args.resolve();
    const Dataset ds = synth_generate(cfg.synth);
    save_dataset(ds, out_path);
    std::printf("wrote %zu samples (%d sessions) to %s\n", ds.samples.size(), cfg.synth.sessions,
                out_path.c_str());
    return 0;
}

int cmd_train(const ConfigArgs& args, const std::string& out_path) {
    const PipelineConfig cfg = args.resolve();
    const Dataset ds = resolve_dataset(cfg);
    const auto [xtr, ytr] = make_tensor(ds, ds.indices_excluding(cfg.test_session));
    SeedNetwork net{SeedConfig{}};
    Rng rng(cfg.seed_base);
    net.init_params(rng);
    TrainOpts opts;
    opts.epochs = cfg.epochs_ft;
    opts.batch = cfg.batch;
    opts.lr = cfg.lr;
    opts.seed = cfg.seed_base;
    train_float(net, xtr, ytr, opts);
    const auto [xte, yte] = make_tensor(ds, ds.session_indices(cfg.test_session));
    const double b = bas(predict_float(net, xte), yte);
    if (!out_path.empty()) save_float_model(out_path, net);
    std::printf("float seed network: test-session %d BAS %.4f\n", cfg.test_session, b);
    return 0;
}

int cmd_search(const ConfigArgs& args) {
    const PipelineConfig cfg = args.resolve();
    std::filesystem::create_directories(cfg.out_dir);
    std::filesystem::create_directories(cfg.out_dir + "/models");
    const Dataset ds = resolve_dataset(cfg);
    const NasSweepResult nas = run_search_sweep(cfg, ds, cfg.out_dir + "/models");
    write_results_csv(cfg.out_dir + "/results_float.csv", nas.points);
    for (const auto& p : nas.points) {
        std::printf("%s lambda=%.3g params=%lld macs=%lld bas=%.4f±%.4f\n", p.model_id.c_str(), p.lambda,
                    p.params, p.macs, p.bas_mean, p.bas_std);
    }
    std::printf("wrote %s\n", (cfg.out_dir + "/results_float.csv").c_str());
    return 0;
}

int cmd_quantize(const ConfigArgs& args, const std::string& model_path) {
    const PipelineConfig cfg = args.resolve();
    std::filesystem::create_directories(cfg.out_dir);
    const Dataset ds = resolve_dataset(cfg);
    const auto [xtr, ytr] = make_tensor(ds, ds.indices_excluding(cfg.test_session));
    const auto test_idx = ds.session_indices(cfg.test_session);
    const auto [xte, yte] = make_tensor(ds, test_idx);
    SeedNetwork net = load_float_model(model_path);
    std::vector<ParetoPoint> points;
    for (const QuantSpec& spec : enumerate_specs(cfg.specs_first8)) {
        SeedNetwork folded = net.cfg.with_bn ? fold_bn(net) : net;
        QatNetwork q(folded, spec);
        QatConfig qc;
        qc.epochs = cfg.epochs_qat;
        qc.batch = cfg.batch;
        qc.lr = cfg.lr;
        qc.seed = cfg.seed_base;
        qat_train(q, xtr, ytr, qc);
        const QuantizedNetwork iq = lower_to_integer(q, spec);
        const double b = bas(predict_int_host(iq, ds, test_idx), yte);
        const std::string ipath = cfg.out_dir + "/int-" + spec.to_string() + ".ircm";
        save_int_model(ipath, iq);
        const kern::NetworkProgram np = kern::build_network_program(iq);
        ParetoPoint p;
        p.model_id = "int-" + spec.to_string();
        p.spec = spec.to_string();
        p.bas_mean = b;
        p.params = iq.cfg.param_count();
        p.macs = iq.cfg.mac_count();
        p.mem_bytes = iq.memory_bytes();
        p.cycles = static_cast<long long>(np.prog.size());
        points.push_back(p);
        std::printf("%s mem=%lldB cycles=%lld bas=%.4f -> %s\n", p.model_id.c_str(), p.mem_bytes, p.cycles, b,
                    ipath.c_str());
    }
    write_results_csv(cfg.out_dir + "/results_quant.csv", points);
    return 0;
}

int cmd_eval(const ConfigArgs& args, bool cv) {
    const PipelineConfig cfg = args.resolve();
    const Dataset ds = resolve_dataset(cfg);
    if (!cv) {
        std::printf("nothing to do: pass --cv for cross-validation\n");
        return 1;
    }
    const CvTable table = cross_validate(cfg, ds);
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(cfg.out_dir + "/cv.csv", std::ios::binary);
    out << table.to_csv();
    std::printf("%s", table.to_csv().c_str());
    std::map<int, std::vector<double>> by_fold;
    for (const auto& c : table.cells) by_fold[c.fold_session].push_back(c.bas);
    for (const auto& [fold, vals] : by_fold) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= vals.size();
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        const double stdev = vals.size() > 1 ? std::sqrt(var / (vals.size() - 1)) : 0.0;
        std::printf("fold %d (%s): BAS %.4f +- %.4f over %zu seeds\n", fold, table.stage.c_str(), mean,
                    stdev, vals.size());
    }
    std::printf("wrote %s\n", (cfg.out_dir + "/cv.csv").c_str());
    return 0;
}

int cmd_run(const ConfigArgs& args, const std::string& model_path, int session, int limit) {
    const PipelineConfig cfg = args.resolve();
    const Dataset ds = resolve_dataset(cfg);
    const QuantizedNetwork qnet = load_int_model(model_path);
    const int target = session > 0 ? session : cfg.test_session;
    auto idx = ds.session_indices(target);
    if (limit > 0 && static_cast<size_t>(limit) < idx.size()) idx.resize(limit);
    if (idx.empty()) {
        std::printf("session %d has no frames\n", target);
        return 1;
    }
    isa::EnergyModel energy;
    energy.sdotp = cfg.energy_sdotp;

    std::vector<int> raw;
    std::vector<int> labels;
    uint64_t cycles_per_frame = 0;
    double energy_per_frame = 0.0;
    if (cfg.backend == "isa-sim") {
        kern::SimRunner runner(qnet, energy);
        for (size_t i : idx) {
            const auto codes = quantize_frame(qnet, ds.samples[i].frame.data(), 64);
            const kern::RunResult r = runner.run(codes);
            raw.push_back(r.prediction);
            labels.push_back(ds.samples[i].label);
            cycles_per_frame = r.cycles;
            energy_per_frame = r.energy_units;
        }
    } else if (cfg.backend == "host") {
        for (size_t i : idx) {
            const auto codes = quantize_frame(qnet, ds.samples[i].frame.data(), 64);
            raw.push_back(kern::argmax_codes(kern::host_logits_codes(qnet, codes)));
            labels.push_back(ds.samples[i].label);
        }
        const kern::NetworkProgram np = kern::build_network_program(qnet);
        cycles_per_frame = np.prog.size();
        energy_per_frame = np.energy_estimate(energy);
    } else {
        std::printf("unknown backend '%s' (host | isa-sim)\n", cfg.backend.c_str());
        return 1;
    }
    ModeWindow window(cfg.vote_window);
    const std::vector<int> voted = apply_to_stream(window, raw);
    std::printf("session %d frames %zu backend %s\n", target, idx.size(), cfg.backend.c_str());
    std::printf("per-frame cycles %llu energy %.1f\n", static_cast<unsigned long long>(cycles_per_frame),
                energy_per_frame);
    std::printf("BAS raw    %.4f\n", bas(raw, labels));
    std::printf("BAS voted  %.4f (window %d)\n", bas(voted, labels), cfg.vote_window);
    return 0;
}

int cmd_pareto(const ConfigArgs& args, const std::string& results_path, const std::string& axis_name) {
    const PipelineConfig cfg = args.resolve();
    std::filesystem::create_directories(cfg.out_dir);
    const auto points = read_results_csv(results_path);
    const ParetoAxis axis = pareto_axis_from_string(axis_name);
    const auto frontier = pareto_extract(points, axis);
    const std::string base = cfg.out_dir + "/frontier_" + axis_name;
    write_frontier_csv(base + ".csv", frontier);
    write_frontier_svg(base + ".svg", points, frontier, axis);
    for (const auto& p : frontier) {
        std::printf("%s cost=%lld bas=%.4f\n", p.model_id.c_str(), pareto_cost(p, axis), p.bas_mean);
    }
    std::printf("wrote %s.csv and %s.svg\n", base.c_str(), base.c_str());
    return 0;
}

int cmd_sim(const std::string& program_path, const std::string& trace_path, size_t mem_size,
            const std::vector<std::string>& reg_inits, const std::string& dump, double energy_sdotp) {
    std::ifstream in(program_path);
    if (!in) {
        std::printf("cannot open %s\n", program_path.c_str());
        return 1;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    const isa::Program prog = isa::assemble(ss.str());
    isa::Machine m(mem_size);
    for (const auto& spec : reg_inits) {
        const size_t eq = spec.find('=');
        if (eq == std::string::npos || spec[0] != 'x') throw std::runtime_error("bad --reg, want xN=value");
        m.set_reg(std::stoi(spec.substr(1, eq - 1)), static_cast<uint32_t>(std::stoll(spec.substr(eq + 1), nullptr, 0)));
    }
    isa::ExecOptions opts;
    opts.energy.sdotp = energy_sdotp;
    std::ofstream trace;
    if (!trace_path.empty()) {
        trace.open(trace_path, std::ios::binary);
        opts.trace = &trace;
    }
    isa::execute(m, prog, opts);
    std::printf("cycles %llu energy %.1f pc %zu%s\n", static_cast<unsigned long long>(m.cycles),
                m.energy_units, m.pc, m.fault.empty() ? "" : (" FAULT: " + m.fault).c_str());
    for (int r = 1; r < 32; ++r) {
        if (m.regs[r] != 0) std::printf("x%-2d = %d (0x%08x)\n", r, static_cast<int32_t>(m.regs[r]), m.regs[r]);
    }
    if (!dump.empty()) {
        const size_t colon = dump.find(':');
        const uint32_t addr = static_cast<uint32_t>(std::stoul(dump.substr(0, colon), nullptr, 0));
        const uint32_t len = static_cast<uint32_t>(std::stoul(dump.substr(colon + 1), nullptr, 0));
        for (uint32_t a = addr; a < addr + len; a += 4) {
            std::printf("%08x: %08x\n", a, m.load_word(a));
        }
    }
    return m.fault.empty() ? 0 : 2;
}

int cmd_flow(const ConfigArgs& args) {
    const PipelineConfig cfg = args.resolve();
    const FlowResult r = run_full_flow(cfg);
    std::printf("float points %zu, quantized points %zu -> %s\n", r.float_points.size(),
                r.quant_points.size(), cfg.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"people-counting CNN flow: search, quantization, integer kernels and ISA simulation"};
    app.require_subcommand(1);

    ConfigArgs synth_args, train_args, search_args, quant_args, eval_args, run_args, pareto_args, flow_args;
    std::string synth_out = "data.csv", train_out, quant_model, run_model, pareto_results = "results.csv";
    std::string pareto_axis = "params";
    bool eval_cv = false;
    int run_session = 0, run_limit = 0;
    std::string sim_program, sim_trace, sim_dump;
    size_t sim_mem = 1 << 16;
    double sim_energy_sdotp = 1.8;
    std::vector<std::string> sim_regs;

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset CSV");
    add_config_option(synth, synth_args);
    add_kv(synth, synth_args, "--sessions", "synth.sessions", "number of sessions");
    add_kv(synth, synth_args, "--per-session", "synth.per_session", "frames per session");
    add_kv(synth, synth_args, "--seed", "synth.seed", "generator seed");
    add_kv(synth, synth_args, "--noise", "synth.noise", "sensor noise stddev");
    synth->add_option("--out", synth_out, "output CSV path");

    auto* train = app.add_subcommand("train", "train the float seed network");
    add_config_option(train, train_args);
    add_kv(train, train_args, "--data", "data.csv", "dataset CSV (default: synthetic)");
    add_kv(train, train_args, "--epochs", "epochs.ft", "training epochs");
    add_kv(train, train_args, "--batch", "batch", "batch size");
    add_kv(train, train_args, "--lr", "lr", "learning rate");
    add_kv(train, train_args, "--seed", "seed.base", "rng seed");
    add_kv(train, train_args, "--test-session", "test.session", "held-out session");
    train->add_option("--out", train_out, "save the trained model here");

    auto* search_cmd = app.add_subcommand("search", "architecture search sweep over lambda");
    add_config_option(search_cmd, search_args);
    add_kv(search_cmd, search_args, "--data", "data.csv", "dataset CSV (default: synthetic)");
    add_kv(search_cmd, search_args, "--lambda-grid", "lambda.grid", "comma-separated lambda values");
    add_kv(search_cmd, search_args, "--seeds", "seeds", "rng seeds per lambda");
    add_kv(search_cmd, search_args, "--metric", "metric", "cost metric: params | macs");
    add_kv(search_cmd, search_args, "--epochs-nas", "epochs.nas", "search epochs");
    add_kv(search_cmd, search_args, "--epochs-ft", "epochs.ft", "fine-tune epochs");
    add_kv(search_cmd, search_args, "--out-dir", "out.dir", "output directory");
    add_kv(search_cmd, search_args, "--workers", "workers", "parallel jobs");

    auto* quant = app.add_subcommand("quantize", "mixed-precision QAT of one float model");
    add_config_option(quant, quant_args);
    quant->add_option("--model", quant_model, "float model file")->required();
    add_kv(quant, quant_args, "--data", "data.csv", "dataset CSV (default: synthetic)");
    add_kv(quant, quant_args, "--specs", "specs", "all | first8");
    add_kv(quant, quant_args, "--epochs-qat", "epochs.qat", "QAT epochs");
    add_kv(quant, quant_args, "--out-dir", "out.dir", "output directory");

    auto* eval = app.add_subcommand("eval", "evaluation protocols");
    add_config_option(eval, eval_args);
    eval->add_flag("--cv", eval_cv, "leave-one-session-out cross-validation");
    add_kv(eval, eval_args, "--data", "data.csv", "dataset CSV (default: synthetic)");
    add_kv(eval, eval_args, "--cv-spec", "cv.spec", "float or a quant spec like 8-8-8-8");
    add_kv(eval, eval_args, "--cv-lambda", "cv.lambda", "search strength for the CV flow");
    add_kv(eval, eval_args, "--seeds", "seeds", "rng seeds");
    add_kv(eval, eval_args, "--out-dir", "out.dir", "output directory");

    auto* runc = app.add_subcommand("run", "stream inference with an integer model");
    add_config_option(runc, run_args);
    runc->add_option("--model", run_model, "int model file")->required();
    add_kv(runc, run_args, "--data", "data.csv", "dataset CSV (default: synthetic)");
    add_kv(runc, run_args, "--backend", "backend", "host | isa-sim");
    add_kv(runc, run_args, "--vote-window", "vote.window", "mode-inference window length");
    add_kv(runc, run_args, "--energy-sdotp", "energy.sdotp", "energy weight of SDOTP");
    runc->add_option("--session", run_session, "session to stream (default: test session)");
    runc->add_option("--limit", run_limit, "max frames");

    auto* pareto = app.add_subcommand("pareto", "extract the non-dominated frontier");
    add_config_option(pareto, pareto_args);
    pareto->add_option("--results", pareto_results, "results CSV from search/quantize/flow");
    pareto->add_option("--axis", pareto_axis, "params | macs | cycles | memory");
    add_kv(pareto, pareto_args, "--out-dir", "out.dir", "output directory");

    auto* sim = app.add_subcommand("sim", "run an assembly listing on the ISA simulator");
    sim->add_option("--program", sim_program, "assembly file")->required();
    sim->add_option("--trace", sim_trace, "write one line per retired instruction");
    sim->add_option("--mem-size", sim_mem, "memory bytes");
    sim->add_option("--reg", sim_regs, "initial register value, e.g. x5=42");
    sim->add_option("--dump", sim_dump, "dump memory range addr:len after the run");
    sim->add_option("--energy-sdotp", sim_energy_sdotp, "energy weight of SDOTP");

    auto* flow = app.add_subcommand("flow", "full pipeline: search, quantize, frontier reports");
    add_config_option(flow, flow_args);
    add_kv(flow, flow_args, "--data", "data.csv", "dataset CSV (default: synthetic)");
    add_kv(flow, flow_args, "--out-dir", "out.dir", "output directory");
    add_kv(flow, flow_args, "--lambda-grid", "lambda.grid", "comma-separated lambda values");
    add_kv(flow, flow_args, "--seeds", "seeds", "rng seeds per lambda");
    add_kv(flow, flow_args, "--specs", "specs", "all | first8");
    add_kv(flow, flow_args, "--workers", "workers", "parallel jobs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(synth_args, synth_out);
        if (train->parsed()) return cmd_train(train_args, train_out);
        if (search_cmd->parsed()) return cmd_search(search_args);
        if (quant->parsed()) return cmd_quantize(quant_args, quant_model);
        if (eval->parsed()) return cmd_eval(eval_args, eval_cv);
        if (runc->parsed()) return cmd_run(run_args, run_model, run_session, run_limit);
        if (pareto->parsed()) return cmd_pareto(pareto_args, pareto_results, pareto_axis);
        if (sim->parsed()) return cmd_sim(sim_program, sim_trace, sim_mem, sim_regs, sim_dump, sim_energy_sdotp);
        if (flow->parsed()) return cmd_flow(flow_args);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
