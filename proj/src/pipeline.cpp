#include "ircount/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ircount/adam.hpp"
#include "ircount/kernels.hpp"
#include "ircount/model_io.hpp"
#include "ircount/rng.hpp"

namespace ircount {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error(msg);
}

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    require(!out.empty(), "empty lambda grid");
    return out;
}

std::string fmt(double v, const char* f = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

}  // namespace

void PipelineConfig::apply(const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) {
        if (k == "data.csv") data_csv = v;
        else if (k == "out.dir") out_dir = v;
        else if (k == "synth.sessions") synth.sessions = std::stoi(v);
        else if (k == "synth.per_session") synth.per_session = std::stoi(v);
        else if (k == "synth.seed") synth.seed = std::stoull(v);
        else if (k == "synth.noise") synth.noise = std::stod(v);
        else if (k == "epochs.nas") epochs_nas = std::stoi(v);
        else if (k == "epochs.ft") epochs_ft = std::stoi(v);
        else if (k == "epochs.qat") epochs_qat = std::stoi(v);
        else if (k == "batch") batch = std::stoi(v);
        else if (k == "lr") lr = std::stod(v);
        else if (k == "mask.lr") mask_lr = std::stod(v);
        else if (k == "seeds") seeds = std::stoi(v);
        else if (k == "quant.seeds") quant_seeds = std::stoi(v);
        else if (k == "seed.base") seed_base = std::stoull(v);
        else if (k == "lambda.grid") lambda_grid = parse_grid(v);
        else if (k == "specs") specs_first8 = v == "first8";
        else if (k == "metric") metric = cost_metric_from_string(v);
        else if (k == "test.session") test_session = std::stoi(v);
        else if (k == "vote.window") vote_window = std::stoi(v);
        else if (k == "workers") workers = std::stoi(v);
        else if (k == "energy.sdotp") energy_sdotp = std::stod(v);
        else if (k == "cv.spec") cv_spec = v;
        else if (k == "cv.lambda") cv_lambda = std::stod(v);
        else if (k == "backend") backend = v;
        else throw std::runtime_error("unknown config key: " + k);
    }
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const size_t eq = line.find('=');
        require(eq != std::string::npos, "config line " + std::to_string(n) + ": expected key = value");
        auto trim = [](std::string s) {
            const size_t x = s.find_first_not_of(" \t\r");
            const size_t y = s.find_last_not_of(" \t\r");
            return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    PipelineConfig cfg;
    cfg.apply(parse_config_text(ss.str()));
    return cfg;
}

void run_jobs(int workers, std::vector<std::function<void()>>& jobs) {
    if (workers <= 1) {
        for (auto& j : jobs) j();
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs.size());
    for (int i = 0; i < workers; ++i) {
        pool.emplace_back([&] {
            while (true) {
                const size_t k = next.fetch_add(1);
                if (k >= jobs.size()) break;
                try {
                    jobs[k]();
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

void train_float(SeedNetwork& net, const Tensor& x, const std::vector<int>& labels, const TrainOpts& opts) {
    Adam opt;
    opt.hyper.lr = opts.lr;
    for (auto& p : net.params()) {
        p.tensor->ensure_grad();
        opt.add_param(p.tensor->data.data(), p.tensor->grad.data(), p.tensor->numel(), opts.lr);
    }
    Rng rng(opts.seed);
    const int n = x.n();
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        rng.shuffle(order);
        for (int start = 0; start < n; start += opts.batch) {
            const int bn = std::min(opts.batch, n - start);
            Tensor xb(bn, 1, x.h(), x.w());
            std::vector<int> yb(bn);
            for (int i = 0; i < bn; ++i) {
                const int src = order[start + i];
                std::copy(&x.at(src, 0, 0, 0), &x.at(src, 0, 0, 0) + x.h() * x.w(), &xb.at(i, 0, 0, 0));
                yb[i] = labels[src];
            }
            net.zero_grads();
            Tensor logits = net.forward(xb, true);
            const double loss = net.loss_backward(logits, yb);
            if (!std::isfinite(loss)) throw std::runtime_error("train_float: non-finite loss");
            opt.step();
        }
    }
}

void finetune_float(SeedNetwork& net, const Tensor& x, const std::vector<int>& labels, const TrainOpts& opts) {
    train_float(net, x, labels, opts);
    TrainOpts settle = opts;
    settle.epochs = std::max(1, opts.epochs / 2);
    settle.lr = opts.lr / 5.0;
    settle.seed = Rng::derive(opts.seed, 0x5E771Eull);
    train_float(net, x, labels, settle);
}

namespace {

std::vector<int> batched_argmax(const std::function<Tensor(const Tensor&)>& fwd, const Tensor& x) {
    std::vector<int> preds;
    preds.reserve(x.n());
    const int chunk = 128;
    for (int start = 0; start < x.n(); start += chunk) {
        const int bn = std::min(chunk, x.n() - start);
        Tensor xb(bn, 1, x.h(), x.w());
        std::copy(&x.at(start, 0, 0, 0), &x.at(start, 0, 0, 0) + static_cast<size_t>(bn) * x.h() * x.w(),
                  &xb.at(0, 0, 0, 0));
        const Tensor logits = fwd(xb);
        for (int i = 0; i < bn; ++i) preds.push_back(argmax_row(logits, i));
    }
    return preds;
}

}  // namespace

std::vector<int> predict_float(SeedNetwork& net, const Tensor& x) {
    return batched_argmax([&](const Tensor& xb) { return net.forward(xb, false); }, x);
}

std::vector<int> predict_qat(QatNetwork& net, const Tensor& x) {
    return batched_argmax([&](const Tensor& xb) { return net.forward(xb, false); }, x);
}

std::vector<int> predict_int_host(const QuantizedNetwork& qnet, const Dataset& ds, const std::vector<size_t>& idx) {
    std::vector<int> preds;
    preds.reserve(idx.size());
    for (size_t i : idx) {
        const auto codes = quantize_frame(qnet, ds.samples[i].frame.data(), 64);
        preds.push_back(kern::argmax_codes(kern::host_logits_codes(qnet, codes)));
    }
    return preds;
}

namespace {

std::string lambda_id(int li) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "l%02d", li);
    return buf;
}

int first_session(const Dataset& ds) {
    const auto ids = ds.session_ids();
    require(ids.size() >= 2, "dataset needs at least 2 sessions");
    return ids.front();
}

/// Representative model of one lambda: median extracted parameter count
/// over seeds, lowest seed on ties.
const SweepModel* representative(const std::vector<const SweepModel*>& group) {
    std::vector<long long> params;
    for (const auto* m : group) params.push_back(m->arch.param_count());
    std::sort(params.begin(), params.end());
    const long long median = params[(params.size() - 1) / 2];
    const SweepModel* best = nullptr;
    for (const auto* m : group) {
        if (m->arch.param_count() != median) continue;
        if (best == nullptr || m->seed < best->seed) best = m;
    }
    return best;
}

}  // namespace

NasSweepResult run_search_sweep(const PipelineConfig& cfg, const Dataset& ds, const std::string& model_dir) {
    const int s1 = first_session(ds);
    require(ds.session_count(cfg.test_session) > 0, "test session missing from dataset");
    require(cfg.test_session != s1, "the first session is always a training session");
    const auto [x1, y1] = make_tensor(ds, ds.session_indices(s1));
    const auto [xtr, ytr] = make_tensor(ds, ds.indices_excluding(cfg.test_session));
    const auto [xte, yte] = make_tensor(ds, ds.session_indices(cfg.test_session));

    NasSweepResult result;
    result.models.resize(cfg.lambda_grid.size() * cfg.seeds);
    std::vector<std::function<void()>> jobs;
    for (size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
        for (int si = 0; si < cfg.seeds; ++si) {
            const size_t slot = li * cfg.seeds + si;
            jobs.push_back([&, li, si, slot] {
                const double lambda = cfg.lambda_grid[li];
                SeedNetwork seed_net{SeedConfig{}};
                Rng init_rng(Rng::derive(cfg.seed_base, 0x5EED0000ull + si));
                seed_net.init_params(init_rng);
                SearchConfig sc;
                sc.lambda = lambda;
                sc.metric = cfg.metric;
                sc.epochs = cfg.epochs_nas;
                sc.batch = cfg.batch;
                sc.lr = cfg.lr;
                sc.mask_lr = cfg.mask_lr;
                sc.seed = Rng::derive(cfg.seed_base, 0xA5000000ull + li * 257 + si);
                MaskedNetwork mnet = search(seed_net, x1, y1, sc);
                if (!model_dir.empty()) {
                    save_nas_model(model_dir + "/nas-" + lambda_id(static_cast<int>(li)) + "-s" +
                                       std::to_string(si) + ".ircm",
                                   mnet, lambda, si);
                }
                ExtractResult ex = extract(mnet);
                TrainOpts ft;
                ft.epochs = cfg.epochs_ft;
                ft.batch = cfg.batch;
                ft.lr = cfg.lr;
                ft.seed = Rng::derive(cfg.seed_base, 0xF7000000ull + li * 257 + si);
                finetune_float(ex.net, xtr, ytr, ft);
                const double b = bas(predict_float(ex.net, xte), yte);
                SweepModel m;
                m.lambda_index = static_cast<int>(li);
                m.lambda = lambda;
                m.seed = si;
                m.arch = ex.net.cfg;
                m.bas = b;
                m.net = std::move(ex.net);
                if (!model_dir.empty()) {
                    save_float_model(model_dir + "/float-" + lambda_id(static_cast<int>(li)) + "-s" +
                                         std::to_string(si) + ".ircm",
                                     m.net,
                                     {{"lambda", double_to_hex(lambda)}, {"seed", std::to_string(si)}});
                }
                result.models[slot] = std::move(m);
            });
        }
    }
    run_jobs(cfg.workers, jobs);

    for (size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
        std::vector<const SweepModel*> group;
        for (int si = 0; si < cfg.seeds; ++si) group.push_back(&result.models[li * cfg.seeds + si]);
        double mean = 0.0;
        for (const auto* m : group) mean += m->bas;
        mean /= group.size();
        double var = 0.0;
        for (const auto* m : group) var += (m->bas - mean) * (m->bas - mean);
        const double stdev = group.size() > 1 ? std::sqrt(var / (group.size() - 1)) : 0.0;
        const SweepModel* rep = representative(group);
        ParetoPoint p;
        p.model_id = "nas-" + lambda_id(static_cast<int>(li));
        p.bas_mean = mean;
        p.bas_std = stdev;
        p.params = rep->arch.param_count();
        p.macs = rep->arch.mac_count();
        p.cycles = 0;
        p.mem_bytes = rep->arch.param_count() * 4;
        p.spec = "FLOAT32";
        p.lambda = cfg.lambda_grid[li];
        result.points.push_back(p);
    }
    return result;
}

QuantSweepResult run_quant_sweep(const PipelineConfig& cfg, const Dataset& ds, const NasSweepResult& nas,
                                 const std::string& model_dir) {
    const auto frontier = pareto_extract(nas.points, ParetoAxis::kParams);
    const auto [xtr, ytr] = make_tensor(ds, ds.indices_excluding(cfg.test_session));
    const auto test_idx = ds.session_indices(cfg.test_session);
    const auto [xte, yte] = make_tensor(ds, test_idx);
    const auto specs = enumerate_specs(cfg.specs_first8);

    struct Cell {
        double bas = 0.0;
        QuantizedNetwork qnet;
    };
    std::vector<int> lambda_indices;
    for (const auto& fp : frontier) {
        for (size_t li = 0; li < cfg.lambda_grid.size(); ++li) {
            if (fp.model_id == "nas-" + lambda_id(static_cast<int>(li))) {
                lambda_indices.push_back(static_cast<int>(li));
            }
        }
    }

    std::vector<Cell> cells(lambda_indices.size() * specs.size() * cfg.quant_seeds);
    std::vector<std::function<void()>> jobs;
    for (size_t fi = 0; fi < lambda_indices.size(); ++fi) {
        const int li = lambda_indices[fi];
        std::vector<const SweepModel*> group;
        for (int si = 0; si < cfg.seeds; ++si) group.push_back(&nas.models[li * cfg.seeds + si]);
        const SweepModel* rep = representative(group);
        for (size_t pi = 0; pi < specs.size(); ++pi) {
            for (int qi = 0; qi < cfg.quant_seeds; ++qi) {
                const size_t slot = (fi * specs.size() + pi) * cfg.quant_seeds + qi;
                jobs.push_back([&, li, rep, pi, qi, slot] {
                    SeedNetwork folded = fold_bn(rep->net);
                    QatNetwork q(folded, specs[pi]);
                    QatConfig qc;
                    qc.epochs = cfg.epochs_qat;
                    qc.batch = cfg.batch;
                    qc.lr = cfg.lr;
                    qc.seed = Rng::derive(cfg.seed_base, 0xB0000000ull + li * 4099 + pi * 67 + qi);
                    qat_train(q, xtr, ytr, qc);
                    Cell c;
                    c.qnet = lower_to_integer(q, specs[pi]);
                    c.bas = bas(predict_int_host(c.qnet, ds, test_idx), yte);
                    cells[slot] = std::move(c);
                });
            }
        }
    }
    run_jobs(cfg.workers, jobs);

    QuantSweepResult out;
    for (size_t fi = 0; fi < lambda_indices.size(); ++fi) {
        const int li = lambda_indices[fi];
        for (size_t pi = 0; pi < specs.size(); ++pi) {
            double mean = 0.0;
            for (int qi = 0; qi < cfg.quant_seeds; ++qi) {
                mean += cells[(fi * specs.size() + pi) * cfg.quant_seeds + qi].bas;
            }
            mean /= cfg.quant_seeds;
            double var = 0.0;
            for (int qi = 0; qi < cfg.quant_seeds; ++qi) {
                const double b = cells[(fi * specs.size() + pi) * cfg.quant_seeds + qi].bas;
                var += (b - mean) * (b - mean);
            }
            const Cell& c0 = cells[(fi * specs.size() + pi) * cfg.quant_seeds];
            const kern::NetworkProgram np = kern::build_network_program(c0.qnet);
            ParetoPoint p;
            p.model_id = "int-" + lambda_id(li) + "-" + specs[pi].to_string();
            p.bas_mean = mean;
            p.bas_std = cfg.quant_seeds > 1 ? std::sqrt(var / (cfg.quant_seeds - 1)) : 0.0;
            p.params = c0.qnet.cfg.param_count();
            p.macs = c0.qnet.cfg.mac_count();
            p.cycles = static_cast<long long>(np.prog.size());
            p.mem_bytes = c0.qnet.memory_bytes();
            p.spec = specs[pi].to_string();
            p.lambda = cfg.lambda_grid[li];
            out.points.push_back(p);
            if (!model_dir.empty()) {
                save_int_model(model_dir + "/" + p.model_id + ".ircm", c0.qnet,
                               {{"lambda", double_to_hex(p.lambda)}});
            }
        }
    }
    return out;
}

std::string CvTable::to_csv() const {
    std::string out = "fold_session,seed,bas\n";
    for (const auto& c : cells) {
        out += std::to_string(c.fold_session) + "," + std::to_string(c.seed) + "," + fmt(c.bas) + "\n";
    }
    return out;
}

CvTable cross_validate(const PipelineConfig& cfg, const Dataset& ds) {
    const auto sessions = ds.session_ids();
    require(sessions.size() >= 2, "cross_validate: need at least 2 sessions");
    const int s1 = sessions.front();
    const auto [x1, y1] = make_tensor(ds, ds.session_indices(s1));

    CvTable table;
    table.stage = cfg.cv_spec;
    std::vector<int> folds(sessions.begin() + 1, sessions.end());
    table.cells.resize(folds.size() * cfg.seeds);

    std::vector<std::function<void()>> jobs;
    for (int si = 0; si < cfg.seeds; ++si) {
        jobs.push_back([&, si] {
            SeedNetwork seed_net{SeedConfig{}};
            Rng init_rng(Rng::derive(cfg.seed_base, 0x5EED0000ull + si));
            seed_net.init_params(init_rng);
            SearchConfig sc;
            sc.lambda = cfg.cv_lambda;
            sc.metric = cfg.metric;
            sc.epochs = cfg.epochs_nas;
            sc.batch = cfg.batch;
            sc.lr = cfg.lr;
            sc.mask_lr = cfg.mask_lr;
            sc.seed = Rng::derive(cfg.seed_base, 0xCC000000ull + si);
            MaskedNetwork mnet = search(seed_net, x1, y1, sc);
            ExtractResult ex = extract(mnet);

            for (size_t fi = 0; fi < folds.size(); ++fi) {
                const int fold = folds[fi];
                const auto [xtr, ytr] = make_tensor(ds, ds.indices_excluding(fold));
                const auto test_idx = ds.session_indices(fold);
                const auto [xte, yte] = make_tensor(ds, test_idx);
                double b = 0.0;
                if (cfg.cv_spec == "float") {
                    SeedNetwork net = ex.net;
                    TrainOpts ft;
                    ft.epochs = cfg.epochs_ft;
                    ft.batch = cfg.batch;
                    ft.lr = cfg.lr;
                    ft.seed = Rng::derive(cfg.seed_base, 0xFF000000ull + fi * 31 + si);
                    finetune_float(net, xtr, ytr, ft);
                    b = bas(predict_float(net, xte), yte);
                } else {
                    const QuantSpec spec = QuantSpec::from_string(cfg.cv_spec);
                    SeedNetwork folded = fold_bn(ex.net);
                    QatNetwork q(folded, spec);
                    QatConfig qc;
                    qc.epochs = cfg.epochs_qat;
                    qc.batch = cfg.batch;
                    qc.lr = cfg.lr;
                    qc.seed = Rng::derive(cfg.seed_base, 0xC1000000ull + si);
                    qat_train(q, x1, y1, qc);  // stage one: session-1 only
                    qc.epochs = cfg.epochs_ft;
                    qc.seed = Rng::derive(cfg.seed_base, 0xC2000000ull + fi * 31 + si);
                    qat_train(q, xtr, ytr, qc);  // fine-tune on the training fold
                    const QuantizedNetwork iq = lower_to_integer(q, spec);
                    b = bas(predict_int_host(iq, ds, test_idx), yte);
                }
                table.cells[fi * cfg.seeds + si] = CvCell{fold, static_cast<uint64_t>(si), b};
            }
        });
    }
    run_jobs(cfg.workers, jobs);
    return table;
}

void write_results_csv(const std::string& path, const std::vector<ParetoPoint>& points) {
    std::vector<ParetoPoint> sorted = points;
    std::sort(sorted.begin(), sorted.end(),
              [](const ParetoPoint& a, const ParetoPoint& b) { return a.model_id < b.model_id; });
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot write " + path);
    out << "model_id,spec,lambda,params,macs,mem_bytes,cycles,bas_mean,bas_std\n";
    for (const auto& p : sorted) {
        out << p.model_id << "," << p.spec << "," << fmt(p.lambda, "%.9g") << "," << p.params << "," << p.macs
            << "," << p.mem_bytes << "," << p.cycles << "," << fmt(p.bas_mean) << "," << fmt(p.bas_std) << "\n";
    }
}

void write_frontier_csv(const std::string& path, const std::vector<ParetoPoint>& frontier) {
    write_results_csv(path, frontier);
}

std::vector<ParetoPoint> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open results: " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "empty results file: " + path);
    std::vector<ParetoPoint> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        require(cells.size() == 9, "malformed results row: " + line);
        ParetoPoint p;
        p.model_id = cells[0];
        p.spec = cells[1];
        p.lambda = std::stod(cells[2]);
        p.params = std::stoll(cells[3]);
        p.macs = std::stoll(cells[4]);
        p.mem_bytes = std::stoll(cells[5]);
        p.cycles = std::stoll(cells[6]);
        p.bas_mean = std::stod(cells[7]);
        p.bas_std = std::stod(cells[8]);
        out.push_back(p);
    }
    return out;
}

void write_frontier_svg(const std::string& path, const std::vector<ParetoPoint>& all,
                        const std::vector<ParetoPoint>& frontier, ParetoAxis axis) {
    const int width = 640, height = 440, ml = 70, mr = 20, mt = 30, mb = 50;
    double cmin = 1e300, cmax = 0.0, bmin = 1.0, bmax = 0.0;
    for (const auto& p : all) {
        const double c = static_cast<double>(pareto_cost(p, axis));
        if (c <= 0) continue;
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
        bmin = std::min(bmin, p.bas_mean);
        bmax = std::max(bmax, p.bas_mean);
    }
    if (cmin >= cmax) cmax = cmin * 10.0;
    if (bmin >= bmax) {
        bmin = std::max(0.0, bmin - 0.05);
        bmax = std::min(1.0, bmax + 0.05);
    }
    const double lx0 = std::log10(cmin), lx1 = std::log10(cmax);
    auto px = [&](double c) {
        return ml + (std::log10(c) - lx0) / (lx1 - lx0) * (width - ml - mr);
    };
    auto py = [&](double b) { return height - mb - (b - bmin) / (bmax - bmin) * (height - mt - mb); };

    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot write " + path);
    const char* axis_name = axis == ParetoAxis::kParams   ? "parameters"
                            : axis == ParetoAxis::kMacs   ? "MACs"
                            : axis == ParetoAxis::kCycles ? "cycles"
                                                          : "memory [B]";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << (width - ml - mr) << "\" height=\""
        << (height - mt - mb) << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (width / 2) << "\" y=\"" << (height - 12) << "\" text-anchor=\"middle\" font-size=\"14\">"
        << axis_name << " (log scale)</text>\n";
    out << "<text x=\"16\" y=\"" << (height / 2) << "\" font-size=\"14\" transform=\"rotate(-90 16 "
        << (height / 2) << ")\" text-anchor=\"middle\">balanced accuracy</text>\n";
    for (const auto& p : all) {
        const double c = static_cast<double>(pareto_cost(p, axis));
        if (c <= 0) continue;
        out << "<circle cx=\"" << fmt(px(c), "%.2f") << "\" cy=\"" << fmt(py(p.bas_mean), "%.2f")
            << "\" r=\"4\" fill=\"#999999\"/>\n";
    }
    std::string poly;
    for (const auto& p : frontier) {
        const double c = static_cast<double>(pareto_cost(p, axis));
        if (c <= 0) continue;
        poly += fmt(px(c), "%.2f") + "," + fmt(py(p.bas_mean), "%.2f") + " ";
        out << "<circle cx=\"" << fmt(px(c), "%.2f") << "\" cy=\"" << fmt(py(p.bas_mean), "%.2f")
            << "\" r=\"5\" fill=\"#1f6fb4\"/>\n";
    }
    out << "<polyline points=\"" << poly << "\" fill=\"none\" stroke=\"#1f6fb4\" stroke-width=\"2\"/>\n";
    for (const auto& p : frontier) {
        const double c = static_cast<double>(pareto_cost(p, axis));
        if (c <= 0) continue;
        out << "<text x=\"" << fmt(px(c) + 6, "%.2f") << "\" y=\"" << fmt(py(p.bas_mean) - 6, "%.2f")
            << "\" font-size=\"10\">" << p.model_id << "</text>\n";
    }
    out << "</svg>\n";
}

FlowResult run_full_flow(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    fs::create_directories(cfg.out_dir + "/models");

    Dataset ds;
    if (cfg.data_csv.empty()) {
        ds = synth_generate(cfg.synth);
        save_dataset(ds, cfg.out_dir + "/data.csv");
    } else {
        ds = load_dataset(cfg.data_csv);
    }

    const NasSweepResult nas = run_search_sweep(cfg, ds, cfg.out_dir + "/models");
    const QuantSweepResult quant = run_quant_sweep(cfg, ds, nas, cfg.out_dir + "/models");

    std::vector<ParetoPoint> all = nas.points;
    all.insert(all.end(), quant.points.begin(), quant.points.end());
    write_results_csv(cfg.out_dir + "/results.csv", all);

    const struct {
        ParetoAxis axis;
        const char* name;
    } axes[] = {{ParetoAxis::kParams, "params"}, {ParetoAxis::kMemory, "memory"}, {ParetoAxis::kCycles, "cycles"}};
    for (const auto& a : axes) {
        const auto frontier = pareto_extract(all, a.axis);
        write_frontier_csv(cfg.out_dir + "/frontier_" + a.name + ".csv", frontier);
        write_frontier_svg(cfg.out_dir + "/frontier_" + a.name + ".svg", all, frontier, a.axis);
    }

    std::ofstream summary(cfg.out_dir + "/summary.txt", std::ios::binary);
    summary << "models: " << all.size() << " (" << nas.points.size() << " float, " << quant.points.size()
            << " quantized)\n";
    const auto mem_front = pareto_extract(all, ParetoAxis::kMemory);
    summary << "memory frontier:\n";
    for (const auto& p : mem_front) {
        summary << "  " << p.model_id << " mem=" << p.mem_bytes << "B bas=" << fmt(p.bas_mean) << "\n";
    }
    return FlowResult{nas.points, quant.points};
}

}  // namespace ircount
