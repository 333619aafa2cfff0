#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

// Training-level behavior: these cases run real (reduced) training loops and
// take seconds to minutes, so they live in their own binary.

#include <algorithm>

#include "ircount/dataset.hpp"
#include "ircount/metrics.hpp"
#include "ircount/pipeline.hpp"
#include "ircount/postproc.hpp"
#include "test_util.hpp"

using namespace ircount;

namespace {

Dataset default_synth(int sessions, int per_session, uint64_t seed = 7) {
    SynthConfig cfg;
    cfg.sessions = sessions;
    cfg.per_session = per_session;
    cfg.seed = seed;
    return synth_generate(cfg);
}

}  // namespace

TEST_CASE("a float seed network reaches 0.90 balanced accuracy on a held-out session") {
    // calibration contract of the synthetic generator
    const Dataset ds = default_synth(5, 280);
    const auto [xtr, ytr] = make_tensor(ds, ds.indices_excluding(2));
    const auto [xte, yte] = make_tensor(ds, ds.session_indices(2));
    SeedNetwork net{SeedConfig{}};
    Rng rng(3);
    net.init_params(rng);
    TrainOpts opts;
    opts.epochs = 8;
    opts.batch = 16;
    opts.seed = 11;
    finetune_float(net, xtr, ytr, opts);
    const double b = bas(predict_float(net, xte), yte);
    MESSAGE("held-out BAS ", b);
    CHECK(b >= 0.90);
}

TEST_CASE("search with lambda 0 behaves like plain training") {
    const Dataset ds = default_synth(2, 192);
    const auto [x1, y1] = make_tensor(ds, ds.session_indices(1));
    const auto [xte, yte] = make_tensor(ds, ds.session_indices(2));

    SeedNetwork seed{SeedConfig{}};
    Rng rng(Rng::derive(1, 0x5EED0000ull));
    seed.init_params(rng);

    SeedNetwork plain = seed;
    TrainOpts opts;
    opts.epochs = 10;
    opts.batch = 16;
    opts.seed = 42;
    train_float(plain, x1, y1, opts);
    const double b_plain = bas(predict_float(plain, xte), yte);

    SearchConfig sc;
    sc.lambda = 0.0;
    sc.epochs = 10;
    sc.batch = 16;
    sc.seed = 42;
    MaskedNetwork mnet = search(seed, x1, y1, sc);
    ExtractResult ex = extract(mnet);
    const double b_search = bas(predict_float(ex.net, xte), yte);

    MESSAGE("plain ", b_plain, " search(0) ", b_search);
    CHECK(std::fabs(b_plain - b_search) <= 0.08);
}

TEST_CASE("a very large lambda collapses every maskable layer to one channel") {
    const Dataset ds = default_synth(2, 192);
    const auto [x1, y1] = make_tensor(ds, ds.session_indices(1));
    SeedNetwork seed{SeedConfig{}};
    Rng rng(Rng::derive(1, 0x5EED0001ull));
    seed.init_params(rng);
    SearchConfig sc;
    sc.lambda = 1e2;
    sc.seed = 17;
    MaskedNetwork mnet = search(seed, x1, y1, sc);
    const ExtractResult ex = extract(mnet);
    CHECK(ex.net.cfg.c1 == 1);
    CHECK(ex.net.cfg.c2 == 1);
    CHECK(ex.net.cfg.f1 == 1);
}

TEST_CASE("larger lambda never grows the median extracted cost (5 seeds)") {
    const Dataset ds = default_synth(2, 128);
    const auto [x1, y1] = make_tensor(ds, ds.session_indices(1));
    auto median_cost = [&](double lambda) {
        std::vector<long long> params;
        for (int si = 0; si < 5; ++si) {
            SeedNetwork seed{SeedConfig{}};
            Rng rng(Rng::derive(1, 0x5EED0000ull + si));
            seed.init_params(rng);
            SearchConfig sc;
            sc.lambda = lambda;
            sc.epochs = 10;
            sc.seed = Rng::derive(1, 0xA5ull + si);
            MaskedNetwork m = search(seed, x1, y1, sc);
            params.push_back(extract(m).net.cfg.param_count());
        }
        std::sort(params.begin(), params.end());
        return params[2];
    };
    const long long lo = median_cost(1e-5);
    const long long hi = median_cost(1e-1);
    MESSAGE("median params: lambda 1e-5 -> ", lo, ", lambda 1e-1 -> ", hi);
    CHECK(hi <= lo);
}

TEST_CASE("all-8 QAT stays within 2 points of float accuracy") {
    const Dataset ds = default_synth(5, 280);
    const auto [xtr, ytr] = make_tensor(ds, ds.indices_excluding(2));
    const auto test_idx = ds.session_indices(2);
    const auto [xte, yte] = make_tensor(ds, test_idx);

    SeedConfig small;
    small.c1 = 8;
    small.c2 = 8;
    small.f1 = 16;
    SeedNetwork net(small);
    Rng rng(4);
    net.init_params(rng);
    TrainOpts opts;
    opts.epochs = 12;
    opts.batch = 16;
    opts.seed = 21;
    train_float(net, xtr, ytr, opts);
    const double b_float = bas(predict_float(net, xte), yte);

    QatNetwork q(fold_bn(net), QuantSpec{});
    QatConfig qc;
    qc.epochs = 6;
    qc.batch = 16;
    qc.seed = 5;
    qat_train(q, xtr, ytr, qc);
    const QuantizedNetwork iq = lower_to_integer(q, q.spec);
    const double b_int = bas(predict_int_host(iq, ds, test_idx), yte);
    MESSAGE("float ", b_float, " int 8-8-8-8 ", b_int);
    CHECK(b_int >= b_float - 0.02);
}

TEST_CASE("mode inference never hurts streams with sporadic errors up to 20%") {
    // occupancy changes are slow next to the frame rate: dwell times of
    // ~50 frames dominate the voting delay of half a window
    SynthConfig scfg;
    scfg.sessions = 4;
    scfg.per_session = 400;
    scfg.seed = 11;
    scfg.keep_prob = 0.98;
    const Dataset ds = synth_generate(scfg);
    Rng rng(77);
    for (const double err_rate : {0.05, 0.10, 0.20}) {
        std::vector<int> labels, raw;
        for (const int session : ds.session_ids()) {
            for (size_t i : ds.session_indices(session)) {
                const int truth = ds.samples[i].label;
                labels.push_back(truth);
                int pred = truth;
                if (rng.uniform() < err_rate) {
                    pred = (truth + 1 + static_cast<int>(rng.uniform_int(3))) % 4;
                }
                raw.push_back(pred);
            }
        }
        // vote per session: windows never straddle session boundaries
        std::vector<int> voted;
        size_t offset = 0;
        for (const int session : ds.session_ids()) {
            const size_t n = ds.session_indices(session).size();
            ModeWindow w(5);
            const std::vector<int> chunk(raw.begin() + offset, raw.begin() + offset + n);
            const auto out = apply_to_stream(w, chunk);
            voted.insert(voted.end(), out.begin(), out.end());
            offset += n;
        }
        const double b_raw = bas(raw, labels);
        const double b_voted = bas(voted, labels);
        MESSAGE("err ", err_rate, ": raw ", b_raw, " voted ", b_voted);
        CHECK(b_voted >= b_raw);
    }
}

TEST_CASE("two-session cross-validation yields one fold and is deterministic") {
    PipelineConfig cfg;
    cfg.synth.sessions = 2;
    cfg.synth.per_session = 48;
    cfg.epochs_nas = 2;
    cfg.epochs_ft = 2;
    cfg.seeds = 1;
    cfg.cv_lambda = 1e-3;
    const Dataset ds = synth_generate(cfg.synth);
    const CvTable a = cross_validate(cfg, ds);
    REQUIRE(a.cells.size() == 1);
    CHECK(a.cells[0].fold_session == 2);
    const CvTable b = cross_validate(cfg, ds);
    CHECK(a.to_csv() == b.to_csv());
}
