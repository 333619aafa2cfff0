#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ircount/kernels.hpp"
#include "ircount/model_io.hpp"
#include "ircount/pipeline.hpp"
#include "ircount/postproc.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ircount;
using testutil::fill_uniform;
using testutil::rel_close;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<uint8_t> file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SeedNetwork small_net(uint64_t seed) {
    SeedConfig cfg;
    cfg.c1 = 4;
    cfg.c2 = 4;
    cfg.f1 = 8;
    SeedNetwork net(cfg);
    Rng rng(seed);
    net.init_params(rng);
    return net;
}

QuantizedNetwork small_int_net(uint64_t seed) {
    SeedNetwork net = small_net(seed);
    QatNetwork q(fold_bn(net), QuantSpec::from_string("8-4-8-4"));
    Tensor calib(10, 1, 8, 8);
    Rng rng(seed + 1);
    fill_uniform(calib, rng, 18.0, 34.0);
    q.calibrate(calib);
    return lower_to_integer(q, q.spec);
}

}  // namespace

TEST_CASE("mode window: counting and the recency tie rule") {
    ModeWindow w(5);
    CHECK(w.push_and_predict(1) == 1);
    CHECK(w.push_and_predict(1) == 1);
    CHECK(w.push_and_predict(2) == 1);
    CHECK(w.push_and_predict(1) == 1);
    CHECK(w.push_and_predict(3) == 1);  // window [1,1,2,1,3] -> 1

    ModeWindow warm(5);
    CHECK(warm.push_and_predict(2) == 2);  // warm-up emits the partial mode

    ModeWindow tie(5);
    tie.push_and_predict(1);
    tie.push_and_predict(1);
    tie.push_and_predict(2);
    CHECK(tie.push_and_predict(2) == 2);  // [1,1,2,2], 2 most recent

    CHECK_THROWS(ModeWindow(0));
    CHECK_THROWS(w.push_and_predict(4));
}

TEST_CASE("mode window equals the brute-force suffix mode on all short streams") {
    for (int capacity = 1; capacity <= 5; ++capacity) {
        for (int len = 1; len <= 8; ++len) {
            const int total = 1 << (2 * len);  // 4^len streams
            for (int code = 0; code < total; ++code) {
                ModeWindow w(capacity);
                std::vector<int> stream;
                for (int i = 0; i < len; ++i) {
                    stream.push_back((code >> (2 * i)) & 3);
                    const int got = w.push_and_predict(stream.back());
                    const size_t keep = std::min<size_t>(stream.size(), capacity);
                    const std::vector<int> window(stream.end() - keep, stream.end());
                    REQUIRE(got == oracle::mode_of(window));
                    REQUIRE(w.size() <= static_cast<size_t>(capacity));
                }
            }
        }
    }
}

TEST_CASE("mode window stream properties") {
    ModeWindow w(5);
    const std::vector<int> constant(12, 3);
    CHECK(apply_to_stream(w, constant) == constant);

    // one flipped prediction inside a long constant run disappears
    std::vector<int> flip(12, 1);
    flip[6] = 2;
    w.reset();
    CHECK(apply_to_stream(w, flip) == std::vector<int>(12, 1));

    // step change settles within ceil(capacity/2) frames of all-correct input
    std::vector<int> step(10, 0);
    step.insert(step.end(), 10, 2);
    w.reset();
    const auto out = apply_to_stream(w, step);
    int first = -1;
    for (size_t i = 10; i < out.size(); ++i) {
        if (out[i] == 2) {
            first = static_cast<int>(i);
            break;
        }
    }
    CHECK(first - 10 == 2);  // third post-change frame, delay of 3 frames
    for (size_t i = first; i < out.size(); ++i) CHECK(out[i] == 2);
}

TEST_CASE("synthetic data is deterministic per seed") {
    SynthConfig cfg;
    cfg.sessions = 2;
    cfg.per_session = 30;
    cfg.seed = 99;
    const Dataset a = synth_generate(cfg);
    const Dataset b = synth_generate(cfg);
    REQUIRE(a.samples.size() == b.samples.size());
    for (size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].label == b.samples[i].label);
        CHECK(a.samples[i].frame == b.samples[i].frame);
    }
    cfg.seed = 100;
    const Dataset c = synth_generate(cfg);
    bool differs = false;
    for (size_t i = 0; i < a.samples.size() && !differs; ++i) differs = a.samples[i].frame != c.samples[i].frame;
    CHECK(differs);
}

TEST_CASE("empty-room frames carry noise-level variance only") {
    SynthConfig cfg;
    cfg.sessions = 3;
    cfg.per_session = 120;
    cfg.seed = 5;
    const Dataset ds = synth_generate(cfg);
    double var_sum = 0.0;
    int frames = 0;
    for (const auto& s : ds.samples) {
        if (s.label != 0) continue;
        double mean = 0.0;
        for (float v : s.frame) mean += v;
        mean /= 64.0;
        double var = 0.0;
        for (float v : s.frame) var += (v - mean) * (v - mean);
        var_sum += var / 64.0;
        ++frames;
    }
    REQUIRE(frames > 10);
    const double mean_var = var_sum / frames;
    const double noise_var = cfg.noise * cfg.noise;
    CHECK(mean_var > 0.5 * noise_var);
    CHECK(mean_var < 2.0 * noise_var);
}

TEST_CASE("dataset csv: round trip and validation errors") {
    SynthConfig cfg;
    cfg.sessions = 2;
    cfg.per_session = 4;
    const Dataset ds = synth_generate(cfg);
    const std::string path = temp_path("ircount_ds.csv");
    save_dataset(ds, path);
    const Dataset back = load_dataset(path);
    REQUIRE(back.samples.size() == ds.samples.size());
    for (size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(back.samples[i].label == ds.samples[i].label);
        CHECK(back.samples[i].session == ds.samples[i].session);
        CHECK(rel_close(back.samples[i].frame[10], ds.samples[i].frame[10], 1e-3, 1e-3));
    }

    auto write_rows = [&](const std::string& rows) {
        std::ofstream out(path);
        out << "session,frame,label";
        for (int i = 0; i < 64; ++i) out << ",p" << i;
        out << "\n" << rows;
    };
    std::string zeros;
    for (int i = 0; i < 64; ++i) zeros += ",0.0";

    write_rows("1,0,1" + zeros + "\n1,1,2" + zeros + "\n2,0,0" + zeros + "\n");
    CHECK(load_dataset(path).samples.size() == 3);

    write_rows("1,0,4" + zeros + "\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_dataset(path)), doctest::Contains("row 2"), std::runtime_error);

    write_rows("1,5,1" + zeros + "\n1,5,1" + zeros + "\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_dataset(path)), doctest::Contains("non-monotone"),
                         std::runtime_error);

    std::ofstream bad(path);
    bad << "not,a,header\n";
    bad.close();
    CHECK_THROWS_WITH_AS(static_cast<void>(load_dataset(path)), doctest::Contains("header"), std::runtime_error);
}

TEST_CASE("balanced accuracy") {
    CHECK(bas({0, 1, 2, 3}, {0, 1, 2, 3}) == 1.0);
    CHECK(bas({0, 0, 0, 0}, {0, 1, 2, 3}) == 0.25);
    // recalls 1.0, 0.5, 0.0, 0.5 -> 0.5
    const std::vector<int> labels = {0, 0, 1, 1, 2, 2, 3, 3};
    const std::vector<int> preds = {0, 0, 1, 0, 3, 3, 3, 0};
    CHECK(bas(preds, labels) == 0.5);
    CHECK_THROWS(bas({}, {}));
    // classes absent from the labels do not enter the mean
    CHECK(bas({0, 0}, {0, 0}) == 1.0);
}

TEST_CASE("pareto extraction matches the brute-force dominance oracle") {
    auto mk = [](const char* id, double b, long long cost) {
        ParetoPoint p;
        p.model_id = id;
        p.bas_mean = b;
        p.params = cost;
        p.macs = cost * 2;
        p.mem_bytes = cost * 4;
        p.cycles = cost;
        return p;
    };
    const std::vector<ParetoPoint> single = {mk("a", 0.9, 100)};
    CHECK(pareto_extract(single, ParetoAxis::kParams).size() == 1);

    const std::vector<ParetoPoint> two = {mk("good", 0.9, 100), mk("bad", 0.8, 200)};
    const auto f2 = pareto_extract(two, ParetoAxis::kParams);
    REQUIRE(f2.size() == 1);
    CHECK(f2[0].model_id == "good");

    const std::vector<ParetoPoint> crafted = {mk("a", 0.95, 1000), mk("b", 0.90, 400), mk("c", 0.90, 500),
                                              mk("d", 0.70, 100), mk("e", 0.96, 2000)};
    const auto got = pareto_extract(crafted, ParetoAxis::kParams);
    const auto want = oracle::pareto_bruteforce(crafted, ParetoAxis::kParams);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i].model_id == want[i].model_id);

    // duplicates keep the lowest id
    const std::vector<ParetoPoint> dup = {mk("z", 0.9, 100), mk("a", 0.9, 100)};
    const auto fd = pareto_extract(dup, ParetoAxis::kParams);
    REQUIRE(fd.size() == 1);
    CHECK(fd[0].model_id == "a");

    // randomized property, up to 1000 points
    Rng rng(1234);
    for (int trial = 0; trial < 6; ++trial) {
        std::vector<ParetoPoint> pts;
        const int n = 10 + static_cast<int>(rng.uniform_int(991));
        for (int i = 0; i < n; ++i) {
            pts.push_back(mk(("p" + std::to_string(i)).c_str(), 0.5 + 0.5 * rng.uniform(),
                             1 + static_cast<long long>(rng.uniform_int(5000))));
        }
        for (const auto axis : {ParetoAxis::kParams, ParetoAxis::kMemory}) {
            const auto fast = pareto_extract(pts, axis);
            const auto slow = oracle::pareto_bruteforce(pts, axis);
            REQUIRE(fast.size() == slow.size());
            for (size_t i = 0; i < fast.size(); ++i) REQUIRE(fast[i].model_id == slow[i].model_id);
        }
    }

    // float models (cycles 0) are not eligible on the cycles axis
    std::vector<ParetoPoint> mixed = {mk("f", 0.99, 100), mk("q", 0.5, 50)};
    mixed[0].cycles = 0;
    const auto fc = pareto_extract(mixed, ParetoAxis::kCycles);
    REQUIRE(fc.size() == 1);
    CHECK(fc[0].model_id == "q");
}

TEST_CASE("model files: round trips, checksums, version gate") {
    const std::string p1 = temp_path("m1.ircm");
    const std::string p2 = temp_path("m2.ircm");
    SeedNetwork net = small_net(7);
    save_float_model(p1, net, {{"note", "x"}});
    SeedNetwork back = load_float_model(p1);
    save_float_model(p2, back, {{"note", "x"}});
    CHECK(file_bytes(p1) == file_bytes(p2));

    // nas stage: mask values ride along bitwise
    MaskedNetwork m(net);
    m.theta1.data = {1.5f, -0.25f, 0.0f, -2.0f};
    const std::string p3 = temp_path("m3.ircm");
    save_nas_model(p3, m, 0.125, 9);
    const MaskedNetwork mb = load_nas_model(p3);
    CHECK(mb.theta1.data == m.theta1.data);

    // qat stage: learned ranges survive exactly (hexfloat manifest)
    QatNetwork q(fold_bn(net), QuantSpec::from_string("8-4-8-4"));
    Tensor calib(6, 1, 8, 8);
    Rng rng(8);
    fill_uniform(calib, rng, 18.0, 34.0);
    q.calibrate(calib);
    const std::string p4 = temp_path("m4.ircm");
    save_qat_model(p4, q);
    const QatNetwork qb = load_qat_model(p4);
    for (int i = 0; i < 5; ++i) {
        CHECK(qb.acts[i].alpha == q.acts[i].alpha);
        CHECK(qb.acts[i].beta == q.acts[i].beta);
    }

    // tampering any blob byte trips the checksum
    auto bytes = file_bytes(p1);
    bytes[bytes.size() / 2] ^= 0x40;
    {
        std::ofstream out(p1, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_WITH_AS(static_cast<void>(read_model_file(p1)), doctest::Contains("checksum"),
                         std::runtime_error);

    {
        std::ofstream out(p1, std::ios::binary);
        out << "IRCM9\nmanifest 0\nend\n";
    }
    CHECK_THROWS_WITH_AS(static_cast<void>(read_model_file(p1)), doctest::Contains("version"),
                         std::runtime_error);
}

TEST_CASE("int model round trip reproduces execution bit-exactly") {
    const QuantizedNetwork qnet = small_int_net(11);
    const std::string path = temp_path("mint.ircm");
    save_int_model(path, qnet, {{"lambda", double_to_hex(0.5)}});
    const QuantizedNetwork back = load_int_model(path);

    Rng rng(12);
    for (int trial = 0; trial < 4; ++trial) {
        Tensor frame(1, 1, 8, 8);
        fill_uniform(frame, rng, 18.0, 34.0);
        const auto codes = quantize_frame(qnet, frame.data.data(), 64);
        const auto codes2 = quantize_frame(back, frame.data.data(), 64);
        CHECK(codes == codes2);
        CHECK(kern::host_logits_codes(qnet, codes) == kern::host_logits_codes(back, codes));
    }
    const std::string path2 = temp_path("mint2.ircm");
    save_int_model(path2, back, {{"lambda", double_to_hex(0.5)}});
    CHECK(file_bytes(path) == file_bytes(path2));
}

TEST_CASE("config parsing mirrors flags and rejects unknown keys") {
    const auto kv = parse_config_text("epochs.nas = 4\n# comment\nlambda.grid = 1e-3,1e-1\nspecs = all\n");
    PipelineConfig cfg;
    cfg.apply(kv);
    CHECK(cfg.epochs_nas == 4);
    CHECK(cfg.lambda_grid == std::vector<double>{1e-3, 1e-1});
    CHECK_FALSE(cfg.specs_first8);
    cfg.apply({{"specs", "first8"}});  // later overrides win
    CHECK(cfg.specs_first8);
    CHECK_THROWS(cfg.apply({{"bogus", "1"}}));
    CHECK_THROWS(static_cast<void>(parse_config_text("no equals sign\n")));
}

TEST_CASE("results csv round trip") {
    std::vector<ParetoPoint> pts(2);
    pts[0].model_id = "nas-l00";
    pts[0].spec = "FLOAT32";
    pts[0].lambda = 1e-7;
    pts[0].params = 103428;
    pts[0].macs = 692480;
    pts[0].mem_bytes = 413712;
    pts[0].bas_mean = 0.91;
    pts[0].bas_std = 0.01;
    pts[1].model_id = "int-l00-8-4-4-8";
    pts[1].spec = "8-4-4-8";
    pts[1].lambda = 1e-7;
    pts[1].params = 1000;
    pts[1].macs = 5000;
    pts[1].mem_bytes = 700;
    pts[1].cycles = 123456;
    pts[1].bas_mean = 0.88;
    const std::string path = temp_path("results.csv");
    write_results_csv(path, pts);
    const auto back = read_results_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].model_id == "int-l00-8-4-4-8");  // sorted by id
    CHECK(back[1].params == 103428);
    CHECK(back[0].cycles == 123456);
}

TEST_CASE("frontier svg is self-contained and deterministic") {
    std::vector<ParetoPoint> pts(3);
    for (int i = 0; i < 3; ++i) {
        pts[i].model_id = "m" + std::to_string(i);
        pts[i].bas_mean = 0.7 + 0.1 * i;
        pts[i].params = 100 * (i + 1) * (i + 1);
        pts[i].mem_bytes = pts[i].params * 4;
    }
    const auto frontier = pareto_extract(pts, ParetoAxis::kParams);
    const std::string a = temp_path("fa.svg"), b = temp_path("fb.svg");
    write_frontier_svg(a, pts, frontier, ParetoAxis::kParams);
    write_frontier_svg(b, pts, frontier, ParetoAxis::kParams);
    const auto ba = file_bytes(a);
    CHECK(ba == file_bytes(b));
    const std::string text(ba.begin(), ba.end());
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("polyline") != std::string::npos);
}

TEST_CASE("job pool results do not depend on the worker count") {
    for (const int workers : {1, 3}) {
        std::vector<int> out(16, 0);
        std::vector<std::function<void()>> jobs;
        for (int i = 0; i < 16; ++i) {
            jobs.push_back([&out, i] { out[i] = i * i + 1; });
        }
        run_jobs(workers, jobs);
        for (int i = 0; i < 16; ++i) REQUIRE(out[i] == i * i + 1);
    }
}

TEST_CASE("fold construction: the first session never leaves the training set") {
    SynthConfig scfg;
    scfg.sessions = 5;
    scfg.per_session = 8;
    const Dataset ds = synth_generate(scfg);
    const auto sessions = ds.session_ids();
    REQUIRE(sessions == std::vector<int>{1, 2, 3, 4, 5});
    for (int fold : {2, 3, 4, 5}) {
        const auto train = ds.indices_excluding(fold);
        const auto test = ds.session_indices(fold);
        for (size_t t : test) {
            for (size_t tr : train) REQUIRE(t != tr);
        }
        bool has_s1 = false;
        for (size_t tr : train) has_s1 = has_s1 || ds.samples[tr].session == 1;
        CHECK(has_s1);
    }
}
