#include "ircount/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ircount/rng.hpp"

namespace ircount {

std::vector<int> Dataset::session_ids() const {
    std::set<int> s;
    for (const auto& smp : samples) s.insert(smp.session);
    return {s.begin(), s.end()};
}

std::vector<size_t> Dataset::session_indices(int session) const {
    std::vector<size_t> idx;
    for (size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].session == session) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return samples[a].frame_idx < samples[b].frame_idx; });
    return idx;
}

std::vector<size_t> Dataset::indices_excluding(int session) const {
    std::vector<size_t> idx;
    for (size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].session != session) idx.push_back(i);
    }
    return idx;
}

size_t Dataset::session_count(int session) const {
    size_t n = 0;
    for (const auto& s : samples) n += s.session == session ? 1 : 0;
    return n;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset is empty: " + path);
    {
        std::string expect = "session,frame,label";
        for (int i = 0; i < 64; ++i) expect += ",p" + std::to_string(i);
        // tolerate trailing whitespace/CR
        std::string got = line;
        while (!got.empty() && (got.back() == '\r' || got.back() == ' ')) got.pop_back();
        if (got != expect) throw std::runtime_error("dataset header mismatch in " + path);
    }
    Dataset ds;
    std::map<int, int> last_frame;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 67) {
            throw std::runtime_error("dataset row " + std::to_string(row) + ": expected 67 columns");
        }
        Sample s;
        try {
            s.session = std::stoi(cells[0]);
            s.frame_idx = std::stoi(cells[1]);
            s.label = std::stoi(cells[2]);
            for (int i = 0; i < 64; ++i) s.frame[i] = std::stof(cells[3 + i]);
        } catch (const std::exception&) {
            throw std::runtime_error("dataset row " + std::to_string(row) + ": malformed value");
        }
        if (s.label < 0 || s.label > 3) {
            throw std::runtime_error("dataset row " + std::to_string(row) + ": label out of range [0,3]");
        }
        const auto it = last_frame.find(s.session);
        if (it != last_frame.end() && s.frame_idx <= it->second) {
            throw std::runtime_error("dataset row " + std::to_string(row) +
                                     ": non-monotone frame index within session " + std::to_string(s.session));
        }
        last_frame[s.session] = s.frame_idx;
        ds.samples.push_back(s);
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset: " + path);
    out << "session,frame,label";
    for (int i = 0; i < 64; ++i) out << ",p" << i;
    out << "\n";
    char buf[32];
    for (const auto& s : ds.samples) {
        out << s.session << "," << s.frame_idx << "," << s.label;
        for (int i = 0; i < 64; ++i) {
            std::snprintf(buf, sizeof(buf), "%.4f", static_cast<double>(s.frame[i]));
            out << "," << buf;
        }
        out << "\n";
    }
}

namespace {

struct Blob {
    double cx, cy, amp, sigma;
};

bool far_enough(const std::vector<Blob>& blobs, size_t self, double x, double y, double min_sep) {
    for (size_t i = 0; i < blobs.size(); ++i) {
        if (i == self) continue;
        const double dx = blobs[i].cx - x, dy = blobs[i].cy - y;
        if (dx * dx + dy * dy < min_sep * min_sep) return false;
    }
    return true;
}

}  // namespace

Dataset synth_generate(const SynthConfig& cfg) {
    if (cfg.per_session < 1 || cfg.sessions < 1) throw std::invalid_argument("synth_generate: bad sizes");
    Dataset ds;
    for (int session = 1; session <= cfg.sessions; ++session) {
        Rng rng(Rng::derive(cfg.seed, static_cast<uint64_t>(session)));
        const double ambient_base = 19.0 + 1.7 * (session - 1);
        const double drift_phase = rng.uniform(0.0, 6.28318530717958648);
        int label = static_cast<int>(rng.uniform_int(4));
        std::vector<Blob> blobs;
        auto spawn = [&]() {
            for (int attempt = 0; attempt < 24; ++attempt) {
                const double x = rng.uniform(1.0, 6.0);
                const double y = rng.uniform(1.0, 6.0);
                if (far_enough(blobs, blobs.size(), x, y, cfg.min_separation) || attempt == 23) {
                    blobs.push_back({x, y, 9.0 + 3.0 * rng.uniform(), 1.0 + 0.3 * rng.uniform()});
                    return;
                }
            }
        };
        for (int i = 0; i < label; ++i) spawn();

        for (int f = 0; f < cfg.per_session; ++f) {
            if (f > 0 && rng.uniform() >= cfg.keep_prob) {
                const bool up = rng.uniform() < 0.5;
                const int next = std::clamp(label + (up ? 1 : -1), 0, 3);
                if (next > label) spawn();
                if (next < label && !blobs.empty()) blobs.pop_back();
                label = next;
            }
            for (size_t bi = 0; bi < blobs.size(); ++bi) {
                if (rng.uniform() < 0.05) {
                    // someone sits down elsewhere: occasional relocation keeps
                    // the scene coverage broad within a session
                    for (int attempt = 0; attempt < 24; ++attempt) {
                        const double nx = rng.uniform(1.0, 6.0);
                        const double ny = rng.uniform(1.0, 6.0);
                        if (far_enough(blobs, bi, nx, ny, cfg.min_separation) || attempt == 23) {
                            blobs[bi].cx = nx;
                            blobs[bi].cy = ny;
                            break;
                        }
                    }
                    continue;
                }
                for (int attempt = 0; attempt < 8; ++attempt) {
                    const double nx = std::clamp(blobs[bi].cx + 0.5 * rng.normal(), 0.8, 6.2);
                    const double ny = std::clamp(blobs[bi].cy + 0.5 * rng.normal(), 0.8, 6.2);
                    if (far_enough(blobs, bi, nx, ny, cfg.min_separation) || attempt == 7) {
                        blobs[bi].cx = nx;
                        blobs[bi].cy = ny;
                        break;
                    }
                }
            }
            // slow thermal drift keeps session ambients overlapping, so the
            // count cannot be inferred from the absolute temperature alone
            const double ambient = ambient_base + 1.4 * std::sin(drift_phase + 0.06 * f) +
                                   0.3 * rng.normal();
            Sample s;
            s.session = session;
            s.frame_idx = f;
            s.label = label;
            for (int y = 0; y < 8; ++y) {
                for (int x = 0; x < 8; ++x) {
                    double v = ambient;
                    for (const auto& b : blobs) {
                        const double dx = x - b.cx, dy = y - b.cy;
                        v += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
                    }
                    v += cfg.noise * rng.normal();
                    s.frame[y * 8 + x] = static_cast<float>(v);
                }
            }
            ds.samples.push_back(s);
        }
    }
    return ds;
}

std::pair<Tensor, std::vector<int>> make_tensor(const Dataset& ds, const std::vector<size_t>& idx) {
    Tensor x(static_cast<int>(idx.size()), 1, 8, 8);
    std::vector<int> y(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        const Sample& s = ds.samples[idx[i]];
        std::copy(s.frame.begin(), s.frame.end(), &x.at(static_cast<int>(i), 0, 0, 0));
        y[i] = s.label;
    }
    return {std::move(x), std::move(y)};
}

}  // namespace ircount
