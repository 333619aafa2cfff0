#include "ircount/pareto.hpp"

#include <algorithm>
#include <stdexcept>

namespace ircount {

ParetoAxis pareto_axis_from_string(const std::string& s) {
    if (s == "params") return ParetoAxis::kParams;
    if (s == "macs") return ParetoAxis::kMacs;
    if (s == "cycles") return ParetoAxis::kCycles;
    if (s == "memory") return ParetoAxis::kMemory;
    throw std::runtime_error("unknown pareto axis: " + s);
}

long long pareto_cost(const ParetoPoint& p, ParetoAxis axis) {
    switch (axis) {
        case ParetoAxis::kParams: return p.params;
        case ParetoAxis::kMacs: return p.macs;
        case ParetoAxis::kCycles: return p.cycles;
        case ParetoAxis::kMemory: return p.mem_bytes;
    }
    return 0;
}

std::vector<ParetoPoint> pareto_extract(const std::vector<ParetoPoint>& points, ParetoAxis axis) {
    if (points.empty()) throw std::invalid_argument("pareto_extract: no points");
    std::vector<const ParetoPoint*> eligible;
    for (const auto& p : points) {
        if (axis == ParetoAxis::kCycles && p.cycles == 0) continue;
        eligible.push_back(&p);
    }
    std::vector<ParetoPoint> out;
    for (const ParetoPoint* p : eligible) {
        const long long pc = pareto_cost(*p, axis);
        bool dominated = false;
        for (const ParetoPoint* q : eligible) {
            if (q == p) continue;
            const long long qc = pareto_cost(*q, axis);
            // q dominates p: at least as good on both axes, strictly better on one
            if (q->bas_mean >= p->bas_mean && qc <= pc &&
                (q->bas_mean > p->bas_mean || qc < pc)) {
                dominated = true;
                break;
            }
            // exact duplicates keep the lowest model_id
            if (q->bas_mean == p->bas_mean && qc == pc && q->model_id < p->model_id) {
                dominated = true;
                break;
            }
        }
        if (!dominated) out.push_back(*p);
    }
    std::sort(out.begin(), out.end(), [&](const ParetoPoint& a, const ParetoPoint& b) {
        const long long ca = pareto_cost(a, axis), cb = pareto_cost(b, axis);
        if (ca != cb) return ca < cb;
        return a.model_id < b.model_id;
    });
    return out;
}

}  // namespace ircount
