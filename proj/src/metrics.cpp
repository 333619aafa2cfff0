#include "ircount/metrics.hpp"

#include <array>
#include <stdexcept>

namespace ircount {

double bas(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (labels.empty() || preds.size() != labels.size()) {
        throw std::invalid_argument("bas: empty input or size mismatch");
    }
    std::array<long long, 4> total{};
    std::array<long long, 4> hit{};
    for (size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y > 3) throw std::invalid_argument("bas: label out of range");
        total[y] += 1;
        if (preds[i] == y) hit[y] += 1;
    }
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < 4; ++c) {
        if (total[c] == 0) continue;
        sum += static_cast<double>(hit[c]) / static_cast<double>(total[c]);
        present += 1;
    }
    return sum / present;
}

}  // namespace ircount
