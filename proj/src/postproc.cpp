#include "ircount/postproc.hpp"

#include <array>

namespace ircount {

int ModeWindow::push_and_predict(int pred) {
    if (pred < 0 || pred > 3) throw std::invalid_argument("mode window: class out of range");
    if (static_cast<int>(buffer_.size()) == capacity_) buffer_.pop_front();
    buffer_.push_back(pred);

    std::array<int, 4> count{};
    std::array<int, 4> last_seen{-1, -1, -1, -1};
    for (size_t i = 0; i < buffer_.size(); ++i) {
        count[buffer_[i]] += 1;
        last_seen[buffer_[i]] = static_cast<int>(i);
    }
    int best = -1;
    for (int cls = 0; cls < 4; ++cls) {
        if (count[cls] == 0) continue;
        if (best < 0 || count[cls] > count[best] ||
            (count[cls] == count[best] && last_seen[cls] > last_seen[best])) {
            best = cls;
        }
    }
    return best;
}

std::vector<int> apply_to_stream(ModeWindow& w, const std::vector<int>& preds) {
    std::vector<int> out;
    out.reserve(preds.size());
    for (int p : preds) out.push_back(w.push_and_predict(p));
    return out;
}

}  // namespace ircount
