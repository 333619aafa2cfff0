#pragma once

#include <vector>

namespace ircount {

/// Balanced accuracy: mean over the classes present in `labels` of the
/// per-class recall. Throws on empty input.
double bas(const std::vector<int>& preds, const std::vector<int>& labels);

}  // namespace ircount
