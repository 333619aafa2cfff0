#pragma once

#include <deque>
#include <stdexcept>
#include <vector>

namespace ircount {

/// FIFO of recent per-frame class predictions. The emitted value is the
/// modal class of the buffer; ties go to the class with the most recent
/// occurrence. Warm-up emits the mode of the partial buffer.
class ModeWindow {
public:
    explicit ModeWindow(int capacity = 5) : capacity_(capacity) {
        if (capacity < 1) throw std::invalid_argument("mode window capacity must be >= 1");
    }

    int capacity() const { return capacity_; }
    size_t size() const { return buffer_.size(); }
    void reset() { buffer_.clear(); }

    /// Appends pred (evicting the oldest when full) and returns the mode.
    int push_and_predict(int pred);

private:
    int capacity_;
    std::deque<int> buffer_;
};

/// Elementwise push_and_predict over an ordered prediction stream; the
/// window starts empty and the output has the input's length.
std::vector<int> apply_to_stream(ModeWindow& w, const std::vector<int>& preds);

}  // namespace ircount
