#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace memsteer::lm {

enum class HookMode { capture, inject };

// Which residual-stream positions a hook touches. `assistant_span` uses the
// [span_begin, span_end) range; during generation the span is extended to
// cover emitted tokens.
enum class HookPositions { all, assistant_span, last_token };

struct HookSpec {
    int layer = 1;  // 1-based block index; the hook point is the block's residual output
    HookMode mode = HookMode::capture;
    HookPositions positions = HookPositions::all;
    size_t span_begin = 0;
    size_t span_end = 0;
    std::vector<double> inject_vector;
    double inject_scale = 0.0;
};

struct ActivationRecord {
    std::string sample_id;
    int layer = 0;
    std::vector<std::pair<size_t, std::vector<double>>> per_position;  // strictly increasing
    std::optional<std::vector<double>> pooled;
};

}  // namespace memsteer::lm
