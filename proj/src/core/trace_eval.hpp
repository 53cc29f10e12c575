#pragma once

#include "feature.hpp"
#include "trace.hpp"

namespace featkit {

struct FeatureEval {
    std::vector<double> values;  // one per completed match
    bool truncated = false;      // the enumeration cap was hit
};

/// Replays a bound feature over a trace: walks the samples matching stages
/// under their dense-time delay windows, with rising-edge events located by
/// bracketing bisection between samples. Guard-only stages may advance at
/// any qualifying sample inside their window (all such choices are
/// enumerated); a location-entry event advances at every qualifying entry; a
/// numeric rising edge advances at the first rise after the previous stage
/// (the attempt dies if the window or guard fails there). Sampling must be
/// at least as dense as the producing simulation step.
FeatureEval feature_values_on_trace(const Trace& tr, const BoundFeature& f,
                                    size_t max_matches = 10000);

}  // namespace featkit
