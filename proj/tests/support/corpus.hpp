#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/automaton.hpp"
#include "core/feature.hpp"

namespace featkit::test {

/// One randomized model/feature pair. Models are small affine automata
/// (<= 3 variables, <= 3 locations on a timed ring, so runs always make
/// progress); features are built against a pilot run so that most of them
/// actually match. The feature arrives as source text and is parsed, which
/// keeps the corpus exercising the frontends too.
struct CorpusItem {
    HybridAutomaton ha;
    std::string feature_text;
    FeatureSpec feature;
    BoundFeature bound;
    double horizon = 3.0;
    double step = 0.01;
    int max_jumps = 16;
};

std::vector<CorpusItem> make_corpus(int count, uint64_t seed);

}  // namespace featkit::test
