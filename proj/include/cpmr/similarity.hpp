#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cpmr/model.hpp"

namespace cpmr {

/// Dice coefficient over character-bigram multisets (UTF-8 code points).
/// Texts too short to have bigrams score 1.0 when equal and 0.0 otherwise.
double dice(std::string_view a, std::string_view b);

/// One string per graph node ("kind:label-or-id") and per edge
/// ("src -> dst [condition]"), followed by the element lists of subprocess
/// bodies, each prefixed with "<subprocess label>/".
std::vector<std::string> element_strings(const ProcessModel& model);

/// Symmetrised element-based similarity in [0, 1]. Every element is matched
/// greedily to its best counterpart by dice score and weighted by the
/// harmonic mean of the two element lengths.
double similarity(const ProcessModel& a, const ProcessModel& b);

/// Threshold-1 equality: true iff similarity is exactly 1.
bool models_equal(const ProcessModel& a, const ProcessModel& b);

}  // namespace cpmr
