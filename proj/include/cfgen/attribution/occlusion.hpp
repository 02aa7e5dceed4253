#pragma once

#include <string_view>

#include "cfgen/core/models.hpp"

namespace cfgen {

// Leave-one-out: score i = p(target | text) - p(target | text without word i).
AttributionResult occlusion_attribute(std::string_view text, std::string_view target_label,
                                      Classifier& classifier);

}  // namespace cfgen
