#include "cfgen/core/models.hpp"

namespace cfgen {

std::vector<Prediction> Classifier::classify_batch(std::span<const std::string> texts) {
  std::vector<Prediction> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(classify(text));
  return out;
}

}  // namespace cfgen
