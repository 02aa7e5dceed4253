#include "cfgen/attribution/occlusion.hpp"

#include "cfgen/attribution/perturbation.hpp"
#include "cfgen/core/errors.hpp"
#include "cfgen/core/text.hpp"

namespace cfgen {

AttributionResult occlusion_attribute(std::string_view text, std::string_view target_label,
                                      Classifier& classifier) {
  std::vector<std::string> words = normalized_word_tokens(text);
  const std::size_t d = words.size();
  if (d == 0) throw ConfigError("occlusion needs at least one word");

  std::vector<PerturbationMask> masks;
  masks.reserve(d + 1);
  masks.push_back(PerturbationMask::all(d, true));
  for (std::size_t i = 0; i < d; ++i) {
    PerturbationMask mask = PerturbationMask::all(d, true);
    mask.bits[i] = false;
    masks.push_back(std::move(mask));
  }
  const auto p = target_probabilities(classifier, words, target_label, masks);
  std::vector<double> scores(d);
  for (std::size_t i = 0; i < d; ++i) scores[i] = p[0] - p[i + 1];
  return word_level_result(AttributionMethod::kOcclusion, std::move(words), std::move(scores),
                           target_label);
}

}  // namespace cfgen
