#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfgen/core/types.hpp"

namespace cfgen {

// Template kinds shipped with the engine.
inline constexpr std::string_view kTemplateKinds[] = {"zerocf", "fitcf", "fizle_words",
                                                      "fizle_edit", "flip_judge"};

// Text with {name} placeholders. Rendering substitutes values verbatim and
// throws ConfigError if any placeholder is left unfilled.
class PromptTemplate {
 public:
  PromptTemplate(std::string kind, std::string text);

  static PromptTemplate builtin(std::string_view kind);
  static PromptTemplate from_file(std::string kind, const std::filesystem::path& path);

  const std::string& kind() const { return kind_; }
  const std::string& text() const { return text_; }
  // Placeholder names in order of first appearance.
  const std::vector<std::string>& placeholders() const { return placeholders_; }

  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  std::string kind_;
  std::string text_;
  std::vector<std::string> placeholders_;
};

// One template per kind: built-ins, replaced by any configured override file.
class PromptSet {
 public:
  PromptSet();
  explicit PromptSet(const std::map<std::string, std::filesystem::path>& overrides);

  const PromptTemplate& get(std::string_view kind) const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// Python-style list literal: ['a', 'b'] and [] when empty.
std::string format_word_list(std::span<const std::string> words);

// "[original input] X\n[edit input] Y\n\n" per pair.
std::string format_demonstrations(std::span<const Demonstration> demonstrations);

// Shared header values: dataset, num_labels, labels.
std::map<std::string, std::string> label_set_values(const LabelSet& label_set);

}  // namespace cfgen
