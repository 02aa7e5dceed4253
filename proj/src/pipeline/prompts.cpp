#include "cfgen/pipeline/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cfgen/core/errors.hpp"

namespace cfgen {

namespace detail {
const std::map<std::string, std::string>& builtin_template_texts();
}  // namespace detail

namespace {

bool is_name_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Calls fn(begin, end, name) for every {name} token in text.
template <typename Fn>
void scan_placeholders(const std::string& text, Fn&& fn) {
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string::npos) {
    std::size_t end = pos + 1;
    while (end < text.size() && is_name_char(text[end])) ++end;
    if (end < text.size() && text[end] == '}' && end > pos + 1) {
      fn(pos, end + 1, text.substr(pos + 1, end - pos - 1));
      pos = end + 1;
    } else {
      ++pos;
    }
  }
}

void check_kind(std::string_view kind) {
  if (std::find(std::begin(kTemplateKinds), std::end(kTemplateKinds), kind) ==
      std::end(kTemplateKinds)) {
    throw ConfigError("prompts: unknown template kind '" + std::string(kind) + "'");
  }
}

std::string python_repr(const std::string& s) {
  const bool single = s.find('\'') != std::string::npos;
  const bool dbl = s.find('"') != std::string::npos;
  const char quote = single && !dbl ? '"' : '\'';
  std::string out(1, quote);
  for (char c : s) {
    if (c == '\\' || c == quote) out.push_back('\\');
    out.push_back(c);
  }
  out.push_back(quote);
  return out;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string kind, std::string text)
    : kind_(std::move(kind)), text_(std::move(text)) {
  check_kind(kind_);
  scan_placeholders(text_, [&](std::size_t, std::size_t, std::string name) {
    if (std::find(placeholders_.begin(), placeholders_.end(), name) == placeholders_.end()) {
      placeholders_.push_back(std::move(name));
    }
  });
}

PromptTemplate PromptTemplate::builtin(std::string_view kind) {
  check_kind(kind);
  return PromptTemplate(std::string(kind), detail::builtin_template_texts().at(std::string(kind)));
}

PromptTemplate PromptTemplate::from_file(std::string kind, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("prompts." + kind + ": cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return PromptTemplate(std::move(kind), buffer.str());
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  out.reserve(text_.size() + 256);
  std::size_t last = 0;
  scan_placeholders(text_, [&](std::size_t begin, std::size_t end, const std::string& name) {
    const auto it = values.find(name);
    if (it == values.end()) {
      throw ConfigError("template '" + kind_ + "': placeholder {" + name + "} left unfilled");
    }
    out.append(text_, last, begin - last);
    out += it->second;
    last = end;
  });
  out.append(text_, last, std::string::npos);
  return out;
}

PromptSet::PromptSet() : PromptSet(std::map<std::string, std::filesystem::path>{}) {}

PromptSet::PromptSet(const std::map<std::string, std::filesystem::path>& overrides) {
  for (std::string_view kind : kTemplateKinds) {
    templates_.emplace(std::string(kind), PromptTemplate::builtin(kind));
  }
  for (const auto& [kind, path] : overrides) {
    check_kind(kind);
    templates_.insert_or_assign(kind, PromptTemplate::from_file(kind, path));
  }
}

const PromptTemplate& PromptSet::get(std::string_view kind) const {
  const auto it = templates_.find(kind);
  if (it == templates_.end()) {
    throw ConfigError("prompts: unknown template kind '" + std::string(kind) + "'");
  }
  return it->second;
}

std::string format_word_list(std::span<const std::string> words) {
  std::string out = "[";
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ", ";
    out += python_repr(words[i]);
  }
  return out + "]";
}

std::string format_demonstrations(std::span<const Demonstration> demonstrations) {
  std::string out;
  for (const auto& demo : demonstrations) {
    out += "[original input] " + demo.original_text + "\n[edit input] " + demo.edited_text + "\n\n";
  }
  return out;
}

std::map<std::string, std::string> label_set_values(const LabelSet& label_set) {
  return {{"dataset", label_set.dataset_name()},
          {"num_labels", std::to_string(label_set.size())},
          {"labels", label_set.joined()}};
}

}  // namespace cfgen
