#include "cfgen/eval/judge.hpp"

#include <cctype>

#include "cfgen/core/errors.hpp"

namespace cfgen {

std::string_view to_string(JudgeVerdict verdict) {
  switch (verdict) {
    case JudgeVerdict::kYes:
      return "yes";
    case JudgeVerdict::kNo:
      return "no";
    case JudgeVerdict::kError:
      return "error";
  }
  return "error";
}

JudgeVerdict parse_judge_verdict(std::string_view name) {
  if (name == "yes") return JudgeVerdict::kYes;
  if (name == "no") return JudgeVerdict::kNo;
  if (name == "error") return JudgeVerdict::kError;
  throw ConfigError("unknown judge verdict '" + std::string(name) + "'");
}

JudgeVerdict parse_judge_answer(std::string_view answer) {
  std::string normalized;
  for (char c : answer) {
    const auto u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    normalized.push_back(static_cast<char>(std::tolower(u)));
  }
  const auto begin = normalized.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return JudgeVerdict::kError;
  const auto end = normalized.find_last_not_of(" \t\r\n");
  const std::string_view core = std::string_view(normalized).substr(begin, end - begin + 1);
  if (core == "yes") return JudgeVerdict::kYes;
  if (core == "no") return JudgeVerdict::kNo;
  return JudgeVerdict::kError;
}

JudgeVerdict judge_flip(std::string_view original, std::string_view counterfactual,
                        Generator& generator, const LabelSet& label_set,
                        const PromptTemplate& judge_template) {
  auto values = label_set_values(label_set);
  values["instance"] = std::string(original);
  values["counterfactual"] = std::string(counterfactual);
  const std::string prompt = judge_template.render(values);
  try {
    return parse_judge_answer(generator.generate(prompt));
  } catch (const CacheMissError&) {
    throw;
  } catch (const Error& error) {
    switch (error.category()) {
      case Error::Category::kTransport:
      case Error::Category::kProtocol:
      case Error::Category::kGeneration:
        return JudgeVerdict::kError;
      default:
        throw;
    }
  }
}

SlfrResult slfr(std::span<const JudgeVerdict> verdicts) {
  if (verdicts.empty()) throw MetricError("SLFR needs at least one verdict");
  SlfrResult out;
  out.n = verdicts.size();
  for (JudgeVerdict v : verdicts) {
    if (v == JudgeVerdict::kYes) ++out.yes;
    if (v == JudgeVerdict::kNo) ++out.no;
    if (v == JudgeVerdict::kError) ++out.errors;
  }
  const auto n = static_cast<double>(out.n);
  out.slfr = static_cast<double>(out.yes) / n;
  out.non_flip_rate = static_cast<double>(out.no) / n;
  out.judge_error_rate = static_cast<double>(out.errors) / n;
  return out;
}

}  // namespace cfgen
