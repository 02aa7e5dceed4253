// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any
// gating check fails. The live smoke check runs only when CFGEN_LIVE_CONFIG
// names a config with real endpoints, and never affects the exit code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cfgen/attribution/kernel_shap.hpp"
#include "cfgen/attribution/lime.hpp"
#include "cfgen/cli/cli.hpp"
#include "cfgen/demo/kmeans.hpp"
#include "cfgen/eval/metrics.hpp"
#include "cfgen/faithfulness/kendall.hpp"
#include "cfgen/gateway/mock_world.hpp"
#include "cfgen/pipeline/demonstrations.hpp"
#include "cfgen/pipeline/experiment.hpp"
#include "cfgen/pipeline/generate.hpp"
#include "support/stubs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cfgen;
using cfgen::testing::CountingAttributor;
using cfgen::testing::FnClassifier;
using cfgen::testing::ScriptedGenerator;
using cfgen::testing::TableEmbedder;
using cfgen::testing::UniformScorer;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) {
      pass = false;
      detail = why;
    }
  }
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Verdict()> check;
};

const LabelSet kBinary({"pos", "neg"}, "synthetic");

std::string synthetic_text(std::size_t n) {
  std::string text;
  for (std::size_t i = 0; i < n; ++i) text += (i ? " w" : "w") + std::to_string(i);
  return text;
}

std::uint64_t present_pattern(std::string_view text) {
  std::uint64_t pattern = 0;
  for (const auto& w : normalized_word_tokens(text)) pattern |= std::uint64_t{1} << std::stoul(w.substr(1));
  return pattern;
}

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

// Shapley values from the subset-weighted formula over all 2^n coalitions.
std::vector<double> shapley_by_subsets(const std::vector<double>& v, std::size_t n) {
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(s));
      const double w = factorial(size) * factorial(n - size - 1) / factorial(n);
      phi[i] += w * (v[s | bit] - v[s]);
    }
  }
  return phi;
}

Verdict shapley_exactness() {
  Verdict v;
  std::mt19937_64 gen(31337);
  std::uniform_real_distribution<double> unif(0.02, 0.98);
  std::uniform_int_distribution<std::size_t> size(1, 8);
  double worst = 0.0;
  for (int box = 0; box < 50; ++box) {
    const std::size_t n = size(gen);
    std::vector<double> table(std::size_t{1} << n);
    for (auto& x : table) x = unif(gen);
    FnClassifier clf(kBinary, [&table](std::string_view text) {
      const double p = table[present_pattern(text)];
      return std::vector<double>{p, 1.0 - p};
    });
    const auto attr = kernel_shap_attribute(synthetic_text(n), "pos", clf, ShapOptions{}, 0);
    const auto oracle = shapley_by_subsets(table, n);
    v.require(attr.scores.size() == n, "box " + std::to_string(box) + ": wrong score count");
    if (!v.pass) return v;
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(attr.scores[i] - oracle[i]));
  }
  std::ostringstream d;
  d << "50 boxes, max deviation " << worst;
  v.require(worst <= 1e-6, d.str());
  if (v.pass) v.detail = d.str();
  return v;
}

// Exhaustive masks make the design full rank, so the fit is checked as plain
// weighted least squares; the default-ridge error is reported alongside.
Verdict lime_recovery() {
  Verdict v;
  std::mt19937_64 gen(4242);
  LimeOptions plain;
  plain.ridge = 0.0;
  double worst = 0.0, worst_default_ridge = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial) % 8;
    std::uniform_real_distribution<double> coef(-0.45 / static_cast<double>(n), 0.45 / static_cast<double>(n));
    std::vector<double> c(n);
    for (auto& x : c) x = coef(gen);
    FnClassifier clf(kBinary, [&](std::string_view text) {
      const auto pattern = present_pattern(text);
      double p = 0.5;
      for (std::size_t i = 0; i < n; ++i) p += (pattern >> i & 1) ? c[i] : 0.0;
      return std::vector<double>{p, 1.0 - p};
    });
    const auto fit = lime_explain(synthetic_text(n), "pos", clf, plain, 0, true);
    const auto ridged = lime_explain(synthetic_text(n), "pos", clf, LimeOptions{}, 0, true);
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(fit.attribution.scores[i] - c[i]));
      worst_default_ridge = std::max(worst_default_ridge, std::abs(ridged.attribution.scores[i] - c[i]));
    }
  }
  v.require(worst <= 1e-3, "max coefficient error " + std::to_string(worst));
  if (v.pass) {
    std::ostringstream d;
    d << "20 cases, max coefficient error " << worst << " (default ridge: " << worst_default_ridge << ")";
    v.detail = d.str();
  }
  return v;
}

std::size_t edit_distance_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[a.size()][b.size()];
}

Verdict levenshtein_oracle() {
  Verdict v;
  static const std::vector<std::string> vocab{"a", "b", "c", "the", "cat", "dog", "ran", "sat", "on", "mat"};
  std::mt19937_64 gen(99991);
  std::uniform_int_distribution<std::size_t> len(0, 30), pick(0, vocab.size() - 1);
  auto sample = [&] {
    std::vector<std::string> s(len(gen));
    for (auto& w : s) w = vocab[pick(gen)];
    return s;
  };
  for (int i = 0; i < 1000 && v.pass; ++i) {
    const auto a = sample(), b = sample(), c = sample();
    const auto ab = levenshtein(a, b);
    v.require(ab == edit_distance_oracle(a, b), "oracle mismatch on pair " + std::to_string(i));
    v.require(ab == levenshtein(b, a), "asymmetric on pair " + std::to_string(i));
    v.require(levenshtein(a, c) <= ab + levenshtein(b, c), "triangle violated on pair " + std::to_string(i));
  }
  if (v.pass) v.detail = "1000 pairs";
  return v;
}

std::optional<double> tau_by_pair_count(const std::vector<double>& a, const std::vector<double>& b) {
  long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0, pairs = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      ++pairs;
      const int sa = (a[i] > a[j]) - (a[i] < a[j]);
      const int sb = (b[i] > b[j]) - (b[i] < b[j]);
      ties_a += sa == 0;
      ties_b += sb == 0;
      if (sa * sb > 0) ++concordant;
      if (sa * sb < 0) ++discordant;
    }
  }
  const double denom = std::sqrt(static_cast<double>(pairs - ties_a) * static_cast<double>(pairs - ties_b));
  if (denom == 0.0) return std::nullopt;
  return static_cast<double>(concordant - discordant) / denom;
}

Verdict kendall_oracle() {
  Verdict v;
  long compared = 0;
  for (std::size_t n = 1; n <= 6 && v.pass; ++n) {
    std::vector<double> base(n);
    std::iota(base.begin(), base.end(), 1.0);
    std::vector<std::vector<double>> perms;
    do perms.push_back(base);
    while (std::next_permutation(base.begin(), base.end()));
    for (const auto& x : perms) {
      for (const auto& y : perms) {
        const auto expected = tau_by_pair_count(x, y);
        if (!expected) continue;  // n = 1: no pairs
        v.require(std::abs(kendall_tau(x, y) - *expected) <= 1e-12, "permutation mismatch at n=" + std::to_string(n));
        ++compared;
      }
    }
  }
  std::mt19937_64 gen(777);
  std::uniform_int_distribution<int> len(2, 30), level(0, 4);
  int tied = 0;
  while (tied < 1000 && v.pass) {
    const auto n = static_cast<std::size_t>(len(gen));
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = level(gen);
    for (auto& x : b) x = level(gen);
    const auto expected = tau_by_pair_count(a, b);
    if (!expected) continue;
    v.require(std::abs(kendall_tau(a, b) - *expected) <= 1e-12, "tied case " + std::to_string(tied));
    ++tied;
  }
  if (v.pass) v.detail = std::to_string(compared) + " permutation pairs, 1000 tied cases";
  return v;
}

// Exact equality is checked for the 4-token uniform stub. For other sizes the
// stub's ln(1/V) is already rounded, so the check is that nothing beyond
// exp(ln V) itself is lost.
Verdict ppl_closed_form() {
  Verdict v;
  const std::vector<TokenLogprob> tokens{{"<s>", std::nullopt}, {"x", -1.0}, {"y", -2.0}};
  const double ppl = perplexity(tokens);
  v.require(std::abs(ppl - std::exp(1.5)) <= 1e-9, "two-token ppl " + std::to_string(ppl));
  UniformScorer four(-std::log(4.0));
  for (const char* text : {"one two", "one two three", "one two three four five six seven"}) {
    const double got = perplexity(text, four);
    v.require(got == 4.0, "uniform V=4 gave " + std::to_string(got));
  }
  int exact = 0;
  for (int vocab = 2; vocab <= 1024; ++vocab) {
    const double size = static_cast<double>(vocab);
    UniformScorer scorer(-std::log(size));
    const double got = perplexity("one two three four five six", scorer);
    v.require(got == std::exp(std::log(size)), "uniform V=" + std::to_string(vocab) + " lost precision");
    exact += got == size;
  }
  if (v.pass) v.detail = "e^1.5; V=4 exact; " + std::to_string(exact) + "/1023 sizes round-trip ln V exactly";
  return v;
}

// Sentiment stand-ins: "bad" means negative; the editor swaps good and bad.
const LabelSet kSentiment({"negative", "positive"}, "SST-2");

std::vector<double> keyword_sentiment(std::string_view text) {
  for (const auto& w : normalized_word_tokens(text)) {
    if (fold_case(w) == "bad") return {0.9, 0.1};
  }
  return {0.2, 0.8};
}

std::string swap_word(const std::string& text, const std::string& from, const std::string& to) {
  return std::regex_replace(text, std::regex("\\b" + from + "\\b"), to);
}

std::string editor(std::string_view prompt) {
  if (prompt.find("Answer 'yes' or 'no' only!") != std::string_view::npos) return "yes";
  const std::string q = cfgen::testing::query_of(prompt);
  if (q.find("good") != std::string::npos) return swap_word(q, "good", "bad");
  if (q.find("bad") != std::string::npos) return swap_word(q, "bad", "good");
  return q;
}

struct Stubs {
  RunConfig config;
  PromptSet prompts;
  FnClassifier classifier{kSentiment, keyword_sentiment};
  ScriptedGenerator generator{editor};
  UniformScorer scorer{-std::log(4.0)};
  CountingAttributor attributor;
  std::unique_ptr<TableEmbedder> embedder;
  std::vector<Instance> dataset{
      {"s1", "a good film", std::nullopt},        {"s2", "good acting here", std::nullopt},
      {"s3", "the plot was bad", std::nullopt},   {"s4", "bad sound design", std::nullopt},
      {"s5", "plain story", std::nullopt},        {"s6", "good good cast", std::nullopt},
      {"s7", "bad pacing throughout", std::nullopt}, {"s8", "a good ending", std::nullopt},
  };

  Stubs() {
    config.label_set = kSentiment;
    config.method = GenerationMethod::kFitCF;
    config.attribution_method = AttributionMethod::kGradient;
    config.num_important_words = 2;
    config.num_clusters = 2;
    config.demos_per_instance = 2;
    config.flip_verification = true;
    config.workers = 1;
    config.seed = 11;
    std::map<std::string, std::vector<double>> table;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const double side = dataset[i].text.find("bad") != std::string::npos ? 4.0 : 0.0;
      table[dataset[i].text] = {side + 0.1 * static_cast<double>(i), 1.0};
    }
    embedder = std::make_unique<TableEmbedder>(table);
  }

  PipelineContext ctx(const RunConfig& c) {
    return PipelineContext{c, ModelSet{&classifier, &generator, embedder.get(), &scorer, &attributor}, prompts};
  }
};

Verdict demonstration_validity() {
  Verdict v;
  Stubs stubs;
  const auto pool = build_demonstration_pool(stubs.dataset, stubs.ctx(stubs.config), 6);
  v.require(!pool.demonstrations.empty(), "no demonstrations built");
  FnClassifier checker(kSentiment, keyword_sentiment);
  std::size_t accepted = 0;
  for (const auto& demo : pool.demonstrations) {
    if (verify_flip(demo.original_text, demo.edited_text, checker) == FlipVerdict::kAccepted) ++accepted;
  }
  v.require(accepted == pool.demonstrations.size(),
            std::to_string(accepted) + "/" + std::to_string(pool.demonstrations.size()) + " accepted");
  if (v.pass) v.detail = std::to_string(accepted) + "/" + std::to_string(pool.demonstrations.size()) + " accepted";
  return v;
}

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("p" + std::to_string(i));
  return out;
}

Verdict kmeans_checks() {
  Verdict v;
  const std::vector<std::vector<double>> line{{0.0}, {1.0}, {10.0}, {11.0}};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = kmeans(ids(4), line, 2, seed, 100);
    std::multiset<double> got{c.centroids[0][0], c.centroids[1][0]};
    v.require(got == std::multiset<double>{0.5, 10.5}, "1-D case wrong centroids at seed " + std::to_string(seed));
  }
  std::mt19937_64 gen(2718);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  int runs = 0;
  for (int run = 0; run < 100 && v.pass; ++run) {
    const std::size_t n = 6 + static_cast<std::size_t>(run) % 40;
    const std::size_t dim = 1 + static_cast<std::size_t>(run) % 6;
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts)
      for (auto& x : p) x = unif(gen);
    const int k = 1 + run % 6;
    const auto c = kmeans(ids(n), pts, k, static_cast<std::uint64_t>(run), 300);
    for (std::size_t t = 1; t < c.inertia_trace.size(); ++t) {
      v.require(c.inertia_trace[t] <= c.inertia_trace[t - 1], "inertia rose in run " + std::to_string(run));
    }
    ++runs;
  }
  if (v.pass) v.detail = "{0.5, 10.5} over 20 seeds, " + std::to_string(runs) + " monotone traces";
  return v;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing " + path.string() + ">";
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CountingMock final : public Transport {
 public:
  HttpResponse send(const HttpRequest& request) override {
    ++calls;
    return inner_->send(request);
  }
  std::atomic<int> calls{0};

 private:
  std::unique_ptr<Transport> inner_ = make_mock_transport();
};

int invoke(std::vector<std::string> args, std::shared_ptr<Transport> transport, std::string& err_text) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err, std::move(transport)).exit_code;
  err_text = err.str();
  return code;
}

struct Scratch {
  fs::path root;
  explicit Scratch(const std::string& tag) : root(fs::temp_directory_path() / ("cfgen_accept_" + tag)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
};

const fs::path kGolden = CFGEN_GOLDEN_DIR;
const std::string kToyConfig = (fs::path(CFGEN_TEST_DATA_DIR) / "toy_config.json").string();

// Runs `run` and `ablate` for the toy corpus; returns the three artifacts.
struct Artifacts {
  std::string records, report, table;
};

Artifacts toy_artifacts(const fs::path& out, const fs::path& cache, bool offline,
                        std::shared_ptr<Transport> transport, Verdict& v) {
  std::string err;
  std::vector<std::string> run{"run", "--config", kToyConfig, "--cache-dir", cache.string(), "--run-dir",
                               (out / "run").string()};
  std::vector<std::string> ablate{"ablate", "--config", kToyConfig, "--cache-dir", cache.string(), "--run-dir",
                                  (out / "ablation").string()};
  if (offline) {
    run.push_back("--offline");
    ablate.push_back("--offline");
  }
  v.require(invoke(run, transport, err) == 0, "run failed: " + err);
  v.require(invoke(ablate, transport, err) == 0, "ablate failed: " + err);
  return {slurp(out / "run" / "records.jsonl"), slurp(out / "run" / "report.json"),
          slurp(out / "ablation" / "ablation_table.csv")};
}

Verdict end_to_end_determinism() {
  Verdict v;
  Scratch scratch("e2e");
  const fs::path cache = scratch.root / "cache";
  auto cold = std::make_shared<CountingMock>();
  const auto first = toy_artifacts(scratch.root / "cold", cache, false, cold, v);
  v.require(first.records == slurp(kGolden / "records.jsonl"), "records.jsonl differs from golden");
  v.require(first.report == slurp(kGolden / "report.json"), "report.json differs from golden");
  v.require(first.table == slurp(kGolden / "ablation_table.csv"), "ablation_table.csv differs from golden");

  auto warm = std::make_shared<CountingMock>();
  const auto second = toy_artifacts(scratch.root / "warm1", cache, true, warm, v);
  const auto third = toy_artifacts(scratch.root / "warm2", cache, true, warm, v);
  v.require(second.records == third.records && second.report == third.report && second.table == third.table,
            "warm runs differ");
  v.require(second.records == first.records && second.report == first.report && second.table == first.table,
            "warm run differs from cold run");
  v.require(warm->calls.load() == 0, std::to_string(warm->calls.load()) + " network calls on warm runs");
  if (v.pass) {
    v.detail = "goldens match, " + std::to_string(cold->calls.load()) + " cold calls, 0 warm calls";
  }
  return v;
}

Verdict ablation_wiring() {
  Verdict v;
  const auto table = slurp(kGolden / "ablation_table.csv");
  std::vector<std::string> lines;
  std::istringstream in(table);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  v.require(lines.size() == 9, "expected header + 8 rows, got " + std::to_string(lines.size()) + " lines");
  if (!v.pass) return v;
  // Delta columns of the first data row: delta_slfr, delta_ppl, delta_ts.
  std::vector<std::string> cells;
  std::istringstream row(lines[1]);
  for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
  v.require(cells.size() == 11, "malformed first row");
  if (!v.pass) return v;
  for (std::size_t col : {5u, 7u, 9u}) {
    v.require(cells[col] == "+0.000000", "self-delta column " + std::to_string(col) + " is " + cells[col]);
  }

  Stubs stubs;
  stubs.config.evaluate = false;
  const auto grid = ablation_grid(stubs.config);
  v.require(grid.size() == 8, "grid has " + std::to_string(grid.size()) + " cells");
  int words_off = 0;
  for (const auto& cell : grid) {
    stubs.attributor.calls = 0;
    run_experiment(stubs.dataset, stubs.ctx(cell.config));
    const int calls = stubs.attributor.calls.load();
    if (cell.config.include_important_words) {
      v.require(calls > 0, cell.name + ": attributor never called");
    } else {
      ++words_off;
      v.require(calls == 0, cell.name + ": " + std::to_string(calls) + " attributor calls");
    }
  }
  v.require(words_off == 4, "expected 4 word-free cells");
  if (v.pass) v.detail = "8 cells, zero self-delta, 0 attributor calls in 4 word-free cells";
  return v;
}

// FitCF should flip at least as often as ZeroCF on real endpoints.
void live_smoke() {
  const char* config = std::getenv("CFGEN_LIVE_CONFIG");
  if (!config || !*config) {
    std::cout << "SKIP live_smoke (set CFGEN_LIVE_CONFIG to run; non-gating)\n";
    return;
  }
  Scratch scratch("live");
  std::map<std::string, double> slfr;
  for (const std::string method : {"zerocf", "fitcf"}) {
    std::string err;
    const int code = invoke({"run", "--config", config, "--set", "method=" + method, "--cache-dir",
                             (scratch.root / "cache").string(), "--run-dir", (scratch.root / method).string()},
                            nullptr, err);
    if (code != 0) {
      std::cout << "FAIL live_smoke (non-gating): " << method << " exited " << code << ": " << err;
      return;
    }
    slfr[method] = json::parse(slurp(scratch.root / method / "report.json")).at("evaluation").at("slfr").get<double>();
  }
  const bool ok = slfr["fitcf"] >= slfr["zerocf"];
  std::cout << (ok ? "PASS" : "FAIL") << " live_smoke (non-gating): fitcf slfr " << slfr["fitcf"]
            << " vs zerocf " << slfr["zerocf"] << '\n';
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"shapley_exactness", 10.0, shapley_exactness},
      {"lime_recovery", 5.0, lime_recovery},
      {"levenshtein_oracle", 5.0, levenshtein_oracle},
      {"kendall_tau_b", 10.0, kendall_oracle},
      {"ppl_closed_form", 5.0, ppl_closed_form},
      {"demonstration_validity", 10.0, demonstration_validity},
      {"kmeans", 10.0, kmeans_checks},
      {"end_to_end_determinism", 60.0, end_to_end_determinism},
      {"ablation_wiring", 10.0, ablation_wiring},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (v.pass && seconds > c.budget_seconds) {
      v.pass = false;
      v.detail = "over the " + std::to_string(c.budget_seconds) + " s budget";
    }
    if (!v.pass) ++failures;
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(3);
    line << (v.pass ? "PASS " : "FAIL ") << c.name << " (" << seconds << " s): " << v.detail << '\n';
    std::cout << line.str() << std::flush;
  }
  live_smoke();
  std::cout << (failures == 0 ? "all gating criteria passed" : std::to_string(failures) + " gating criteria failed")
            << '\n';
  return failures == 0 ? 0 : 1;
}
