// Microbenchmarks for the hot paths: text parsing/rendering, answer
// canonicalization, rule filtering, voting, threshold selection, and the
// fingerprint hash. These guard against accidental quadratic behavior in the
// parsers and keep the per-record costs visible.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <string>
#include <vector>

#include "selfcorrect/engine.hpp"
#include "selfcorrect/gateway.hpp"
#include "selfcorrect/pipeline.hpp"
#include "selfcorrect/textcodec.hpp"
#include "selfcorrect/types.hpp"

namespace {

using namespace selfcorrect;

Solution make_solution(int steps, long final_value) {
  Solution s;
  s.id = "bench-q/s0";
  s.question_id = "bench-q";
  for (int i = 1; i < steps; ++i)
    s.steps.push_back({i, "Intermediate tally number " + std::to_string(i) +
                              " keeps the running total balanced."});
  s.steps.push_back({steps, "The answer is \\boxed{" + std::to_string(final_value) + "}."});
  s.final_answer = CanonicalAnswer{AnswerKind::number, std::to_string(final_value)};
  return s;
}

Critique make_critique(const Solution& initial, long suggested) {
  Critique c;
  c.solution_ref = initial.id;
  for (std::size_t i = 0; i < initial.steps.size(); ++i) {
    CritiqueEntry entry;
    entry.step = initial.steps[i];
    if (i + 1 < initial.steps.size()) {
      entry.feedback = "This step is correct.";
      entry.verdict = Verdict::endorsed;
    } else {
      entry.feedback = "This step is wrong because the tally is off. The correct step is: The "
                       "answer is \\boxed{" + std::to_string(suggested) + "}.";
      entry.verdict = Verdict::flagged;
    }
    c.entries.push_back(std::move(entry));
  }
  c.suggested_answer = {AnswerKind::number, std::to_string(suggested)};
  return c;
}

void bm_parse_solution(benchmark::State& state) {
  const Solution s = make_solution(static_cast<int>(state.range(0)), 42);
  const std::string text = render_solution_block(s);
  for (auto _ : state) benchmark::DoNotOptimize(parse_solution(text, "bench-q"));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(bm_parse_solution)->Arg(4)->Arg(16)->Arg(64);

void bm_render_critique(benchmark::State& state) {
  const Solution s = make_solution(static_cast<int>(state.range(0)), 41);
  const Critique c = make_critique(s, 42);
  for (auto _ : state) benchmark::DoNotOptimize(render_critique(c, true));
}
BENCHMARK(bm_render_critique)->Arg(4)->Arg(16);

void bm_parse_critique(benchmark::State& state) {
  const Solution s = make_solution(static_cast<int>(state.range(0)), 41);
  const std::string text = render_critique(make_critique(s, 42), true);
  for (auto _ : state) benchmark::DoNotOptimize(parse_critique(text, s));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(bm_parse_critique)->Arg(4)->Arg(16)->Arg(64);

void bm_rule_filter(benchmark::State& state) {
  SolutionPair pair;
  pair.question_id = "bench-q";
  pair.incorrect = make_solution(8, 41);
  pair.correct = make_solution(2, 42);
  pair.correct.id = "bench-q/s1";
  const std::string text = render_critique(make_critique(pair.incorrect, 42), true);
  for (auto _ : state) benchmark::DoNotOptimize(Stage1Pipeline::rule_filter(text, pair));
}
BENCHMARK(bm_rule_filter);

void bm_canonicalize_answer(benchmark::State& state) {
  const std::vector<std::string> inputs = {"42", " 1,234.50 ", "(b)", "E", "7/8", "$3.20"};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(canonicalize_answer(inputs[i]));
    i = (i + 1) % inputs.size();
  }
}
BENCHMARK(bm_canonicalize_answer);

void bm_extract_boxed(benchmark::State& state) {
  const std::string text =
      "First we total the groups, then adjust for the remainder; the answer is "
      "\\boxed{1,234} marbles after the final exchange.";
  for (auto _ : state) benchmark::DoNotOptimize(extract_boxed(text));
}
BENCHMARK(bm_extract_boxed);

void bm_weighted_vote(benchmark::State& state) {
  CandidateSet set;
  set.question_id = "bench-q";
  const int k = static_cast<int>(state.range(0));
  for (int i = 0; i < k; ++i) {
    ScoredCandidate cand;
    cand.solution = make_solution(3, 40 + i % 4);
    cand.solution.id = "bench-q/c" + std::to_string(i);
    cand.p_correct = 0.1 + 0.05 * static_cast<double>(i % 10);
    set.candidates.push_back(std::move(cand));
  }
  for (auto _ : state) benchmark::DoNotOptimize(weighted_vote(set));
}
BENCHMARK(bm_weighted_vote)->Arg(5)->Arg(10);

void bm_select_threshold(benchmark::State& state) {
  std::vector<DevRecord> dev;
  const int n = static_cast<int>(state.range(0));
  std::uint64_t h = kFnvOffset;
  for (int i = 0; i < n; ++i) {
    h = fnv1a64_u64(static_cast<std::uint64_t>(i), h);
    DevRecord r;
    r.p_correct = static_cast<double>(h % 1000) / 999.0;
    r.initial_correct = (h >> 10) % 2 == 0;
    r.refined_correct = (h >> 11) % 3 != 0;
    dev.push_back(r);
  }
  for (auto _ : state) benchmark::DoNotOptimize(select_threshold(dev, "bench-dev"));
}
BENCHMARK(bm_select_threshold)->Arg(64)->Arg(512);

void bm_fingerprint(benchmark::State& state) {
  const std::string payload(static_cast<std::size_t>(state.range(0)), 'x');
  for (auto _ : state) benchmark::DoNotOptimize(fnv1a64(payload));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * payload.size()));
}
BENCHMARK(bm_fingerprint)->Arg(1 << 10)->Arg(1 << 16);

}  // namespace

BENCHMARK_MAIN();
