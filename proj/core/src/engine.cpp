#include "selfcorrect/engine.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "selfcorrect/rng.hpp"
#include "selfcorrect/textcodec.hpp"

namespace selfcorrect {

Threshold select_threshold(const std::vector<DevRecord>& dev_records, const std::string& dev_id) {
  if (dev_records.empty()) throw EmptyDevSet("threshold selection needs a non-empty dev set");

  std::vector<double> grid{0.0, 1.0};
  grid.reserve(dev_records.size() + 2);
  for (const DevRecord& r : dev_records) grid.push_back(1.0 - r.p_correct);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  long best_correct = -1;
  double best_value = 0.0;
  for (const double t : grid) {  // ascending, so >= keeps the highest tie
    long correct = 0;
    for (const DevRecord& r : dev_records)
      correct += (decide_refine(r.p_correct, t) ? r.refined_correct : r.initial_correct) ? 1 : 0;
    if (correct >= best_correct) {
      best_correct = correct;
      best_value = t;
    }
  }

  Threshold out;
  out.value = best_value;
  out.selected_on = dev_id;
  out.dev_accuracy_at_value =
      100.0 * static_cast<double>(best_correct) / static_cast<double>(dev_records.size());
  return out;
}

namespace {

// Buckets accumulate in candidate order so the float sums are reproducible.
struct VoteBuckets {
  std::vector<std::pair<CanonicalAnswer, double>> sums;

  void add(const CanonicalAnswer& answer, double weight) {
    for (auto& [key, sum] : sums) {
      if (key == answer) {
        sum += weight;
        return;
      }
    }
    sums.emplace_back(answer, weight);
  }

  CanonicalAnswer winner() const {
    if (sums.empty()) throw NoValidAnswer("no candidate produced a parseable final answer");
    std::size_t best = 0;
    for (std::size_t i = 1; i < sums.size(); ++i)
      if (sums[i].second > sums[best].second) best = i;  // strict: earliest wins ties
    return sums[best].first;
  }
};

void check_weight(double p) {
  if (!std::isfinite(p) || p < 0.0)
    throw std::invalid_argument("candidate probabilities must be finite and non-negative");
}

}  // namespace

CanonicalAnswer weighted_vote(const CandidateSet& set) {
  if (set.candidates.empty()) throw std::invalid_argument("candidate set must not be empty");
  VoteBuckets buckets;
  for (const ScoredCandidate& c : set.candidates) {
    check_weight(c.p_correct);
    if (c.solution.final_answer.has_value()) buckets.add(*c.solution.final_answer, c.p_correct);
  }
  return buckets.winner();
}

CorrectionEngine::CorrectionEngine(LmGateway* refiner, LmGateway* verifier,
                                   TemplateLibrary templates, EngineConfig config)
    : refiner_(refiner),
      verifier_(verifier),
      templates_(std::move(templates)),
      config_(std::move(config)) {
  if (config_.threshold < 0.0 || config_.threshold > 1.0)
    throw std::invalid_argument("threshold must lie in [0, 1]");
  if (config_.refiner_kind == RefinerKind::model && refiner_ == nullptr)
    throw std::invalid_argument("model refiner requires a refiner gateway");
  if (config_.verifier_kind != VerifierKind::oracle && verifier_ == nullptr)
    throw std::invalid_argument("non-oracle verifier requires a verifier gateway");
}

double CorrectionEngine::score_probability(const Question& question, const Solution& solution,
                                           double* latency_ms) {
  if (config_.verifier_kind == VerifierKind::oracle) {
    if (latency_ms != nullptr) *latency_ms = 0.0;
    const Solution graded = grade(solution, question);
    return graded.is_correct() ? 1.0 : 0.0;
  }
  // Scored verifiers see the same single-newline layout they were trained on;
  // the prompted adapter fills a few-shot template, which lays steps out as
  // blank-line blocks like its exemplars.
  const std::string question_text = render_question_block(question);
  const std::string solution_text = config_.verifier_kind == VerifierKind::prompted
                                        ? render_solution_block(solution)
                                        : render_solution(solution);
  const ScoreResult r = verifier_->score_correctness(question_text, solution_text);
  if (latency_ms != nullptr) *latency_ms = r.latency_ms;
  return r.p_correct;
}

CorrectionEngine::Judged CorrectionEngine::judge_internal(const Question& question,
                                                          const Solution& solution) {
  Judged out;
  const double p = score_probability(question, solution, &out.latency_ms);
  out.judgment.solution_ref = solution.id;
  out.judgment.p_correct = p;
  out.judgment.decision = decide_refine(p, config_.threshold) ? Decision::refine : Decision::keep;
  out.judgment.verifier_kind = config_.verifier_kind;
  return out;
}

VerifierJudgment CorrectionEngine::judge(const Question& question, const Solution& solution) {
  return judge_internal(question, solution).judgment;
}

CorrectionEngine::Refined CorrectionEngine::refine_model(const Question& question,
                                                         const Solution& initial) {
  const std::string prompt = refiner_input(question, initial);
  GenParams greedy;
  greedy.max_new_tokens = config_.max_new_tokens;
  const std::vector<Completion> completions = refiner_->generate(prompt, greedy);
  const Completion& c = completions.front();

  Refined out;
  out.latency_ms = c.latency_ms;
  try {
    const RefinerSplit split = split_refiner_output(c.text);
    Solution revised = parse_solution(split.solution_text, question.id);
    revised.id = initial.id + "/refined";
    revised.provenance = Provenance::refined;
    revised = grade(std::move(revised), question);
    out.refinement = Refinement{split.critique_text, std::move(revised)};
    return out;
  } catch (const UnsplittableOutput&) {
  } catch (const MalformedSolution&) {
  }
  // Keep the attempt on record but leave the answer untouched.
  out.refinement = Refinement{strip_after_terminator(c.text), initial};
  out.fell_back = true;
  return out;
}

CorrectionEngine::Refined CorrectionEngine::refine_two_pass(const Question& question,
                                                            const Solution& initial) {
  const std::string critique_prompt = refiner_input(question, initial);
  GenParams greedy;
  greedy.max_new_tokens = config_.max_new_tokens;
  const std::vector<Completion> first = refiner_->generate(critique_prompt, greedy);
  const Completion& c1 = first.front();

  // The first pass may run on into a solution; keep only the critique part.
  std::string critique_text;
  try {
    critique_text = split_refiner_output(c1.text).critique_text;
  } catch (const UnsplittableOutput&) {
    critique_text = strip_after_terminator(c1.text);
    while (!critique_text.empty() &&
           (critique_text.back() == '\n' || critique_text.back() == ' '))
      critique_text.pop_back();
  }

  Refined out;
  out.latency_ms = c1.latency_ms;

  Critique parsed;
  try {
    parsed = parse_critique(critique_text, initial);
  } catch (const CritiqueParseError&) {
    out.refinement = Refinement{critique_text, initial};
    out.fell_back = true;
    return out;
  }

  const TemplateSet& tmpl = templates_.for_kind(question.task_kind);
  const std::string correction_prompt = build_correction_prompt(tmpl.correction, question, parsed);
  const std::vector<Completion> second = refiner_->generate(correction_prompt, greedy);
  const Completion& c2 = second.front();
  out.latency_ms += c2.latency_ms;

  try {
    Solution revised = parse_solution(c2.text, question.id);
    revised.id = initial.id + "/refined";
    revised.provenance = Provenance::refined;
    revised = grade(std::move(revised), question);
    out.refinement = Refinement{critique_text, std::move(revised)};
  } catch (const MalformedSolution&) {
    out.refinement = Refinement{critique_text, initial};
    out.fell_back = true;
  }
  return out;
}

CorrectionEngine::Refined CorrectionEngine::refine_random(const Question& question,
                                                          const Solution& initial) {
  if (question.task_kind != TaskKind::multiple_choice)
    throw RandomBaselineOnNumeric("random-choice refinement needs answer options; " + question.id +
                                  " is numeric");

  std::vector<const ChoiceOption*> eligible;
  for (const ChoiceOption& opt : question.options) {
    const bool same = initial.final_answer.has_value() &&
                      initial.final_answer->kind == AnswerKind::choice_label &&
                      initial.final_answer->value == opt.label;
    if (!same) eligible.push_back(&opt);
  }
  if (eligible.empty())
    for (const ChoiceOption& opt : question.options) eligible.push_back(&opt);

  std::mt19937_64 rng(fnv1a64_u64(config_.random_seed, fnv1a64(question.id)));
  const ChoiceOption& pick = *eligible[static_cast<std::size_t>(
      draw_bounded(rng, eligible.size()))];

  Solution revised;
  revised.id = initial.id + "/refined";
  revised.question_id = question.id;
  revised.steps = {Step{1, "The answer is \\boxed{" + pick.label + "}."}};
  revised.raw_text = "Step 1: The answer is \\boxed{" + pick.label + "}.";
  revised.final_answer = CanonicalAnswer{AnswerKind::choice_label, pick.label};
  revised.provenance = Provenance::refined;
  revised = grade(std::move(revised), question);

  Refined out;
  out.refinement = Refinement{"Picked a different option uniformly at random.", std::move(revised)};
  out.latency_ms = 0.0;
  return out;
}

CorrectionEngine::Refined CorrectionEngine::refine_internal(const Question& question,
                                                            const Solution& initial) {
  if (config_.refiner_kind == RefinerKind::random) return refine_random(question, initial);
  return config_.two_pass_refine ? refine_two_pass(question, initial)
                                 : refine_model(question, initial);
}

Refinement CorrectionEngine::refine(const Question& question, const Solution& initial) {
  return refine_internal(question, initial).refinement;
}

RunRecord CorrectionEngine::self_correct(const Question& question, const Solution& initial,
                                         double initial_gen_latency_ms) {
  RunRecord record;
  record.question_id = question.id;
  record.initial = initial;
  record.timing.generate_ms = initial_gen_latency_ms;

  const Judged judged = judge_internal(question, initial);
  record.judgment = judged.judgment;
  record.timing.verify_ms = judged.latency_ms;

  if (judged.judgment.decision == Decision::refine) {
    Refined refined = refine_internal(question, initial);
    record.timing.refine_ms = refined.latency_ms;
    record.refinement = std::move(refined.refinement);
  }
  record.final_answer = resolve_final_answer(record.initial, record.refinement);
  return record;
}

CanonicalAnswer CorrectionEngine::rerank_with_refine(const Question& question,
                                                     const CandidateSet& set, double C) {
  if (set.candidates.empty()) throw std::invalid_argument("candidate set must not be empty");
  VoteBuckets buckets;
  for (const ScoredCandidate& cand : set.candidates) {
    check_weight(cand.p_correct);
    if (cand.p_correct < C) {
      const Refined refined = refine_internal(question, cand.solution);
      if (!refined.fell_back && refined.refinement.revised.final_answer.has_value()) {
        const double p2 = score_probability(question, refined.refinement.revised, nullptr);
        buckets.add(*refined.refinement.revised.final_answer, p2);
        continue;
      }
      // Unusable refinement: this candidate votes with its original term.
    }
    if (cand.solution.final_answer.has_value())
      buckets.add(*cand.solution.final_answer, cand.p_correct);
  }
  return buckets.winner();
}

}  // namespace selfcorrect
