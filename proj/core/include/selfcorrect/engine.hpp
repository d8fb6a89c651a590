#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfcorrect/gateway.hpp"
#include "selfcorrect/pipeline.hpp"
#include "selfcorrect/types.hpp"

namespace selfcorrect {

struct EmptyDevSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every candidate in a set failed to produce a parseable final answer.
struct NoValidAnswer : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The random-choice refiner only makes sense when there are options to pick
// from.
struct RandomBaselineOnNumeric : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Threshold {
  double value = 0.0;
  std::string selected_on;  // identifier of the dev set it was tuned on
  double dev_accuracy_at_value = 0.0;
};

// One dev-set item with its simulated refinement outcome: picking a threshold
// requires knowing what refining would have produced for every item.
struct DevRecord {
  double p_correct = 0.0;
  bool initial_correct = false;
  bool refined_correct = false;
};

// Scans thresholds at {0, 1} and every distinct (1 - p_correct); keep→initial
// correctness, refine→refined correctness; returns the accuracy maximizer,
// ties broken toward the HIGHEST value (fewest refinements).
Threshold select_threshold(const std::vector<DevRecord>& dev_records,
                           const std::string& dev_id = "dev");

struct ScoredCandidate {
  Solution solution;
  double p_correct = 0.0;
};

struct CandidateSet {
  std::string question_id;
  std::vector<ScoredCandidate> candidates;
};

// argmax over answer buckets of summed p_correct; candidates without a final
// answer contribute to no bucket; ties go to the earliest candidate's answer.
CanonicalAnswer weighted_vote(const CandidateSet& set);

struct EngineConfig {
  VerifierKind verifier_kind = VerifierKind::self;
  RefinerKind refiner_kind = RefinerKind::model;
  double threshold = 0.5;
  int max_new_tokens = 2048;
  std::uint64_t random_seed = 0;  // random-choice baseline stream
  bool two_pass_refine = false;   // ablation: critique and correction decoded separately
};

class CorrectionEngine {
 public:
  // `refiner` may be null when the refiner kind is random; `verifier` may be
  // null when the verifier kind is oracle. A prompted verifier is a gateway
  // whose backend maps the verify-prompt reply onto a probability.
  CorrectionEngine(LmGateway* refiner, LmGateway* verifier, TemplateLibrary templates,
                   EngineConfig config);

  // One verifier call (or a gold-label lookup for the oracle kind) mapped to a
  // keep/refine decision via the configured threshold.
  VerifierJudgment judge(const Question& question, const Solution& solution);

  // One greedy refinement pass split into critique and revised solution; the
  // random kind draws an option label different from the initial answer.
  Refinement refine(const Question& question, const Solution& initial);

  // Verify once, refine at most once, resolve the final answer.
  RunRecord self_correct(const Question& question, const Solution& initial,
                         double initial_gen_latency_ms = 0.0);

  // Appendix-style reranking: candidates scoring below C are refined and
  // re-scored; the vote sums original terms for kept candidates and refined
  // terms for refined ones. Refinements that cannot be parsed fall back to the
  // candidate's original term.
  CanonicalAnswer rerank_with_refine(const Question& question, const CandidateSet& set, double C);

  const EngineConfig& config() const { return config_; }

 private:
  struct Judged {
    VerifierJudgment judgment;
    double latency_ms = 0.0;
  };
  struct Refined {
    Refinement refinement;
    bool fell_back = false;
    double latency_ms = 0.0;
  };

  Judged judge_internal(const Question& question, const Solution& solution);
  Refined refine_internal(const Question& question, const Solution& initial);
  Refined refine_model(const Question& question, const Solution& initial);
  Refined refine_two_pass(const Question& question, const Solution& initial);
  Refined refine_random(const Question& question, const Solution& initial);
  double score_probability(const Question& question, const Solution& solution,
                           double* latency_ms);

  LmGateway* refiner_;
  LmGateway* verifier_;
  TemplateLibrary templates_;
  EngineConfig config_;
};

}  // namespace selfcorrect
