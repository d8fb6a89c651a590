#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "selfcorrect/gateway.hpp"
#include "selfcorrect/textcodec.hpp"
#include "selfcorrect/types.hpp"

namespace selfcorrect {

// One incorrect solution paired with a correct one for the same question; the
// correct member is the hint shown to the critique generator.
struct SolutionPair {
  Solution incorrect;
  Solution correct;
  std::string question_id;
};

// Why a raw critique was dropped: criterion 1 = step/feedback count mismatch,
// 2 = steps not copied exactly, 3 = missing or wrong boxed final answer. A
// critique is always attributed to its FIRST failing criterion.
struct Rejection {
  int criterion = 0;
  std::string detail;
};

struct FunnelStats {
  long raw_count = 0;
  long after_rule_count = 0;
  long after_prompt_count = 0;
  long rejected_count_mismatch = 0;   // criterion 1
  long rejected_step_copy = 0;        // criterion 2
  long rejected_final_answer = 0;     // criterion 3

  void add_rejection(int criterion);
  void merge(const FunnelStats& other);
  // raw = passes + per-criterion rejections, and the funnel never widens.
  bool consistent() const;
};

// A critique that survived both filters, together with the greedy revision
// that proved it usable.
struct CorpusEntry {
  std::string id;  // "<question_id>#p<pair_index>"
  Question question;
  Solution incorrect;
  Critique critique;
  Solution revision;
  int pair_index = 0;
  std::string critique_fingerprint;
  std::string revision_fingerprint;
  std::string critiquer_backend;
  std::string generator_backend;
};

struct SampledSolution {
  Solution solution;
  double gen_latency_ms = 0.0;
  std::string fingerprint;
  std::string backend_id;
};

// Both task flavors of the prompt templates; stages pick by question kind.
struct TemplateLibrary {
  TemplateSet numeric;
  TemplateSet multiple_choice;

  static TemplateLibrary defaults();
  const TemplateSet& for_kind(TaskKind kind) const {
    return kind == TaskKind::multiple_choice ? multiple_choice : numeric;
  }
};

struct Stage1Params {
  int n_samples = 10;
  double sample_temperature = 0.9;
  double critique_temperature = 0.9;
  int max_new_tokens = 2048;
  int pair_cap = 0;  // 0 = keep every incorrect-correct pair
  int workers = 4;
  Provenance sample_provenance = Provenance::base_lm;  // rft_lm when sampling the RFT model
};

struct Stage1Result {
  std::vector<SampledSolution> solutions;
  std::vector<CorpusEntry> corpus;
  FunnelStats stats;
  std::vector<std::string> item_errors;  // per-question failures that were skipped
};

struct PassingRevision {
  Solution revision;
  std::string fingerprint;
  std::string backend;
};

// Runs fn(0..n-1) on up to `workers` threads. The first exception thrown by
// any fn aborts the remaining work and is rethrown on the calling thread;
// completed indices keep their results (fn writes into caller-owned slots).
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

class Stage1Pipeline {
 public:
  // `generator` samples solutions and decodes filter revisions (the base LM or
  // the RFT model); `critiquer` produces hint-guided critiques (usually the
  // same backend).
  Stage1Pipeline(LmGateway& generator, LmGateway& critiquer, TemplateLibrary templates,
                 Stage1Params params);

  // Samples n solutions at the configured temperature, parses and grades them.
  // Generations without usable step structure become stepless solutions graded
  // incorrect.
  std::vector<SampledSolution> sample_solutions(const Question& question, int n);

  // All incorrect×correct pairs in (incorrect index, correct index) order.
  static std::vector<SolutionPair> form_pairs(const std::vector<Solution>& graded);

  // One critique sample per pair, hint included.
  Completion generate_critique(const Question& question, const SolutionPair& pair);

  // Applies the three rule criteria; on success the critique carries
  // hint_ref = pair.correct.id.
  static std::variant<Critique, Rejection> rule_filter(const std::string& raw_text,
                                                       const SolutionPair& pair);

  // Decodes one greedy revision under the correction prompt; passes iff the
  // revision's answer grades correct.
  std::optional<PassingRevision> prompt_filter(const Question& question, const Critique& critique,
                                               const SolutionPair& pair);

  // sample → pair → critique → filter over the whole dataset with concurrent
  // per-question workers. Persistent backend failures abort; other per-item
  // failures are recorded in item_errors and skipped.
  Stage1Result run_stage1(const std::vector<Question>& dataset);

  const Stage1Params& params() const { return params_; }

 private:
  struct QuestionOutcome {
    std::vector<SampledSolution> solutions;
    std::vector<CorpusEntry> corpus;
    FunnelStats stats;
    std::optional<std::string> error;
  };
  QuestionOutcome process_question(const Question& question);

  LmGateway& generator_;
  LmGateway& critiquer_;
  TemplateLibrary templates_;
  Stage1Params params_;
};

}  // namespace selfcorrect
