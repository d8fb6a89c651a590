#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfcorrect {

enum class TaskKind { numeric, multiple_choice };
enum class AnswerKind { number, choice_label };
enum class Label { correct, incorrect };
enum class Provenance { base_lm, rft_lm, refined, external };
enum class Verdict { endorsed, flagged };
enum class VerifierKind { self, prompted, external, oracle };
enum class RefinerKind { model, random };
enum class Decision { keep, refine };

/// An answer in canonical form: either an exact decimal string (no currency
/// symbols, separators or units; "x.0" reduced to "x") or an uppercase
/// choice label. Equality on this type is what grading means.
struct CanonicalAnswer {
  AnswerKind kind = AnswerKind::number;
  std::string value;

  bool operator==(const CanonicalAnswer&) const = default;
};

struct ChoiceOption {
  std::string label;
  std::string text;

  bool operator==(const ChoiceOption&) const = default;
};

struct Question {
  std::string id;
  std::string text;
  CanonicalAnswer gold_answer;
  std::vector<ChoiceOption> options;  // non-empty iff task_kind == multiple_choice
  TaskKind task_kind = TaskKind::numeric;

  /// Throws std::invalid_argument if the options/task_kind/gold invariants
  /// do not hold (options present iff multiple_choice, unique labels, gold
  /// among the labels).
  void validate() const;
};

struct Step {
  int index = 0;  // 1-based
  std::string text;

  bool operator==(const Step&) const = default;
};

struct Solution {
  std::string id;  // assigned by the stage that produced it, e.g. "q1/s3"
  std::string question_id;
  std::vector<Step> steps;
  std::optional<CanonicalAnswer> final_answer;
  std::string raw_text;
  std::optional<Label> label;
  Provenance provenance = Provenance::base_lm;

  bool is_correct() const { return label == Label::correct; }
};

struct CritiqueEntry {
  Step step;  // exact copy of the critiqued solution's step
  std::string feedback;
  Verdict verdict = Verdict::flagged;

  bool operator==(const CritiqueEntry&) const = default;
};

struct Critique {
  std::string solution_ref;
  std::vector<CritiqueEntry> entries;
  CanonicalAnswer suggested_answer;  // boxed answer in the last feedback
  std::optional<std::string> hint_ref;
};

struct VerifierJudgment {
  std::string solution_ref;
  double p_correct = 0.0;
  Decision decision = Decision::keep;
  VerifierKind verifier_kind = VerifierKind::self;
};

struct PhaseTimings {
  double generate_ms = 0.0;
  double verify_ms = 0.0;
  double refine_ms = 0.0;
};

struct Refinement {
  std::string critique_text;
  Solution revised;
};

/// Full trace of one question through the verify-then-refine loop.
struct RunRecord {
  std::string question_id;
  Solution initial;
  VerifierJudgment judgment;
  std::optional<Refinement> refinement;  // present iff judgment.decision == refine
  std::optional<CanonicalAnswer> final_answer;
  PhaseTimings timing;
};

/// Labels a solution by canonical equality of its final answer against the
/// question's gold answer. A missing final answer grades as incorrect.
/// Total and pure; throws only on the question_id precondition.
Solution grade(Solution solution, const Question& question);

/// The refine/keep rule shared by every verifier kind: refine iff the
/// verifier's incorrectness confidence (1 - p_correct) strictly exceeds the
/// threshold.
bool decide_refine(double p_correct, double threshold);

/// Final answer of a run: the revised solution's answer when a refinement is
/// present (falling back to the initial's when revised extraction failed),
/// else the initial's.
std::optional<CanonicalAnswer> resolve_final_answer(const Solution& initial,
                                                    const std::optional<Refinement>& refinement);

// Enum <-> string helpers used by serialization and the CLI.
const char* to_string(TaskKind k);
const char* to_string(AnswerKind k);
const char* to_string(Label l);
const char* to_string(Provenance p);
const char* to_string(Verdict v);
const char* to_string(VerifierKind k);
const char* to_string(RefinerKind k);
const char* to_string(Decision d);

TaskKind task_kind_from_string(const std::string& s);
AnswerKind answer_kind_from_string(const std::string& s);
Label label_from_string(const std::string& s);
Provenance provenance_from_string(const std::string& s);
Verdict verdict_from_string(const std::string& s);
VerifierKind verifier_kind_from_string(const std::string& s);
RefinerKind refiner_kind_from_string(const std::string& s);
Decision decision_from_string(const std::string& s);

}  // namespace selfcorrect
