#include "selfcorrect/types.hpp"

#include <algorithm>
#include <unordered_set>

namespace selfcorrect {

void Question::validate() const {
  if (id.empty()) throw std::invalid_argument("question id is empty");
  if (task_kind == TaskKind::multiple_choice) {
    if (options.empty())
      throw std::invalid_argument("multiple_choice question '" + id + "' has no options");
    std::unordered_set<std::string> labels;
    for (const auto& opt : options) {
      if (!labels.insert(opt.label).second)
        throw std::invalid_argument("duplicate option label '" + opt.label + "' in question '" + id + "'");
    }
    if (gold_answer.kind != AnswerKind::choice_label || !labels.contains(gold_answer.value))
      throw std::invalid_argument("gold answer of question '" + id + "' is not an option label");
  } else {
    if (!options.empty())
      throw std::invalid_argument("numeric question '" + id + "' carries options");
    if (gold_answer.kind != AnswerKind::number)
      throw std::invalid_argument("numeric question '" + id + "' has a non-numeric gold answer");
  }
}

Solution grade(Solution solution, const Question& question) {
  if (solution.question_id != question.id)
    throw std::invalid_argument("grade: solution belongs to question '" + solution.question_id +
                                "', not '" + question.id + "'");
  const bool correct = solution.final_answer.has_value() && *solution.final_answer == question.gold_answer;
  solution.label = correct ? Label::correct : Label::incorrect;
  return solution;
}

bool decide_refine(double p_correct, double threshold) {
  return (1.0 - p_correct) > threshold;
}

std::optional<CanonicalAnswer> resolve_final_answer(const Solution& initial,
                                                    const std::optional<Refinement>& refinement) {
  if (refinement.has_value() && refinement->revised.final_answer.has_value())
    return refinement->revised.final_answer;
  return initial.final_answer;
}

const char* to_string(TaskKind k) {
  return k == TaskKind::numeric ? "numeric" : "multiple_choice";
}

const char* to_string(AnswerKind k) {
  return k == AnswerKind::number ? "number" : "choice_label";
}

const char* to_string(Label l) { return l == Label::correct ? "correct" : "incorrect"; }

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::base_lm: return "base_lm";
    case Provenance::rft_lm: return "rft_lm";
    case Provenance::refined: return "refined";
    case Provenance::external: return "external";
  }
  return "base_lm";
}

const char* to_string(Verdict v) { return v == Verdict::endorsed ? "endorsed" : "flagged"; }

const char* to_string(VerifierKind k) {
  switch (k) {
    case VerifierKind::self: return "self";
    case VerifierKind::prompted: return "prompted";
    case VerifierKind::external: return "external";
    case VerifierKind::oracle: return "oracle";
  }
  return "self";
}

const char* to_string(RefinerKind k) { return k == RefinerKind::model ? "model" : "random"; }

const char* to_string(Decision d) { return d == Decision::keep ? "keep" : "refine"; }

namespace {

[[noreturn]] void bad_enum(const char* what, const std::string& s) {
  throw std::invalid_argument(std::string("unknown ") + what + ": '" + s + "'");
}

}  // namespace

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "numeric") return TaskKind::numeric;
  if (s == "multiple_choice") return TaskKind::multiple_choice;
  bad_enum("task kind", s);
}

AnswerKind answer_kind_from_string(const std::string& s) {
  if (s == "number") return AnswerKind::number;
  if (s == "choice_label") return AnswerKind::choice_label;
  bad_enum("answer kind", s);
}

Label label_from_string(const std::string& s) {
  if (s == "correct") return Label::correct;
  if (s == "incorrect") return Label::incorrect;
  bad_enum("label", s);
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "base_lm") return Provenance::base_lm;
  if (s == "rft_lm") return Provenance::rft_lm;
  if (s == "refined") return Provenance::refined;
  if (s == "external") return Provenance::external;
  bad_enum("provenance", s);
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "endorsed") return Verdict::endorsed;
  if (s == "flagged") return Verdict::flagged;
  bad_enum("verdict", s);
}

VerifierKind verifier_kind_from_string(const std::string& s) {
  if (s == "self") return VerifierKind::self;
  if (s == "prompted") return VerifierKind::prompted;
  if (s == "external") return VerifierKind::external;
  if (s == "oracle") return VerifierKind::oracle;
  bad_enum("verifier kind", s);
}

RefinerKind refiner_kind_from_string(const std::string& s) {
  if (s == "model") return RefinerKind::model;
  if (s == "random") return RefinerKind::random;
  bad_enum("refiner kind", s);
}

Decision decision_from_string(const std::string& s) {
  if (s == "keep") return Decision::keep;
  if (s == "refine") return Decision::refine;
  bad_enum("decision", s);
}

}  // namespace selfcorrect
