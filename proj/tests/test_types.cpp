#include <doctest.h>

#include "selfcorrect/types.hpp"
#include "support/fake_lm.hpp"

using namespace selfcorrect;
using test_support::make_sum_choice_question;
using test_support::make_sum_question;

namespace {

Solution solution_with_answer(const std::string& qid, std::optional<CanonicalAnswer> answer) {
  Solution s;
  s.id = qid + "/s0";
  s.question_id = qid;
  s.steps = {Step{1, "some work"}};
  s.final_answer = std::move(answer);
  return s;
}

}  // namespace

TEST_CASE("grading compares canonical answers against the gold answer") {
  const Question q = make_sum_question("q1", 3, 4);

  Solution right = grade(
      solution_with_answer("q1", CanonicalAnswer{AnswerKind::number, "7"}), q);
  CHECK(right.label == Label::correct);
  CHECK(right.is_correct());

  Solution wrong = grade(
      solution_with_answer("q1", CanonicalAnswer{AnswerKind::number, "8"}), q);
  CHECK(wrong.label == Label::incorrect);
  CHECK_FALSE(wrong.is_correct());

  SUBCASE("a missing final answer grades incorrect, never correct") {
    Solution none = grade(solution_with_answer("q1", std::nullopt), q);
    CHECK(none.label == Label::incorrect);
  }

  SUBCASE("answer kind participates in equality") {
    // The label "7" is not the number 7.
    Solution mislabeled = grade(
        solution_with_answer("q1", CanonicalAnswer{AnswerKind::choice_label, "7"}), q);
    CHECK(mislabeled.label == Label::incorrect);
  }

  SUBCASE("grading a solution against a foreign question throws") {
    CHECK_THROWS_AS(grade(solution_with_answer("other", std::nullopt), q),
                    std::invalid_argument);
  }
}

TEST_CASE("refine decision fires only when incorrectness confidence strictly exceeds the threshold") {
  CHECK(decide_refine(0.3, 0.5));        // 0.7 > 0.5
  CHECK_FALSE(decide_refine(0.5, 0.5));  // 0.5 > 0.5 is false: boundary keeps
  CHECK_FALSE(decide_refine(0.7, 0.5));
  CHECK(decide_refine(0.49, 0.5));

  SUBCASE("threshold 1 never refines, threshold 0 refines anything imperfect") {
    CHECK_FALSE(decide_refine(0.0, 1.0));
    CHECK(decide_refine(0.999, 0.0));
    CHECK_FALSE(decide_refine(1.0, 0.0));
  }
}

TEST_CASE("final answer resolution prefers the revised solution and falls back to the initial") {
  const Solution initial =
      solution_with_answer("q1", CanonicalAnswer{AnswerKind::number, "8"});

  SUBCASE("no refinement: the initial answer stands") {
    CHECK(resolve_final_answer(initial, std::nullopt) ==
          CanonicalAnswer{AnswerKind::number, "8"});
  }

  SUBCASE("a refinement with an extractable answer overrides") {
    Refinement r;
    r.revised = solution_with_answer("q1", CanonicalAnswer{AnswerKind::number, "7"});
    CHECK(resolve_final_answer(initial, r) == CanonicalAnswer{AnswerKind::number, "7"});
  }

  SUBCASE("a refinement whose revision has no answer falls back to the initial") {
    Refinement r;
    r.revised = solution_with_answer("q1", std::nullopt);
    CHECK(resolve_final_answer(initial, r) == CanonicalAnswer{AnswerKind::number, "8"});
  }
}

TEST_CASE("question validation enforces the option invariants") {
  CHECK_NOTHROW(make_sum_question("q1", 2, 2).validate());
  CHECK_NOTHROW(make_sum_choice_question("q2", 5, 6).validate());

  Question q = make_sum_choice_question("q3", 1, 2);

  SUBCASE("duplicate labels") {
    q.options[1].label = q.options[0].label;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  }
  SUBCASE("gold answer must be one of the labels") {
    q.gold_answer.value = "Z";
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  }
  SUBCASE("choice questions need options") {
    q.options.clear();
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  }
  SUBCASE("numeric questions must not carry options") {
    Question n = make_sum_question("q4", 1, 2);
    n.options.push_back(ChoiceOption{"A", "3"});
    CHECK_THROWS_AS(n.validate(), std::invalid_argument);
  }
  SUBCASE("empty id") {
    q.id.clear();
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  }
}

TEST_CASE("enum names round-trip through their string forms") {
  CHECK(task_kind_from_string(to_string(TaskKind::numeric)) == TaskKind::numeric);
  CHECK(task_kind_from_string(to_string(TaskKind::multiple_choice)) ==
        TaskKind::multiple_choice);
  CHECK(answer_kind_from_string(to_string(AnswerKind::number)) == AnswerKind::number);
  CHECK(answer_kind_from_string(to_string(AnswerKind::choice_label)) ==
        AnswerKind::choice_label);
  CHECK(label_from_string(to_string(Label::correct)) == Label::correct);
  CHECK(label_from_string(to_string(Label::incorrect)) == Label::incorrect);
  CHECK(std::string(to_string(Provenance::refined)) == "refined");
  CHECK(std::string(to_string(Verdict::flagged)) == "flagged");
  CHECK(std::string(to_string(VerifierKind::oracle)) == "oracle");
  CHECK(std::string(to_string(RefinerKind::random)) == "random");
  CHECK(std::string(to_string(Decision::refine)) == "refine");
}
