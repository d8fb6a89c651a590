#include <doctest.h>

#include <optional>
#include <string>

#include "selfcorrect/textcodec.hpp"
#include "support/fake_lm.hpp"
#include "support/test_util.hpp"

using namespace selfcorrect;
using test_support::make_sum_choice_question;
using test_support::make_sum_question;

namespace {

CanonicalAnswer num(const std::string& v) { return {AnswerKind::number, v}; }
CanonicalAnswer label(const std::string& v) { return {AnswerKind::choice_label, v}; }

const char* kThreeStepText =
    "Sure, let me work through it.\n"
    "Step 1: There are 5 boxes with 3 pens each.\n"
    "Step 2: 5 * 3 = 15.\n"
    "Step 3: The answer is \\boxed{15}. [END]\n"
    "Q: ignored trailing prompt echo";

}  // namespace

TEST_CASE("answer canonicalization: hand-checked table") {
  struct Row {
    const char* raw;
    std::optional<CanonicalAnswer> want;
  };
  const Row rows[] = {
      {"7", num("7")},
      {" 42 ", num("42")},
      {"$1,234", num("1234")},
      {"1,234.50", num("1234.5")},
      {"3.0", num("3")},
      {"007", num("7")},
      {"0", num("0")},
      {"-0", num("0")},
      {"-15", num("-15")},
      {"+8", num("8")},
      {"12 dollars", num("12")},
      {"80%", num("80")},
      {"3 lbs.", num("3")},
      {"7.", num("7")},
      {".5", num("0.5")},
      {"2.50", num("2.5")},
      {"\\$10", num("10")},
      {"(b)", label("B")},
      {"c", label("C")},
      {"(D)", label("D")},
      {" ( e ) ", label("E")},
      {"", std::nullopt},
      {"abc", std::nullopt},
      {"1 2", std::nullopt},
      {"12.5.3", std::nullopt},
      {"--5", std::nullopt},
      {"$", std::nullopt},
  };
  for (const Row& row : rows) {
    CAPTURE(row.raw);
    CHECK(canonicalize_answer(row.raw) == row.want);
  }
}

TEST_CASE("answer canonicalization is idempotent on its own outputs") {
  const char* inputs[] = {"$1,234.50", "(a)", "007", "-3.10", "12 km", "0.0"};
  for (const char* raw : inputs) {
    CAPTURE(raw);
    auto once = canonicalize_answer(raw);
    REQUIRE(once.has_value());
    auto twice = canonicalize_answer(once->value);
    REQUIRE(twice.has_value());
    CHECK(*twice == *once);
  }
}

TEST_CASE("boxed answer extraction takes the last occurrence") {
  CHECK(extract_boxed("The answer is \\boxed{42}.") == num("42"));
  CHECK(extract_boxed("First \\boxed{1}, finally \\boxed{2}.") == num("2"));
  CHECK(extract_boxed("pick \\boxed{B}") == label("B"));
  CHECK(extract_boxed("no box here") == std::nullopt);
  CHECK(extract_boxed("broken \\boxed{42") == std::nullopt);
  CHECK(extract_boxed("\\boxed{not a number}") == std::nullopt);
}

TEST_CASE("terminator stripping cuts at the first marker") {
  CHECK(strip_after_terminator("abc [END] def [END] ghi") == "abc ");
  CHECK(strip_after_terminator("no marker") == "no marker");
  CHECK(strip_after_terminator("a|b", "|") == "a");
}

TEST_CASE("solution parsing") {
  SUBCASE("preamble is ignored, steps and the boxed answer are extracted") {
    Solution s = parse_solution(kThreeStepText, "q1");
    REQUIRE(s.steps.size() == 3);
    CHECK(s.steps[0].index == 1);
    CHECK(s.steps[0].text == "There are 5 boxes with 3 pens each.");
    CHECK(s.steps[2].text == "The answer is \\boxed{15}.");
    CHECK(s.final_answer == num("15"));
    CHECK(s.question_id == "q1");
    CHECK(s.raw_text == kThreeStepText);  // raw text keeps everything
  }

  SUBCASE("a step may continue over several lines") {
    Solution s = parse_solution("Step 1: first line\nsecond line\n\nStep 2: \\boxed{1} [END]", "q");
    REQUIRE(s.steps.size() == 2);
    CHECK(s.steps[0].text == "first line\nsecond line");
  }

  SUBCASE("a last step without a box leaves the answer empty") {
    Solution s = parse_solution("Step 1: thinking out loud [END]", "q");
    CHECK_FALSE(s.final_answer.has_value());
  }

  SUBCASE("malformed layouts throw") {
    CHECK_THROWS_AS(parse_solution("no steps at all", "q"), MalformedSolution);
    CHECK_THROWS_AS(parse_solution("Step 2: starts too high [END]", "q"), MalformedSolution);
    CHECK_THROWS_AS(parse_solution("Step 1: a\nStep 3: skipped [END]", "q"), MalformedSolution);
    CHECK_THROWS_AS(parse_solution("Step 1:\nStep 2: empty first [END]", "q"), MalformedSolution);
  }
}

TEST_CASE("endorsement detection requires the exact sentence") {
  CHECK(is_endorsement("This step is correct."));
  CHECK(is_endorsement("This step is correct"));
  CHECK(is_endorsement("THIS STEP IS CORRECT."));
  CHECK(is_endorsement("  this step is correct. And so on."));
  CHECK_FALSE(is_endorsement("This step is correct, mostly."));
  CHECK_FALSE(is_endorsement("This step is incorrect."));
  CHECK_FALSE(is_endorsement("Correct."));
}

TEST_CASE("critique parsing validates the copied steps and the final boxed answer") {
  const Solution initial =
      parse_solution("Step 1: 5 * 3 = 14.\nStep 2: The answer is \\boxed{14}. [END]", "q1");

  SUBCASE("a well-formed critique yields verdicts and the suggested answer") {
    Critique c = parse_critique(
        "Step 1: 5 * 3 = 14.\n\nFeedback: This step is correct.\n\n"
        "Step 2: The answer is \\boxed{14}.\n\n"
        "Feedback: This step is incorrect. The correct answer is \\boxed{15}. [END]",
        initial);
    REQUIRE(c.entries.size() == 2);
    CHECK(c.entries[0].verdict == Verdict::endorsed);
    CHECK(c.entries[1].verdict == Verdict::flagged);
    CHECK(c.suggested_answer == num("15"));
    CHECK(c.solution_ref == initial.id);
  }

  SUBCASE("missing blocks fail the count rule (criterion 1)") {
    try {
      parse_critique("Step 1: 5 * 3 = 14.\n\nFeedback: Wrong, the answer is \\boxed{15}. [END]",
                     initial);
      FAIL("expected CritiqueParseError");
    } catch (const CritiqueParseError& e) {
      CHECK(e.criterion == 1);
    }
  }

  SUBCASE("paraphrased steps fail the copy rule (criterion 2)") {
    try {
      parse_critique(
          "Step 1: five times three equals 14.\n\nFeedback: This step is correct.\n\n"
          "Step 2: The answer is \\boxed{14}.\n\nFeedback: Nope: \\boxed{15}. [END]",
          initial);
      FAIL("expected CritiqueParseError");
    } catch (const CritiqueParseError& e) {
      CHECK(e.criterion == 2);
    }
  }

  SUBCASE("a final feedback without a boxed answer fails criterion 3") {
    try {
      parse_critique(
          "Step 1: 5 * 3 = 14.\n\nFeedback: This step is correct.\n\n"
          "Step 2: The answer is \\boxed{14}.\n\nFeedback: The multiplication is off. [END]",
          initial);
      FAIL("expected CritiqueParseError");
    } catch (const CritiqueParseError& e) {
      CHECK(e.criterion == 3);
    }
  }

  SUBCASE("broken alternation is a count violation") {
    CHECK_THROWS_AS(parse_critique("Feedback: floating feedback \\boxed{1} [END]", initial),
                    CountMismatch);
    CHECK_THROWS_AS(
        parse_critique("Step 1: 5 * 3 = 14.\nStep 2: The answer is \\boxed{14}.\n"
                       "Feedback: only one \\boxed{15} [END]",
                       initial),
        CountMismatch);
  }
}

TEST_CASE("verification replies map to the first bolded verdict") {
  CHECK(parse_verify_reply("Everything holds. **correct** [END]") == Label::correct);
  CHECK(parse_verify_reply("The sum is off. **incorrect** [END]") == Label::incorrect);
  CHECK(parse_verify_reply("**incorrect** though it looks **correct**") == Label::incorrect);
  CHECK(parse_verify_reply("**correct** not **incorrect**") == Label::correct);
  CHECK(parse_verify_reply("hard to say") == std::nullopt);
}

TEST_CASE("rendering round-trips through the parsers") {
  const Solution s = parse_solution(kThreeStepText, "q1");

  SUBCASE("single-newline and blank-line step joins") {
    CHECK(render_solution(s) ==
          "Step 1: There are 5 boxes with 3 pens each.\nStep 2: 5 * 3 = 15.\nStep 3: The "
          "answer is \\boxed{15}.");
    CHECK(render_solution_block(s) ==
          "Step 1: There are 5 boxes with 3 pens each.\n\nStep 2: 5 * 3 = 15.\n\nStep 3: The "
          "answer is \\boxed{15}.");
    Solution back = parse_solution(render_solution_block(s) + " [END]", "q1");
    CHECK(back.steps == s.steps);
    CHECK(back.final_answer == s.final_answer);
  }

  SUBCASE("critique rendering round-trips") {
    const Solution initial = parse_solution("Step 1: 1 + 1 = 3.\nStep 2: \\boxed{3} [END]", "q");
    Critique c;
    c.solution_ref = initial.id;
    c.suggested_answer = num("2");
    c.entries = {
        CritiqueEntry{initial.steps[0], "This step is incorrect. 1 + 1 = 2.", Verdict::flagged},
        CritiqueEntry{initial.steps[1],
                      "This step is incorrect. The correct answer is \\boxed{2}.",
                      Verdict::flagged},
    };
    const std::string text = render_critique(c);
    CHECK(text.ends_with(" [END]"));
    Critique back = parse_critique(text, initial);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].feedback == c.entries[0].feedback);
    CHECK(back.suggested_answer == c.suggested_answer);
  }
}

TEST_CASE("question blocks append the option list for multiple choice") {
  CHECK(render_question_block(make_sum_question("q", 2, 3)) == "What is 2 + 3?");
  Question mc = make_sum_choice_question("q", 2, 3);
  std::string want = "What is 2 + 3?\nAnswer Choices:";
  for (const ChoiceOption& opt : mc.options) want += "\n(" + opt.label + ") " + opt.text;
  CHECK(render_question_block(mc) == want);
}

TEST_CASE("annotated solutions keep feedback for all but the final step") {
  const Solution initial =
      parse_solution("Step 1: 2 + 2 = 5.\nStep 2: The answer is \\boxed{5}. [END]", "q");
  Critique c = parse_critique(
      "Step 1: 2 + 2 = 5.\n\nFeedback: This step is incorrect. 2 + 2 = 4.\n\n"
      "Step 2: The answer is \\boxed{5}.\n\n"
      "Feedback: This step is incorrect. The correct answer is \\boxed{4}. [END]",
      initial);
  CHECK(render_annotated_solution(c) ==
        "Step 1: 2 + 2 = 5.\n\nFeedback: This step is incorrect. 2 + 2 = 4.\n\n"
        "Step 2: The answer is \\boxed{5}.");
}

TEST_CASE("built-in prompt templates") {
  const TemplateSet numeric = default_templates(TaskKind::numeric);
  const TemplateSet choice = default_templates(TaskKind::multiple_choice);
  const Question q = make_sum_question("q1", 19, 23);

  SUBCASE("step-by-step answering: eight worked examples, then the request") {
    CHECK(numeric.cot.exemplars.size() == 8);
    const std::string prompt = build_cot_prompt(numeric.cot, q);
    CHECK(prompt.ends_with("Q: What is 19 + 23?\n\nExplain your reasoning step by step. Your "
                           "final answer should be a single numerical number, in the form "
                           "\\boxed{answer}. End your response with [END]."));
    // Worked examples precede the request and end with the terminator.
    CHECK(prompt.find(" [END]\n\nQ: ") != std::string::npos);
    const std::string mc_prompt = build_cot_prompt(choice.cot, q);
    CHECK(mc_prompt.find("one of the given options") != std::string::npos);
    CHECK(mc_prompt.find("a single numerical number") == std::string::npos);
  }

  SUBCASE("hinted feedback request: flawed answer, reference answer, lead-in") {
    CHECK(numeric.critique.exemplars.size() == 2);
    const Solution bad = parse_solution("Step 1: 19 + 23 = 41. \\boxed{41} [END]", "q1");
    const Solution good = parse_solution("Step 1: 19 + 23 = 42. \\boxed{42} [END]", "q1");
    const std::string prompt = build_critique_prompt(numeric.critique, q, bad, good);
    CHECK(prompt.ends_with("Let's go through the errors in Answer 1 and provide feedback:"));
    CHECK(prompt.find("Answer 1 (Incorrect):\n\nStep 1: 19 + 23 = 41. \\boxed{41}") !=
          std::string::npos);
    CHECK(prompt.find("Answer 2 (Correct):\n\nStep 1: 19 + 23 = 42. \\boxed{42}") !=
          std::string::npos);
  }

  SUBCASE("correction request: annotated steps, final step bare") {
    const Solution bad = parse_solution(
        "Step 1: 19 + 23 = 41.\nStep 2: The answer is \\boxed{41}. [END]", "q1");
    Critique c = parse_critique(
        "Step 1: 19 + 23 = 41.\n\nFeedback: This step is incorrect. It is 42.\n\n"
        "Step 2: The answer is \\boxed{41}.\n\n"
        "Feedback: This step is incorrect. The correct answer is \\boxed{42}. [END]",
        bad);
    const std::string prompt = build_correction_prompt(numeric.correction, q, c);
    CHECK(prompt.find("Can you correct the errors in your reasoning based on the feedback "
                      "provided?") != std::string::npos);
    // The final step's feedback (which names the corrected answer) is withheld.
    CHECK(prompt.find("The correct answer is \\boxed{42}") == std::string::npos);
    CHECK(prompt.find("Step 2: The answer is \\boxed{41}.\n\nCan you correct") !=
          std::string::npos);
  }

  SUBCASE("verification request ends with the correct/incorrect instruction") {
    CHECK(numeric.verify.exemplars.size() == 4);
    const Solution s = parse_solution("Step 1: 19 + 23 = 42. \\boxed{42} [END]", "q1");
    const std::string prompt = build_verify_prompt(numeric.verify, q, s);
    CHECK(prompt.ends_with("Is this solution correct or not? Answer **correct** or "
                           "**incorrect** and explain your reasoning. End your response with "
                           "[END]."));
    CHECK(prompt.find("Solution:\n\nStep 1: 19 + 23 = 42. \\boxed{42}") != std::string::npos);
  }
}

TEST_CASE("fixed classifier input layout") {
  const Question q = make_sum_question("q1", 2, 2);
  const Solution s =
      parse_solution("Step 1: 2 + 2 = 4.\nStep 2: The answer is \\boxed{4}. [END]", "q1");
  CHECK(verifier_input_sequence(q, s) ==
        "Question: What is 2 + 2?\nSolution: Step 1: 2 + 2 = 4.\nStep 2: The answer is "
        "\\boxed{4}.\nIs this solution correct?");
}

TEST_CASE("refinement input asks for feedback without a reference answer") {
  const Question q = make_sum_question("q1", 2, 2);
  const Solution s = parse_solution("Step 1: 2 + 2 = 5. \\boxed{5} [END]", "q1");
  const std::string input = refiner_input(q, s);
  CHECK(input.starts_with("Q: What is 2 + 2?\n\nAnswer 1 (Incorrect):\n\n"));
  CHECK(input.ends_with("Let's go through the errors in Answer 1 and provide feedback:\n\n"));
  CHECK(input.find("Answer 2") == std::string::npos);
  CHECK(input.find("use Answer 2 as a reference") == std::string::npos);
}

TEST_CASE("splitting combined feedback-plus-revision output") {
  SUBCASE("the revision starts at the first fresh Step 1 after feedback") {
    const RefinerSplit split = split_refiner_output(
        "Step 1: 2 + 2 = 5.\n\nFeedback: This step is incorrect. \\boxed{4}\n\n"
        "Step 1: 2 + 2 = 4.\n\nStep 2: The answer is \\boxed{4}. [END]");
    CHECK(split.critique_text ==
          "Step 1: 2 + 2 = 5.\n\nFeedback: This step is incorrect. \\boxed{4}");
    CHECK(split.solution_text ==
          "Step 1: 2 + 2 = 4.\n\nStep 2: The answer is \\boxed{4}. [END]");
  }

  SUBCASE("critique step lines alone never split") {
    CHECK_THROWS_AS(
        split_refiner_output("Step 1: a.\n\nFeedback: bad.\n\nStep 2: b.\n\nFeedback: worse."),
        UnsplittableOutput);
    CHECK_THROWS_AS(split_refiner_output("no structure at all"), UnsplittableOutput);
  }
}

TEST_CASE("template files: sections split on === and the last one is the request layout") {
  test_support::TempDir tmp;
  test_support::write_text(tmp.str("cot.txt"),
                           "Q: example one\n\nAnswer one. [END]\n===\n"
                           "Q: example two\n\nAnswer two. [END]\n===\n"
                           "Q: {{question}}\n\nAnswer now.\n");
  PromptTemplate tmpl = load_template_file(tmp.str("cot.txt"), TemplateKind::cot);
  CHECK(tmpl.exemplars.size() == 2);
  CHECK(tmpl.target_layout == "Q: {{question}}\n\nAnswer now.");

  const std::string prompt = render_prompt(tmpl, {{"question", "What is 1 + 1?"}});
  CHECK(prompt == "Q: example one\n\nAnswer one. [END]\n\nQ: example two\n\nAnswer two. "
                  "[END]\n\nQ: What is 1 + 1?\n\nAnswer now.");

  SUBCASE("missing slots are reported by name") {
    CHECK_THROWS_AS(render_prompt(tmpl, {}), MissingSlot);
  }
  SUBCASE("empty files are rejected") {
    test_support::write_text(tmp.str("empty.txt"), "\n===\n\n");
    CHECK_THROWS_AS(load_template_file(tmp.str("empty.txt"), TemplateKind::cot),
                    TemplateParseError);
  }
  SUBCASE("unterminated slots are template errors") {
    test_support::write_text(tmp.str("bad.txt"), "Q: {{question\n");
    PromptTemplate bad = load_template_file(tmp.str("bad.txt"), TemplateKind::cot);
    CHECK_THROWS_AS(render_prompt(bad, {{"question", "x"}}), TemplateParseError);
  }
}
