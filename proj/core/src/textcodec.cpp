#include "selfcorrect/textcodec.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace selfcorrect {

namespace {

bool is_ws(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view ltrim_view(std::string_view s) {
  while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
  return s;
}

std::string_view rtrim_view(std::string_view s) {
  while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view trim_view(std::string_view s) { return rtrim_view(ltrim_view(s)); }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

// Matches "Step <digits>:" after optional leading whitespace; consumes one
// optional space after the colon. Returns the step index and the rest of the
// line through the out-parameters.
bool match_step_line(std::string_view line, int& index, std::string_view& content) {
  std::string_view s = ltrim_view(line);
  constexpr std::string_view kPrefix = "Step ";
  if (!s.starts_with(kPrefix)) return false;
  s.remove_prefix(kPrefix.size());
  size_t digits = 0;
  while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
  if (digits == 0 || digits >= s.size() || s[digits] != ':') return false;
  int value = 0;
  for (size_t i = 0; i < digits; ++i) {
    if (value > 100000) return false;  // absurd index; treat as prose
    value = value * 10 + (s[i] - '0');
  }
  s.remove_prefix(digits + 1);
  if (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  index = value;
  content = s;
  return true;
}

bool match_feedback_line(std::string_view line, std::string_view& content) {
  std::string_view s = ltrim_view(line);
  constexpr std::string_view kPrefix = "Feedback:";
  if (!s.starts_with(kPrefix)) return false;
  s.remove_prefix(kPrefix.size());
  if (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  content = s;
  return true;
}

// Calls `fn(line)` for each line of `text` (without the newline).
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      fn(text.substr(pos));
      break;
    }
    fn(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
}

}  // namespace

std::string strip_after_terminator(std::string_view text, std::string_view terminator) {
  size_t pos = text.find(terminator);
  if (pos == std::string_view::npos) return std::string(text);
  return std::string(text.substr(0, pos));
}

std::optional<CanonicalAnswer> canonicalize_answer(std::string_view raw) {
  std::string s;
  s.reserve(raw.size());
  for (char c : trim_view(raw)) {
    if (c != '\\') s.push_back(c);  // drop LaTeX escapes like \$
  }

  // Choice labels: a single letter, optionally parenthesized.
  {
    std::string_view v = trim_view(s);
    if (!v.empty() && v.front() == '(') v.remove_prefix(1);
    if (!v.empty() && v.back() == ')') v.remove_suffix(1);
    v = trim_view(v);
    if (v.size() == 1 && std::isalpha(static_cast<unsigned char>(v.front()))) {
      CanonicalAnswer out;
      out.kind = AnswerKind::choice_label;
      out.value = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(v.front()))));
      return out;
    }
  }

  // Numbers: strip currency symbols and thousands separators, then an optional
  // trailing unit ("km", "%", "dollars"), and normalize the decimal string.
  std::string t;
  for (char c : s) {
    if (c == '$' || c == ',') continue;
    t.push_back(c);
  }
  std::string_view v = trim_view(t);
  while (!v.empty()) {
    char c = v.back();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '%' || c == ' ' || c == '.') {
      // Only treat a trailing '.' as part of a unit abbreviation when letters
      // precede it (e.g. "3 lbs."); a bare "7." stays numeric.
      if (c == '.' && (v.size() < 2 || !std::isalpha(static_cast<unsigned char>(v[v.size() - 2]))))
        break;
      v.remove_suffix(1);
    } else {
      break;
    }
  }
  if (v.empty()) return std::nullopt;

  bool negative = false;
  if (v.front() == '+' || v.front() == '-') {
    negative = v.front() == '-';
    v.remove_prefix(1);
  }
  std::string int_part, frac_part;
  size_t i = 0;
  while (i < v.size() && std::isdigit(static_cast<unsigned char>(v[i]))) int_part.push_back(v[i++]);
  if (i < v.size() && v[i] == '.') {
    ++i;
    while (i < v.size() && std::isdigit(static_cast<unsigned char>(v[i]))) frac_part.push_back(v[i++]);
  }
  if (i != v.size() || (int_part.empty() && frac_part.empty())) return std::nullopt;

  size_t nz = int_part.find_first_not_of('0');
  int_part = nz == std::string::npos ? "0" : int_part.substr(nz);
  size_t last = frac_part.find_last_not_of('0');
  frac_part = last == std::string::npos ? "" : frac_part.substr(0, last + 1);

  std::string value = int_part;
  if (!frac_part.empty()) value += "." + frac_part;
  if (value == "0") negative = false;
  if (negative) value.insert(value.begin(), '-');

  CanonicalAnswer out;
  out.kind = AnswerKind::number;
  out.value = std::move(value);
  return out;
}

std::optional<CanonicalAnswer> extract_boxed(std::string_view text) {
  constexpr std::string_view kMarker = "\\boxed{";
  size_t pos = text.rfind(kMarker);
  if (pos == std::string_view::npos) return std::nullopt;
  size_t start = pos + kMarker.size();
  int depth = 1;
  size_t end = start;
  while (end < text.size() && depth > 0) {
    if (text[end] == '{') ++depth;
    else if (text[end] == '}') --depth;
    if (depth > 0) ++end;
  }
  if (depth != 0) return std::nullopt;  // unbalanced braces
  return canonicalize_answer(text.substr(start, end - start));
}

Solution parse_solution(std::string_view text, std::string question_id) {
  Solution sol;
  sol.question_id = std::move(question_id);
  sol.raw_text = std::string(text);

  std::string clipped = strip_after_terminator(text);
  std::optional<Step> current;
  auto flush = [&sol, &current] {
    if (!current) return;
    current->text = std::string(rtrim_view(current->text));
    sol.steps.push_back(std::move(*current));
    current.reset();
  };
  for_each_line(clipped, [&](std::string_view line) {
    int index = 0;
    std::string_view content;
    if (match_step_line(line, index, content)) {
      flush();
      current = Step{index, std::string(content)};
    } else if (current) {
      current->text += "\n";
      current->text += std::string(line);
    }
    // Text before the first step line is ignored.
  });
  flush();

  if (sol.steps.empty())
    throw MalformedSolution("no step lines found");
  for (size_t i = 0; i < sol.steps.size(); ++i) {
    if (sol.steps[i].index != static_cast<int>(i) + 1)
      throw MalformedSolution("step indices are not contiguous from 1 (saw Step " +
                              std::to_string(sol.steps[i].index) + " at position " +
                              std::to_string(i + 1) + ")");
    if (sol.steps[i].text.empty())
      throw MalformedSolution("step " + std::to_string(i + 1) + " has empty text");
  }
  sol.final_answer = extract_boxed(sol.steps.back().text);
  return sol;
}

bool is_endorsement(std::string_view feedback) {
  std::string_view s = ltrim_view(feedback);
  constexpr std::string_view kPhrase = "this step is correct";
  if (s.size() < kPhrase.size()) return false;
  for (size_t i = 0; i < kPhrase.size(); ++i) {
    if (lower(s[i]) != kPhrase[i]) return false;
  }
  return s.size() == kPhrase.size() || s[kPhrase.size()] == '.';
}

Critique parse_critique(std::string_view text, const Solution& initial) {
  if (initial.steps.empty())
    throw std::invalid_argument("parse_critique: initial solution has no steps");

  std::string clipped = strip_after_terminator(text);

  enum class State { preamble, in_step, in_feedback };
  State state = State::preamble;
  Step current_step;
  std::string current_text;
  std::vector<std::pair<Step, std::string>> blocks;

  auto finish_feedback = [&] {
    blocks.emplace_back(current_step, std::string(rtrim_view(current_text)));
  };

  for_each_line(clipped, [&](std::string_view line) {
    int index = 0;
    std::string_view content;
    if (match_step_line(line, index, content)) {
      if (state == State::in_step)
        throw CountMismatch("step " + std::to_string(current_step.index) + " has no feedback");
      if (state == State::in_feedback) finish_feedback();
      current_step = Step{index, std::string(content)};
      current_text.clear();
      state = State::in_step;
    } else if (std::string_view fb; match_feedback_line(line, fb)) {
      if (state == State::preamble)
        throw CountMismatch("feedback appears before any step");
      if (state == State::in_feedback)
        throw CountMismatch("two feedbacks for step " + std::to_string(current_step.index));
      current_step.text = std::string(rtrim_view(current_step.text));
      current_text = std::string(fb);
      state = State::in_feedback;
    } else if (state == State::in_step) {
      current_step.text += "\n";
      current_step.text += std::string(line);
    } else if (state == State::in_feedback) {
      current_text += "\n";
      current_text += std::string(line);
    }
  });
  if (state == State::in_step)
    throw CountMismatch("trailing step " + std::to_string(current_step.index) + " has no feedback");
  if (state == State::preamble) throw CountMismatch("no step/feedback blocks found");
  finish_feedback();

  if (blocks.size() != initial.steps.size())
    throw CountMismatch("critique has " + std::to_string(blocks.size()) + " step/feedback blocks, solution has " +
                        std::to_string(initial.steps.size()) + " steps");
  for (size_t i = 0; i < blocks.size(); ++i) {
    const Step& got = blocks[i].first;
    const Step& want = initial.steps[i];
    if (got.index != want.index)
      throw StepCopyMismatch("block " + std::to_string(i + 1) + " is labeled Step " +
                             std::to_string(got.index));
    if (std::string_view(rtrim_view(got.text)) != std::string_view(want.text))
      throw StepCopyMismatch("step " + std::to_string(want.index) +
                             " text differs from the initial solution");
  }

  auto suggested = extract_boxed(blocks.back().second);
  if (!suggested)
    throw MissingFinalAnswer("last feedback carries no boxed final answer");

  Critique critique;
  critique.solution_ref = initial.id;
  critique.suggested_answer = *suggested;
  critique.entries.reserve(blocks.size());
  for (auto& [step, feedback] : blocks) {
    CritiqueEntry entry;
    entry.step = Step{step.index, std::string(rtrim_view(step.text))};
    entry.verdict = is_endorsement(feedback) ? Verdict::endorsed : Verdict::flagged;
    entry.feedback = std::move(feedback);
    critique.entries.push_back(std::move(entry));
  }
  return critique;
}

std::optional<Label> parse_verify_reply(std::string_view text) {
  size_t correct = text.find("**correct**");
  size_t incorrect = text.find("**incorrect**");
  if (correct == std::string_view::npos && incorrect == std::string_view::npos)
    return std::nullopt;
  if (incorrect == std::string_view::npos) return Label::correct;
  if (correct == std::string_view::npos) return Label::incorrect;
  return correct < incorrect ? Label::correct : Label::incorrect;
}

namespace {

std::string join_steps(const Solution& solution, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < solution.steps.size(); ++i) {
    if (i > 0) out += sep;
    out += "Step " + std::to_string(solution.steps[i].index) + ": " + solution.steps[i].text;
  }
  return out;
}

}  // namespace

std::string render_solution(const Solution& solution) { return join_steps(solution, "\n"); }

std::string render_solution_block(const Solution& solution) { return join_steps(solution, "\n\n"); }

std::string render_critique(const Critique& critique, bool with_terminator) {
  std::string out;
  for (size_t i = 0; i < critique.entries.size(); ++i) {
    const CritiqueEntry& e = critique.entries[i];
    if (i > 0) out += "\n\n";
    out += "Step " + std::to_string(e.step.index) + ": " + e.step.text;
    out += "\n\nFeedback: " + e.feedback;
  }
  if (with_terminator) out += " [END]";
  return out;
}

std::string render_question_block(const Question& question) {
  if (question.task_kind != TaskKind::multiple_choice) return question.text;
  std::string out = question.text + "\nAnswer Choices:";
  for (const ChoiceOption& opt : question.options) {
    out += "\n(" + opt.label + ") " + opt.text;
  }
  return out;
}

std::string render_annotated_solution(const Critique& critique) {
  std::string out;
  for (size_t i = 0; i < critique.entries.size(); ++i) {
    const CritiqueEntry& e = critique.entries[i];
    if (i > 0) out += "\n\n";
    out += "Step " + std::to_string(e.step.index) + ": " + e.step.text;
    if (i + 1 < critique.entries.size()) out += "\n\nFeedback: " + e.feedback;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Few-shot exemplar material. Question texts and worked solutions are shared
// between the prompt kinds (the same Betty solutions appear in the critique
// and verify prompts), so they live here once and the default templates are
// assembled from them.
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kJasonQ =
    "Jason had 20 lollipops. He gave Denny some lollipops. Now Jason has 12 lollipops. How many "
    "lollipops did Jason give to Denny?";

constexpr std::string_view kJasonSolution =
    R"(Step 1: Jason originally had 20 lollipops.

Step 2: After giving some to Denny, Jason has 12 lollipops.

Step 3: The number of lollipops Jason gave to Denny is the difference between the original number and the remaining number, which is 20 - 12 = 8 lollipops.

Step 4: The answer is \boxed{8} lollipops.)";

constexpr std::string_view kJasonWrongSolution =
    R"(Step 1: Jason originally had 20 lollipops.

Step 2: After giving some to Denny, Jason has 12 lollipops.

Step 3: The number of lollipops Jason gave to Denny is the sum of the two amounts, which is 20 + 12 = 32 lollipops.

Step 4: The answer is \boxed{32} lollipops.)";

constexpr std::string_view kTreesQ =
    "There are 15 trees in the grove. Grove workers will plant trees in the grove today. After "
    "they are done, there will be 21 trees. How many trees did the grove workers plant today?";

constexpr std::string_view kTreesSolution =
    R"(Step 1: Initially, there are 15 trees in the grove.

Step 2: After planting, the total number of trees in the grove is 21.

Step 3: The number of trees planted by the grove workers today is the difference between the final number and the initial number of trees, which is 21 - 15 = 6 trees.

Step 4: The answer is \boxed{6} trees.)";

constexpr std::string_view kCarsQ =
    "If there are 3 cars in the parking lot and 2 more cars arrive, how many cars are in the "
    "parking lot?";

constexpr std::string_view kCarsSolution =
    R"(Step 1: There are 3 cars in the parking lot already.

Step 2: Then 2 more cars arrive, so the total number of cars is 3 + 2 = 5 cars.

Step 3: The answer is \boxed{5} cars.)";

constexpr std::string_view kChocolatesQ =
    "Leah had 32 chocolates and her sister had 42. If they ate 35, how many pieces do they have "
    "left in total?";

constexpr std::string_view kChocolatesSolution =
    R"(Step 1: Leah had 32 chocolates and her sister had 42 chocolates, so together they had 32 + 42 = 74 chocolates.

Step 2: After eating 35 chocolates, they had 74 - 35 = 39 chocolates left.

Step 3: The answer is \boxed{39} chocolates.)";

constexpr std::string_view kToysQ =
    "Shawn has five toys. For Christmas, he got two toys each from his mom and dad. How many toys "
    "does he have now?";

constexpr std::string_view kToysSolution =
    R"(Step 1: Shawn started with 5 toys.

Step 2: He got 2 toys from his mom and 2 toys from his dad, which is 2 + 2 = 4 more toys.

Step 3: Now he has 5 + 4 = 9 toys in total.

Step 4: The answer is \boxed{9} toys.)";

constexpr std::string_view kComputersQ =
    "There were nine computers in the server room. Five more computers were installed each day, "
    "from monday to thursday. How many computers are now in the server room?";

constexpr std::string_view kComputersSolution =
    R"(Step 1: There were 9 computers in the server room originally.

Step 2: From monday to thursday is 4 days, and 5 more computers were installed each day, which is 4 x 5 = 20 computers.

Step 3: Now there are 9 + 20 = 29 computers in the server room.

Step 4: The answer is \boxed{29} computers.)";

constexpr std::string_view kGolfQ =
    "Michael had 58 golf balls. On tuesday, he lost 23 golf balls. On wednesday, he lost 2 more. "
    "How many golf balls did he have at the end of wednesday?";

constexpr std::string_view kGolfSolution =
    R"(Step 1: Michael started with 58 golf balls.

Step 2: After losing 23 golf balls on tuesday, he had 58 - 23 = 35 golf balls.

Step 3: After losing 2 more on wednesday, he had 35 - 2 = 33 golf balls.

Step 4: The answer is \boxed{33} golf balls.)";

constexpr std::string_view kOliviaQ =
    "Olivia has $23. She bought five bagels for $3 each. How many dollars does she have left?";

constexpr std::string_view kOliviaSolution =
    R"(Step 1: Olivia had $23.

Step 2: She bought 5 bagels for $3 each, which cost 5 x 3 = $15.

Step 3: She has $23 - $15 = $8 left.

Step 4: The answer is \boxed{8} dollars.)";

constexpr std::string_view kBettyQ =
    "Betty is saving money for a new wallet which costs $100. Betty has only half of the money "
    "she needs. Her parents decided to give her $15 for that purpose, and her grandparents twice "
    "as much as her parents. How much more money does Betty need to buy the wallet?";

constexpr std::string_view kBettyIncorrect =
    R"(Step 1: Betty needs $100 to buy the wallet.

Step 2: Her parents gave her $15, which is half of the remaining amount.

Step 3: Her grandparents gave her twice as much as her parents, which is 2 x $15 = $30.

Step 4: The total amount of money Betty has now is $15 + $30 = $45.

Step 5: The difference between the amount she needs and the amount she has is $100 - $45 = $55.

Step 6: Betty still needs $55 to buy the wallet.

Step 7: The answer is \boxed{$55}.)";

constexpr std::string_view kBettyCorrect =
    R"(Step 1: Betty needs $100 to buy the wallet, but she currently has only half of the money, which is $50.

Step 2: Her parents gave her $15, so she now has $50 + $15 = $65.

Step 3: Her grandparents gave her twice as much as her parents, so she received $15 x 2 = $30 from her grandparents.

Step 4: Betty now has a total of $65 + $30 = $95.

Step 5: To find out how much more money Betty needs, subtract the amount she has from the amount she needs, which is $100 - $95 = $5.

Step 6: The answer is \boxed{5} dollars.)";

constexpr std::string_view kBettyFeedbacks[] = {
    "This step is correct.",
    "This is incorrect. Betty's parents gave her $15, but it's not necessarily half of the "
    "remaining amount. The question states that Betty has only half of the money she needs, not "
    "half of the remaining amount after her parents' contribution.",
    "This step is correct.",
    "This is incorrect. The total must include the $50 that Betty already has, so she now has "
    "$50 + $15 + $30 = $95.",
    "This is incorrect. Using the corrected total from Step 4, the difference is $100 - $95 = $5.",
    "This is incorrect. Based on the corrected calculations, Betty still needs $5 to buy the "
    "wallet.",
    R"(The correct answer, based on the corrected calculations, should be \boxed{$5}.)",
};

constexpr std::string_view kKellyQ =
    "Kelly is grocery shopping at a supermarket and is making sure she has enough in her budget "
    "for the items in her cart. Her 5 packs of bacon cost $10 in total and she has 6 packets of "
    "chicken which each cost twice as much as a pack of bacon. She also has 3 packs of "
    "strawberries, priced at $4 each, and 7 packs of apples, each priced at half the price of a "
    "pack of strawberries. If Kelly’s budget is $65 then how much money, in dollars, does "
    "she have left in her budget?";

constexpr std::string_view kKellyIncorrect =
    R"(Step 1: Kelly spends $10 in total for 5 packs of bacon.

Step 2: Each packet of chicken costs twice as much as a pack of bacon, which is 2 x $10 = $20.

Step 3: She has 3 packs of strawberries, priced at $4 each, so she spends 3 x $4 = $12 on strawberries.

Step 4: Each pack of apples costs half the price of a pack of strawberries, which is $4 / 2 = $2, so she spends 7 x $2 = $14 on apples.

Step 5: The total amount Kelly spends is $10 + $12 + $14 = $36.

Step 6: Kelly's budget is $65, so she has $65 - $36 = $29 left.

Step 7: The answer is \boxed{$29}.)";

constexpr std::string_view kKellyCorrect =
    R"(Step 1: Kelly spends $10 in total for 5 packs of bacon, so each pack of bacon costs $10 / 5 = $2.

Step 2: Each packet of chicken costs twice as much as a pack of bacon, which is 2 x $2 = $4. Since she has 6 packets of chicken, she spends 6 x $4 = $24 on chicken.

Step 3: She has 3 packs of strawberries, priced at $4 each, so she spends 3 x $4 = $12 on strawberries.

Step 4: Each pack of apples costs half the price of a pack of strawberries, which is $4 / 2 = $2, so she spends 7 x $2 = $14 on apples.

Step 5: The total amount Kelly spends is $10 + $24 + $12 + $14 = $60.

Step 6: Kelly's budget is $65, so she has $65 - $60 = $5 left.

Step 7: The answer is \boxed{$5}.)";

constexpr std::string_view kKellyFeedbacks[] = {
    "This step is correct.",
    "Each pack of chicken costs twice as much as a pack of bacon, not the total cost of bacon. "
    "So we need to calculate the cost of one pack of bacon first (total cost of bacon / total "
    "bags of bacon) and use that.",
    "This step is correct.",
    "This step is correct.",
    "This is incorrect. The total must also include the $24 that Kelly spends on chicken, so she "
    "spends $10 + $24 + $12 + $14 = $60 in total.",
    "This is incorrect. Using the corrected total, Kelly has $65 - $60 = $5 left in her budget.",
    R"(The correct answer, based on the corrected calculations, should be \boxed{$5}.)",
};

constexpr std::string_view kVerifyReplyBettyIncorrect =
    "The solution is **incorrect**. You've ignored the original amount that Betty had saved, "
    "which is half the wallet's cost ($100/2 = $50). So, before receiving money from her parents "
    "and grandparents, she already had $50. [END]";

constexpr std::string_view kVerifyReplyBettyCorrect =
    "This solution is **correct**. Betty only needs $5 more to buy the $100 wallet. This is "
    "because she started with $50, received $15 from her parents, and received $30 from her "
    "grandparents, which totals $95. Subtracting that from the total cost of the wallet leaves "
    "her with needing just $5. [END]";

constexpr std::string_view kVerifyReplyJasonWrong =
    "The solution is **incorrect**. The number of lollipops Jason gave to Denny is the "
    "difference between the original number and the remaining number, which is 20 - 12 = 8, not "
    "the sum of the two amounts. [END]";

constexpr std::string_view kVerifyReplyTrees =
    "This solution is **correct**. There were 15 trees originally and 21 trees after planting, "
    "so the workers planted 21 - 15 = 6 trees, which matches the final answer. [END]";

constexpr std::string_view kNumericAnswerClause = "a single numerical number";
constexpr std::string_view kChoiceAnswerClause = "one of the given options";

std::string cot_instruction(TaskKind kind) {
  std::string clause(kind == TaskKind::multiple_choice ? kChoiceAnswerClause : kNumericAnswerClause);
  return "Explain your reasoning step by step. Your final answer should be " + clause +
         R"(, in the form \boxed{answer}. End your response with [END].)";
}

std::string correction_instruction(TaskKind kind) {
  std::string clause(kind == TaskKind::multiple_choice ? kChoiceAnswerClause : kNumericAnswerClause);
  return "Can you correct the errors in your reasoning based on the feedback provided? Your "
         "final answer should be " +
         clause + R"(, in the form \boxed{answer}. End your response with [END].)";
}

constexpr std::string_view kCritiqueInstructionWithHint =
    "There are reasoning errors in Answer 1. Please go through each step in Answer 1, use "
    "Answer 2 as a reference for the correct approach, and provide feedback that helps correct "
    "the errors in Answer 1. End your response with [END].";

constexpr std::string_view kCritiqueInstructionNoHint =
    "There are reasoning errors in Answer 1. Please go through each step in Answer 1 and "
    "provide feedback that helps correct the errors in Answer 1. End your response with [END].";

constexpr std::string_view kCritiqueLeadIn =
    "Let's go through the errors in Answer 1 and provide feedback:";

constexpr std::string_view kVerifyInstruction =
    "Is this solution correct or not? Answer **correct** or **incorrect** and explain your "
    "reasoning. End your response with [END].";

std::string cot_exemplar(std::string_view question, std::string_view solution, TaskKind kind) {
  return "Q: " + std::string(question) + "\n\n" + cot_instruction(kind) + "\n\n" +
         std::string(solution) + " [END]";
}

// Interleaves copied steps with feedback; `steps` must be a blank-line-joined
// block. The final feedback gets the terminator appended.
std::string interleave_feedback(std::string_view steps, const std::string_view* feedbacks,
                                size_t n_feedbacks, bool drop_last_feedback) {
  std::string out;
  size_t pos = 0;
  size_t i = 0;
  while (pos < steps.size()) {
    size_t next = steps.find("\n\n", pos);
    std::string_view step = next == std::string_view::npos ? steps.substr(pos)
                                                           : steps.substr(pos, next - pos);
    if (!out.empty()) out += "\n\n";
    out += std::string(step);
    bool last = next == std::string_view::npos;
    if (!(drop_last_feedback && last)) {
      if (i >= n_feedbacks) throw std::logic_error("more steps than feedbacks in exemplar material");
      out += "\n\nFeedback: " + std::string(feedbacks[i]);
      if (last) out += " [END]";
    }
    ++i;
    if (next == std::string_view::npos) break;
    pos = next + 2;
  }
  return out;
}

std::string fill_slots(const PromptTemplate& tmpl, std::string_view layout,
                       const std::map<std::string, std::string>& slots) {
  std::string out;
  size_t pos = 0;
  while (pos < layout.size()) {
    size_t open = layout.find("{{", pos);
    if (open == std::string_view::npos) {
      out += std::string(layout.substr(pos));
      break;
    }
    out += std::string(layout.substr(pos, open - pos));
    size_t close = layout.find("}}", open + 2);
    if (close == std::string_view::npos)
      throw TemplateParseError("unterminated {{slot}} in " + std::string(to_string(tmpl.kind)) +
                               " template layout");
    std::string name(layout.substr(open + 2, close - open - 2));
    auto it = slots.find(name);
    if (it == slots.end())
      throw MissingSlot("template slot '" + name + "' was not supplied for the " +
                        std::string(to_string(tmpl.kind)) + " prompt");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

std::string critique_exemplar(std::string_view question, std::string_view incorrect,
                              std::string_view correct, const std::string_view* feedbacks,
                              size_t n_feedbacks) {
  return "Q: " + std::string(question) + "\n\nAnswer 1 (Incorrect):\n\n" + std::string(incorrect) +
         "\n\nAnswer 2 (Correct):\n\n" + std::string(correct) + "\n\n" +
         std::string(kCritiqueInstructionWithHint) + "\n\n" + std::string(kCritiqueLeadIn) +
         "\n\nAnswer 1 (Incorrect):\n\n" +
         interleave_feedback(incorrect, feedbacks, n_feedbacks, /*drop_last_feedback=*/false);
}

std::string correction_exemplar(std::string_view question, std::string_view incorrect,
                                std::string_view correct, const std::string_view* feedbacks,
                                size_t n_feedbacks, TaskKind kind) {
  return "Q: " + std::string(question) + "\n\n" +
         interleave_feedback(incorrect, feedbacks, n_feedbacks, /*drop_last_feedback=*/true) +
         "\n\n" + correction_instruction(kind) + "\n\n" + std::string(correct) + " [END]";
}

std::string verify_exemplar(std::string_view question, std::string_view solution,
                            std::string_view reply) {
  return "Question: " + std::string(question) + "\n\nSolution:\n\n" + std::string(solution) +
         "\n\n" + std::string(kVerifyInstruction) + "\n\n" + std::string(reply);
}

}  // namespace

TemplateSet default_templates(TaskKind kind) {
  TemplateSet set;

  set.cot.kind = TemplateKind::cot;
  set.cot.exemplars = {
      cot_exemplar(kJasonQ, kJasonSolution, kind),
      cot_exemplar(kTreesQ, kTreesSolution, kind),
      cot_exemplar(kCarsQ, kCarsSolution, kind),
      cot_exemplar(kChocolatesQ, kChocolatesSolution, kind),
      cot_exemplar(kToysQ, kToysSolution, kind),
      cot_exemplar(kComputersQ, kComputersSolution, kind),
      cot_exemplar(kGolfQ, kGolfSolution, kind),
      cot_exemplar(kOliviaQ, kOliviaSolution, kind),
  };
  set.cot.target_layout = "Q: {{question}}\n\n" + cot_instruction(kind);

  set.critique.kind = TemplateKind::critique;
  set.critique.exemplars = {
      critique_exemplar(kBettyQ, kBettyIncorrect, kBettyCorrect, kBettyFeedbacks,
                        std::size(kBettyFeedbacks)),
      critique_exemplar(kKellyQ, kKellyIncorrect, kKellyCorrect, kKellyFeedbacks,
                        std::size(kKellyFeedbacks)),
  };
  set.critique.target_layout =
      "Q: {{question}}\n\nAnswer 1 (Incorrect):\n\n{{incorrect_solution}}\n\nAnswer 2 "
      "(Correct):\n\n{{correct_solution}}\n\n" +
      std::string(kCritiqueInstructionWithHint) + "\n\n" + std::string(kCritiqueLeadIn);

  set.correction.kind = TemplateKind::correction;
  set.correction.exemplars = {
      correction_exemplar(kKellyQ, kKellyIncorrect, kKellyCorrect, kKellyFeedbacks,
                          std::size(kKellyFeedbacks), kind),
      correction_exemplar(kBettyQ, kBettyIncorrect, kBettyCorrect, kBettyFeedbacks,
                          std::size(kBettyFeedbacks), kind),
  };
  set.correction.target_layout =
      "Q: {{question}}\n\n{{annotated_solution}}\n\n" + correction_instruction(kind);

  set.verify.kind = TemplateKind::verify;
  set.verify.exemplars = {
      verify_exemplar(kBettyQ, kBettyIncorrect, kVerifyReplyBettyIncorrect),
      verify_exemplar(kBettyQ, kBettyCorrect, kVerifyReplyBettyCorrect),
      verify_exemplar(kJasonQ, kJasonWrongSolution, kVerifyReplyJasonWrong),
      verify_exemplar(kTreesQ, kTreesSolution, kVerifyReplyTrees),
  };
  set.verify.target_layout = "Question: {{question}}\n\nSolution:\n\n{{solution}}\n\n" +
                             std::string(kVerifyInstruction);

  return set;
}

PromptTemplate load_template_file(const std::filesystem::path& path, TemplateKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TemplateParseError("cannot open template file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string content = buf.str();

  std::vector<std::string> sections;
  std::string current;
  bool first_line_of_section = true;
  for_each_line(content, [&](std::string_view line) {
    if (trim_view(line) == "===") {
      sections.push_back(current);
      current.clear();
      first_line_of_section = true;
      return;
    }
    if (!first_line_of_section) current += "\n";
    current += std::string(line);
    first_line_of_section = false;
  });
  sections.push_back(current);

  for (std::string& s : sections) s = std::string(trim_view(s));
  std::erase_if(sections, [](const std::string& s) { return s.empty(); });
  if (sections.empty())
    throw TemplateParseError("template file has no sections: " + path.string());

  PromptTemplate tmpl;
  tmpl.kind = kind;
  tmpl.target_layout = sections.back();
  sections.pop_back();
  tmpl.exemplars = std::move(sections);
  return tmpl;
}

std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& slots) {
  std::string out;
  for (const std::string& exemplar : tmpl.exemplars) {
    out += exemplar;
    out += "\n\n";
  }
  out += fill_slots(tmpl, tmpl.target_layout, slots);
  return out;
}

std::string build_cot_prompt(const PromptTemplate& tmpl, const Question& question) {
  return render_prompt(tmpl, {{"question", render_question_block(question)}});
}

std::string build_critique_prompt(const PromptTemplate& tmpl, const Question& question,
                                  const Solution& incorrect, const Solution& correct_hint) {
  return render_prompt(tmpl, {
                                 {"question", render_question_block(question)},
                                 {"incorrect_solution", render_solution_block(incorrect)},
                                 {"correct_solution", render_solution_block(correct_hint)},
                             });
}

std::string build_correction_prompt(const PromptTemplate& tmpl, const Question& question,
                                    const Critique& critique) {
  return render_prompt(tmpl, {
                                 {"question", render_question_block(question)},
                                 {"annotated_solution", render_annotated_solution(critique)},
                             });
}

std::string build_verify_prompt(const PromptTemplate& tmpl, const Question& question,
                                const Solution& solution) {
  return render_prompt(tmpl, {
                                 {"question", render_question_block(question)},
                                 {"solution", render_solution_block(solution)},
                             });
}

std::string verifier_input_sequence(const Question& question, const Solution& solution) {
  return "Question: " + render_question_block(question) + "\nSolution: " +
         render_solution(solution) + "\nIs this solution correct?";
}

std::string refiner_input(const Question& question, const Solution& initial) {
  return "Q: " + render_question_block(question) + "\n\nAnswer 1 (Incorrect):\n\n" +
         render_solution_block(initial) + "\n\n" + std::string(kCritiqueInstructionNoHint) +
         "\n\n" + std::string(kCritiqueLeadIn) + "\n\n";
}

RefinerSplit split_refiner_output(std::string_view text) {
  // The revised solution starts at the first "Step 1:" line that follows at
  // least one "Feedback:" line; everything before it is the critique.
  bool seen_feedback = false;
  size_t offset = 0;
  std::optional<size_t> split_at;
  for_each_line(text, [&](std::string_view line) {
    if (!split_at) {
      int index = 0;
      std::string_view content;
      if (std::string_view fb; match_feedback_line(line, fb)) {
        seen_feedback = true;
      } else if (seen_feedback && match_step_line(line, index, content) && index == 1) {
        split_at = offset;
      }
    }
    offset += line.size() + 1;
  });
  if (!split_at)
    throw UnsplittableOutput("refiner output has no revised solution after the critique");
  RefinerSplit split;
  split.critique_text = std::string(rtrim_view(text.substr(0, *split_at)));
  split.solution_text = std::string(text.substr(*split_at));
  return split;
}

const char* to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::cot: return "cot";
    case TemplateKind::critique: return "critique";
    case TemplateKind::correction: return "correction";
    case TemplateKind::verify: return "verify";
  }
  return "cot";
}

TemplateKind template_kind_from_string(const std::string& s) {
  if (s == "cot") return TemplateKind::cot;
  if (s == "critique") return TemplateKind::critique;
  if (s == "correction") return TemplateKind::correction;
  if (s == "verify") return TemplateKind::verify;
  throw std::invalid_argument("unknown template kind: '" + s + "'");
}

}  // namespace selfcorrect
