#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "selfcorrect/types.hpp"

namespace selfcorrect {

// Thrown when a generation contains no usable "Step i:" structure. Callers in
// the sampling path convert this into a stepless solution graded incorrect.
struct MalformedSolution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Base for the three critique defects; `criterion` is the 1-based index of the
// first violated rule (1 = count match, 2 = exact step copies, 3 = boxed final
// answer present in the last feedback).
struct CritiqueParseError : std::runtime_error {
  CritiqueParseError(int criterion, const std::string& what)
      : std::runtime_error(what), criterion(criterion) {}
  int criterion;
};

struct CountMismatch : CritiqueParseError {
  explicit CountMismatch(const std::string& what) : CritiqueParseError(1, what) {}
};

struct StepCopyMismatch : CritiqueParseError {
  explicit StepCopyMismatch(const std::string& what) : CritiqueParseError(2, what) {}
};

struct MissingFinalAnswer : CritiqueParseError {
  explicit MissingFinalAnswer(const std::string& what) : CritiqueParseError(3, what) {}
};

struct MissingSlot : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TemplateParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One-pass refiner output that cannot be split into critique + revised solution.
struct UnsplittableOutput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- answers ---------------------------------------------------------------

// Normalizes a raw answer string to its canonical form: single letters with
// optional parentheses become uppercase choice labels; decimal numbers are
// stripped of currency symbols, thousands separators, trailing units, leading
// zeros and trailing fractional zeros. Returns nullopt for anything else.
// Idempotent: feeding a canonical value back yields the same value.
std::optional<CanonicalAnswer> canonicalize_answer(std::string_view raw);

// Canonicalized content of the LAST \boxed{...} in `text`; nullopt when no
// occurrence exists or the content does not canonicalize.
std::optional<CanonicalAnswer> extract_boxed(std::string_view text);

// Cuts `text` at the first occurrence of `terminator` (exclusive).
std::string strip_after_terminator(std::string_view text,
                                   std::string_view terminator = "[END]");

// --- solution / critique grammars -------------------------------------------

// Parses "Step i:" lines (contiguous indices starting at 1; text before the
// first step line is ignored; content after "[END]" is discarded). The last
// step supplies final_answer via extract_boxed. Throws MalformedSolution on
// zero steps or broken numbering.
Solution parse_solution(std::string_view text, std::string question_id);

// Parses alternating "Step i:" / "Feedback:" blocks and validates them against
// `initial`, throwing the error of the first violated rule-filter criterion.
// Verdicts follow the endorsement pattern; suggested_answer comes from the
// last feedback's boxed answer.
Critique parse_critique(std::string_view text, const Solution& initial);

// Verdict of the first "**correct**" / "**incorrect**" marker; nullopt if
// neither occurs.
std::optional<Label> parse_verify_reply(std::string_view text);

// True iff the feedback's first sentence is exactly "This step is correct"
// (case-insensitive, optional trailing period).
bool is_endorsement(std::string_view feedback);

// --- rendering ---------------------------------------------------------------

// "Step i: text" lines joined with a single newline (the verifier input form).
std::string render_solution(const Solution& solution);

// Same lines joined with blank lines (the form solutions take inside prompts).
std::string render_solution_block(const Solution& solution);

// Step/feedback blocks joined with blank lines; with_terminator appends
// " [END]" after the final feedback.
std::string render_critique(const Critique& critique, bool with_terminator = true);

// Question text; multiple-choice questions gain an "Answer Choices:" block.
std::string render_question_block(const Question& question);

// Steps 1..n-1 each followed by their feedback, final step bare — the final
// feedback would give away the corrected boxed answer, so correction prompts
// withhold it.
std::string render_annotated_solution(const Critique& critique);

// --- prompt templates --------------------------------------------------------

enum class TemplateKind { cot, critique, correction, verify };

struct PromptTemplate {
  TemplateKind kind = TemplateKind::cot;
  std::vector<std::string> exemplars;  // verbatim few-shot blocks
  std::string target_layout;           // contains {{slot}} placeholders
  std::string terminator = "[END]";
};

struct TemplateSet {
  PromptTemplate cot;
  PromptTemplate critique;
  PromptTemplate correction;
  PromptTemplate verify;
};

// Built-in templates: 8-shot CoT, 2-shot critique, 2-shot correction, 4-shot
// verify. The task kind only switches the answer-format clause of the CoT and
// correction instructions ("a single numerical number" vs "one of the given
// options"); exemplars are shared.
TemplateSet default_templates(TaskKind kind);

// Plain-text template file: sections separated by lines containing only "===";
// every section is an exemplar except the last, which is the target layout.
PromptTemplate load_template_file(const std::filesystem::path& path, TemplateKind kind);

// Joins exemplars and the filled target layout with blank lines. Throws
// MissingSlot when the layout references a slot absent from `slots`.
std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& slots);

// Slot plumbing for the four prompt kinds.
std::string build_cot_prompt(const PromptTemplate& tmpl, const Question& question);
std::string build_critique_prompt(const PromptTemplate& tmpl, const Question& question,
                                  const Solution& incorrect, const Solution& correct_hint);
std::string build_correction_prompt(const PromptTemplate& tmpl, const Question& question,
                                    const Critique& critique);
std::string build_verify_prompt(const PromptTemplate& tmpl, const Question& question,
                                const Solution& solution);

// The fixed classifier input: "Question: {q}\nSolution: {s}\nIs this solution
// correct?" with steps joined by single newlines.
std::string verifier_input_sequence(const Question& question, const Solution& solution);

// Hint-free critique request used for refiner fine-tuning records and one-pass
// refinement at inference. Ends with the lead-in plus a blank line so the
// critique text follows directly.
std::string refiner_input(const Question& question, const Solution& initial);

// Splits one-pass refiner output into the critique part and the revised
// solution part (the first "Step 1:" line that follows at least one
// "Feedback:" line starts the revision). Throws UnsplittableOutput.
struct RefinerSplit {
  std::string critique_text;
  std::string solution_text;
};
RefinerSplit split_refiner_output(std::string_view text);

const char* to_string(TemplateKind kind);
TemplateKind template_kind_from_string(const std::string& s);

}  // namespace selfcorrect
