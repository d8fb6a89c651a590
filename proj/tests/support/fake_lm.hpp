#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selfcorrect/gateway.hpp"
#include "selfcorrect/types.hpp"

namespace selfcorrect::test_support {

// Tunable behavior of the simulated model. All rates are probabilities in
// [0, 1]; outcomes are drawn from hashes of (seed, prompt, sample index), so
// the same inputs always produce the same outputs, across processes.
struct FakeLmOptions {
  std::uint64_t seed = 1;

  double sample_accuracy = 0.4;    // sampled step-by-step solutions that are correct
  double greedy_accuracy = 0.55;   // greedy (temperature 0) solutions that are correct
  double malformed_rate = 0.0;     // generations with no usable step structure
  double critique_validity = 0.75; // hinted critiques that survive parsing + the rule filter
  double revision_success = 0.8;   // feedback-guided corrections that land on the right answer
  double refine_success = 0.6;     // single-pass refinements whose revision is correct
  double unsplittable_rate = 0.0;  // refiner outputs that never start a revised solution
  double verify_flip = 0.1;        // verification verdicts/scores that contradict the truth
};

// In-process stand-in for a language model, used by the test suites and the
// fixture generator. It recognizes the five prompt shapes the pipeline emits
// (step-by-step answering, hinted critique, feedback-guided correction,
// critique-plus-revision, and correct/incorrect verification), reads the
// question out of the prompt, and answers synthetic "What is A + B?" tasks —
// plain numbers or multiple choice — with hash-controlled quality.
class FakeLm : public Backend {
 public:
  explicit FakeLm(std::string id, FakeLmOptions options = {});

  std::string id() const override { return id_; }
  std::vector<Completion> generate(const std::string& prompt, const GenParams& params) override;
  ScoreResult score_correctness(const std::string& question,
                                const std::string& solution) override;

  // One completion text for a given sample index; exposed so tests can
  // predict exactly what a pipeline stage saw.
  std::string completion_text(const std::string& prompt, const GenParams& params,
                              int sample_index) const;

 private:
  std::string id_;
  FakeLmOptions options_;
};

// --- synthetic task helpers --------------------------------------------------

// "What is A + B?" with gold A+B as a plain number.
Question make_sum_question(const std::string& id, long a, long b);

// Same stem, four options; exactly one option text equals A+B and its label
// is the gold answer. Distractor values are offsets of the sum.
Question make_sum_choice_question(const std::string& id, long a, long b);

// n questions with hash-spread operands; kind selects plain or multiple choice.
std::vector<Question> synthetic_questions(int n, TaskKind kind, std::uint64_t seed);

// Maps a 64-bit hash to [0, 1).
double hash_unit(std::uint64_t h);

}  // namespace selfcorrect::test_support
