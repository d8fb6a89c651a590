#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfcorrect/pipeline.hpp"
#include "selfcorrect/types.hpp"

namespace selfcorrect {

// No critique entry flags an error, so there is nothing to truncate at.
struct NoFlaggedStep : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All verifier examples share one label; inverse-frequency weights would
// divide by zero.
struct DegenerateClasses : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Entries up to and including the first flagged step. Throws NoFlaggedStep
// when every entry endorses its step.
std::vector<CritiqueEntry> truncate_entries(const Critique& critique);

// The truncated critique rendered as interleaved step/feedback blocks, ending
// at the first flagged step's feedback (no terminator).
std::string truncate_to_first_error(const Critique& critique);

// One supervised example for refiner fine-tuning. `input` is the hint-free
// correction prompt; `target` is the critique (truncated at the first error
// unless all_steps) followed by the revised solution and the terminator.
// mask_boundary counts the input bytes that the loss must ignore.
struct RefinerRecord {
  std::string id;
  std::string input;
  std::string target;
  std::size_t mask_boundary = 0;
  int schema = 1;
};

// Entries whose critique flags no step cannot be truncated; they are skipped
// and their ids appended to `skipped` when provided.
std::vector<RefinerRecord> emit_refiner_records(const std::vector<CorpusEntry>& corpus,
                                                bool all_steps = false,
                                                std::vector<std::string>* skipped = nullptr);

// One supervised example for verifier fine-tuning: the question+solution
// sequence, a 0/1 correctness label, and an inverse-frequency class weight
// w_c = N / (2 * n_c) so both classes contribute equally regardless of skew.
struct VerifierRecord {
  std::string id;
  std::string input;
  int label = 0;  // 1 = correct solution
  double class_weight = 1.0;
  int schema = 1;
};

std::vector<VerifierRecord> emit_verifier_records(const std::vector<Question>& questions,
                                                  const std::vector<Solution>& solutions);

// Deterministic subset of round(fraction * size) entries chosen by a seeded
// shuffle of indices; the survivors keep their original relative order.
std::vector<CorpusEntry> subsample(const std::vector<CorpusEntry>& corpus, double fraction,
                                   std::uint64_t seed);
std::vector<std::size_t> subsample_indices(std::size_t size, double fraction, std::uint64_t seed);

}  // namespace selfcorrect
