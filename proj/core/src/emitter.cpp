#include "selfcorrect/emitter.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "selfcorrect/rng.hpp"
#include "selfcorrect/textcodec.hpp"

namespace selfcorrect {

std::vector<CritiqueEntry> truncate_entries(const Critique& critique) {
  for (std::size_t i = 0; i < critique.entries.size(); ++i) {
    if (critique.entries[i].verdict == Verdict::flagged) {
      return std::vector<CritiqueEntry>(critique.entries.begin(),
                                        critique.entries.begin() + static_cast<long>(i) + 1);
    }
  }
  throw NoFlaggedStep("critique for " + critique.solution_ref + " endorses every step");
}

std::string truncate_to_first_error(const Critique& critique) {
  Critique prefix = critique;
  prefix.entries = truncate_entries(critique);
  return render_critique(prefix, /*with_terminator=*/false);
}

std::vector<RefinerRecord> emit_refiner_records(const std::vector<CorpusEntry>& corpus,
                                                bool all_steps,
                                                std::vector<std::string>* skipped) {
  std::vector<RefinerRecord> records;
  records.reserve(corpus.size());
  for (const CorpusEntry& entry : corpus) {
    std::string critique_text;
    if (all_steps) {
      critique_text = render_critique(entry.critique, /*with_terminator=*/false);
    } else {
      try {
        critique_text = truncate_to_first_error(entry.critique);
      } catch (const NoFlaggedStep&) {
        if (skipped != nullptr) skipped->push_back(entry.id);
        continue;
      }
    }
    RefinerRecord rec;
    rec.id = entry.id;
    rec.input = refiner_input(entry.question, entry.incorrect);
    rec.target = critique_text + "\n\n" + render_solution_block(entry.revision) + " [END]";
    rec.mask_boundary = rec.input.size();
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<VerifierRecord> emit_verifier_records(const std::vector<Question>& questions,
                                                  const std::vector<Solution>& solutions) {
  std::unordered_map<std::string, const Question*> by_id;
  by_id.reserve(questions.size());
  for (const Question& q : questions) by_id[q.id] = &q;

  long n_correct = 0;
  long n_incorrect = 0;
  for (const Solution& s : solutions) {
    if (s.label == Label::correct) {
      ++n_correct;
    } else if (s.label == Label::incorrect) {
      ++n_incorrect;
    } else {
      throw std::invalid_argument("verifier records require graded solutions; " + s.id +
                                  " is ungraded");
    }
  }
  if (n_correct == 0 || n_incorrect == 0)
    throw DegenerateClasses("verifier training data needs both labels; got " +
                            std::to_string(n_correct) + " correct and " +
                            std::to_string(n_incorrect) + " incorrect");

  const double total = static_cast<double>(n_correct + n_incorrect);
  const double w_correct = total / (2.0 * static_cast<double>(n_correct));
  const double w_incorrect = total / (2.0 * static_cast<double>(n_incorrect));

  std::vector<VerifierRecord> records;
  records.reserve(solutions.size());
  for (const Solution& s : solutions) {
    const auto it = by_id.find(s.question_id);
    if (it == by_id.end())
      throw std::invalid_argument("no question with id " + s.question_id + " for solution " +
                                  s.id);
    VerifierRecord rec;
    rec.id = s.id;
    rec.input = verifier_input_sequence(*it->second, s);
    rec.label = s.label == Label::correct ? 1 : 0;
    rec.class_weight = rec.label == 1 ? w_correct : w_incorrect;
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<std::size_t> subsample_indices(std::size_t size, double fraction,
                                           std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("fraction must be in (0, 1]");
  const auto target = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(size)));
  std::vector<std::size_t> indices(size);
  for (std::size_t i = 0; i < size; ++i) indices[i] = i;
  std::mt19937_64 rng(seed);
  portable_shuffle(indices, rng);
  indices.resize(std::min(target, size));
  std::sort(indices.begin(), indices.end());
  return indices;
}

std::vector<CorpusEntry> subsample(const std::vector<CorpusEntry>& corpus, double fraction,
                                   std::uint64_t seed) {
  const std::vector<std::size_t> keep = subsample_indices(corpus.size(), fraction, seed);
  std::vector<CorpusEntry> out;
  out.reserve(keep.size());
  for (const std::size_t i : keep) out.push_back(corpus[i]);
  return out;
}

}  // namespace selfcorrect
