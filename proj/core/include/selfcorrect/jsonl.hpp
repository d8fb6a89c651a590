#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfcorrect/emitter.hpp"
#include "selfcorrect/engine.hpp"
#include "selfcorrect/pipeline.hpp"
#include "selfcorrect/types.hpp"

namespace selfcorrect {

// A JSONL line that does not decode into the expected row shape.
struct MalformedRow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- artifact rows -----------------------------------------------------------
// Every row type serializes to a single JSON object line with a fixed key
// order, so identical values always produce identical bytes.

struct SolutionRow {
  Solution solution;
  double gen_latency_ms = 0.0;
  std::string fingerprint;
  std::string backend;
};

struct PairRow {
  std::string question_id;
  int pair_index = 0;
  std::string incorrect_id;
  std::string correct_id;
};

struct CritiqueRow {
  std::string question_id;
  int pair_index = 0;
  std::string incorrect_id;
  std::string correct_id;
  std::string raw_text;
  std::string fingerprint;
  std::string backend;
  double latency_ms = 0.0;
};

struct RerankRow {
  std::string question_id;
  std::optional<CanonicalAnswer> vote_answer;
  std::optional<CanonicalAnswer> rerank_answer;
  bool vote_correct = false;
  bool rerank_correct = false;
};

std::string solution_row_to_json(const SolutionRow& row);
SolutionRow solution_row_from_json(const std::string& line);

std::string pair_row_to_json(const PairRow& row);
PairRow pair_row_from_json(const std::string& line);

std::string critique_row_to_json(const CritiqueRow& row);
CritiqueRow critique_row_from_json(const std::string& line);

std::string corpus_entry_to_json(const CorpusEntry& entry);
CorpusEntry corpus_entry_from_json(const std::string& line);

std::string refiner_record_to_json(const RefinerRecord& record);
RefinerRecord refiner_record_from_json(const std::string& line);

std::string verifier_record_to_json(const VerifierRecord& record);
VerifierRecord verifier_record_from_json(const std::string& line);

std::string run_record_to_json(const RunRecord& record);
RunRecord run_record_from_json(const std::string& line);

std::string rerank_row_to_json(const RerankRow& row);
RerankRow rerank_row_from_json(const std::string& line);

std::string question_to_json(const Question& question);
Question question_from_json(const std::string& line);

// --- single-object artifacts --------------------------------------------------

std::string funnel_to_json(const FunnelStats& stats, const std::vector<std::string>& item_errors);
FunnelStats funnel_from_json(const std::string& text, std::vector<std::string>* item_errors);

std::string threshold_to_json(const Threshold& threshold, std::size_t n_dev);
Threshold threshold_from_json(const std::string& text);

// --- file helpers -------------------------------------------------------------

std::vector<std::string> read_lines(const std::string& path);  // blank lines skipped
void write_lines(const std::string& path, const std::vector<std::string>& lines);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Loads a dataset in either of two JSONL shapes, telling them apart per line:
// records with an "answerKey" plus question stem/choices become
// multiple-choice questions; records whose "answer" text carries a
// "#### <gold>" marker become numeric ones. Missing ids default to "q<index>".
std::vector<Question> load_questions(const std::string& path);

}  // namespace selfcorrect
