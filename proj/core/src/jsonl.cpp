#include "selfcorrect/jsonl.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "selfcorrect/textcodec.hpp"

namespace selfcorrect {

namespace {

using json = nlohmann::ordered_json;

json parse_object(const std::string& text, const char* what) {
  json j = json::parse(text, /*cb=*/nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    throw MalformedRow(std::string("not a JSON object: ") + what);
  return j;
}

template <typename T>
T field(const json& j, const char* key, const char* what) {
  const auto it = j.find(key);
  if (it == j.end())
    throw MalformedRow(std::string(what) + " row is missing key '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw MalformedRow(std::string(what) + " row has a mistyped '" + key + "'");
  }
}

json answer_to_json(const CanonicalAnswer& a) {
  return json{{"kind", to_string(a.kind)}, {"value", a.value}};
}

CanonicalAnswer answer_from_json(const json& j, const char* what) {
  if (!j.is_object()) throw MalformedRow(std::string(what) + ": answer must be an object");
  CanonicalAnswer a;
  a.kind = answer_kind_from_string(field<std::string>(j, "kind", what));
  a.value = field<std::string>(j, "value", what);
  return a;
}

json opt_answer_to_json(const std::optional<CanonicalAnswer>& a) {
  if (!a.has_value()) return nullptr;
  return answer_to_json(*a);
}

std::optional<CanonicalAnswer> opt_answer_from_json(const json& j, const char* what) {
  if (j.is_null()) return std::nullopt;
  return answer_from_json(j, what);
}

json solution_to_json_obj(const Solution& s) {
  json steps = json::array();
  for (const Step& step : s.steps) steps.push_back(json{{"index", step.index}, {"text", step.text}});
  json j;
  j["id"] = s.id;
  j["question_id"] = s.question_id;
  j["steps"] = std::move(steps);
  j["final_answer"] = opt_answer_to_json(s.final_answer);
  j["raw_text"] = s.raw_text;
  j["label"] = s.label.has_value() ? json(to_string(*s.label)) : json(nullptr);
  j["provenance"] = to_string(s.provenance);
  return j;
}

Solution solution_from_json_obj(const json& j, const char* what) {
  if (!j.is_object()) throw MalformedRow(std::string(what) + ": solution must be an object");
  Solution s;
  s.id = field<std::string>(j, "id", what);
  s.question_id = field<std::string>(j, "question_id", what);
  const auto steps = j.find("steps");
  if (steps == j.end() || !steps->is_array())
    throw MalformedRow(std::string(what) + ": solution needs a steps array");
  for (const json& step : *steps) {
    Step parsed;
    parsed.index = field<int>(step, "index", what);
    parsed.text = field<std::string>(step, "text", what);
    s.steps.push_back(std::move(parsed));
  }
  s.final_answer = opt_answer_from_json(j.value("final_answer", json(nullptr)), what);
  s.raw_text = field<std::string>(j, "raw_text", what);
  const json label = j.value("label", json(nullptr));
  if (!label.is_null()) s.label = label_from_string(label.get<std::string>());
  s.provenance = provenance_from_string(field<std::string>(j, "provenance", what));
  return s;
}

json critique_to_json_obj(const Critique& c) {
  json entries = json::array();
  for (const CritiqueEntry& e : c.entries) {
    entries.push_back(json{{"index", e.step.index},
                           {"text", e.step.text},
                           {"feedback", e.feedback},
                           {"verdict", to_string(e.verdict)}});
  }
  json j;
  j["solution_ref"] = c.solution_ref;
  j["entries"] = std::move(entries);
  j["suggested_answer"] = answer_to_json(c.suggested_answer);
  j["hint_ref"] = c.hint_ref.has_value() ? json(*c.hint_ref) : json(nullptr);
  return j;
}

Critique critique_from_json_obj(const json& j, const char* what) {
  if (!j.is_object()) throw MalformedRow(std::string(what) + ": critique must be an object");
  Critique c;
  c.solution_ref = field<std::string>(j, "solution_ref", what);
  const auto entries = j.find("entries");
  if (entries == j.end() || !entries->is_array())
    throw MalformedRow(std::string(what) + ": critique needs an entries array");
  for (const json& e : *entries) {
    CritiqueEntry entry;
    entry.step.index = field<int>(e, "index", what);
    entry.step.text = field<std::string>(e, "text", what);
    entry.feedback = field<std::string>(e, "feedback", what);
    entry.verdict = verdict_from_string(field<std::string>(e, "verdict", what));
    c.entries.push_back(std::move(entry));
  }
  c.suggested_answer = answer_from_json(j.at("suggested_answer"), what);
  const json hint = j.value("hint_ref", json(nullptr));
  if (!hint.is_null()) c.hint_ref = hint.get<std::string>();
  return c;
}

json question_to_json_obj(const Question& q) {
  json j;
  j["id"] = q.id;
  j["text"] = q.text;
  j["gold_answer"] = answer_to_json(q.gold_answer);
  j["task_kind"] = to_string(q.task_kind);
  json options = json::array();
  for (const ChoiceOption& o : q.options)
    options.push_back(json{{"label", o.label}, {"text", o.text}});
  j["options"] = std::move(options);
  return j;
}

Question question_from_json_obj(const json& j, const char* what) {
  Question q;
  q.id = field<std::string>(j, "id", what);
  q.text = field<std::string>(j, "text", what);
  q.gold_answer = answer_from_json(j.at("gold_answer"), what);
  q.task_kind = task_kind_from_string(field<std::string>(j, "task_kind", what));
  const auto options = j.find("options");
  if (options != j.end() && options->is_array()) {
    for (const json& o : *options) {
      ChoiceOption opt;
      opt.label = field<std::string>(o, "label", what);
      opt.text = field<std::string>(o, "text", what);
      q.options.push_back(std::move(opt));
    }
  }
  return q;
}

std::string dump_line(const json& j) { return j.dump(); }

}  // namespace

// --- solution rows -------------------------------------------------------------

std::string solution_row_to_json(const SolutionRow& row) {
  json j = solution_to_json_obj(row.solution);
  j["gen_latency_ms"] = row.gen_latency_ms;
  j["fingerprint"] = row.fingerprint;
  j["backend"] = row.backend;
  return dump_line(j);
}

SolutionRow solution_row_from_json(const std::string& line) {
  const json j = parse_object(line, "solution");
  SolutionRow row;
  row.solution = solution_from_json_obj(j, "solution");
  row.gen_latency_ms = field<double>(j, "gen_latency_ms", "solution");
  row.fingerprint = field<std::string>(j, "fingerprint", "solution");
  row.backend = field<std::string>(j, "backend", "solution");
  return row;
}

// --- pair rows -------------------------------------------------------------------

std::string pair_row_to_json(const PairRow& row) {
  json j;
  j["question_id"] = row.question_id;
  j["pair_index"] = row.pair_index;
  j["incorrect_id"] = row.incorrect_id;
  j["correct_id"] = row.correct_id;
  return dump_line(j);
}

PairRow pair_row_from_json(const std::string& line) {
  const json j = parse_object(line, "pair");
  PairRow row;
  row.question_id = field<std::string>(j, "question_id", "pair");
  row.pair_index = field<int>(j, "pair_index", "pair");
  row.incorrect_id = field<std::string>(j, "incorrect_id", "pair");
  row.correct_id = field<std::string>(j, "correct_id", "pair");
  return row;
}

// --- critique rows ---------------------------------------------------------------

std::string critique_row_to_json(const CritiqueRow& row) {
  json j;
  j["question_id"] = row.question_id;
  j["pair_index"] = row.pair_index;
  j["incorrect_id"] = row.incorrect_id;
  j["correct_id"] = row.correct_id;
  j["raw_text"] = row.raw_text;
  j["fingerprint"] = row.fingerprint;
  j["backend"] = row.backend;
  j["latency_ms"] = row.latency_ms;
  return dump_line(j);
}

CritiqueRow critique_row_from_json(const std::string& line) {
  const json j = parse_object(line, "critique");
  CritiqueRow row;
  row.question_id = field<std::string>(j, "question_id", "critique");
  row.pair_index = field<int>(j, "pair_index", "critique");
  row.incorrect_id = field<std::string>(j, "incorrect_id", "critique");
  row.correct_id = field<std::string>(j, "correct_id", "critique");
  row.raw_text = field<std::string>(j, "raw_text", "critique");
  row.fingerprint = field<std::string>(j, "fingerprint", "critique");
  row.backend = field<std::string>(j, "backend", "critique");
  row.latency_ms = field<double>(j, "latency_ms", "critique");
  return row;
}

// --- corpus entries ----------------------------------------------------------------

std::string corpus_entry_to_json(const CorpusEntry& entry) {
  json j;
  j["id"] = entry.id;
  j["question"] = question_to_json_obj(entry.question);
  j["incorrect"] = solution_to_json_obj(entry.incorrect);
  j["critique"] = critique_to_json_obj(entry.critique);
  j["revision"] = solution_to_json_obj(entry.revision);
  j["pair_index"] = entry.pair_index;
  j["critique_fingerprint"] = entry.critique_fingerprint;
  j["revision_fingerprint"] = entry.revision_fingerprint;
  j["critiquer_backend"] = entry.critiquer_backend;
  j["generator_backend"] = entry.generator_backend;
  return dump_line(j);
}

CorpusEntry corpus_entry_from_json(const std::string& line) {
  const json j = parse_object(line, "corpus");
  CorpusEntry entry;
  entry.id = field<std::string>(j, "id", "corpus");
  entry.question = question_from_json_obj(j.at("question"), "corpus");
  entry.incorrect = solution_from_json_obj(j.at("incorrect"), "corpus");
  entry.critique = critique_from_json_obj(j.at("critique"), "corpus");
  entry.revision = solution_from_json_obj(j.at("revision"), "corpus");
  entry.pair_index = field<int>(j, "pair_index", "corpus");
  entry.critique_fingerprint = field<std::string>(j, "critique_fingerprint", "corpus");
  entry.revision_fingerprint = field<std::string>(j, "revision_fingerprint", "corpus");
  entry.critiquer_backend = field<std::string>(j, "critiquer_backend", "corpus");
  entry.generator_backend = field<std::string>(j, "generator_backend", "corpus");
  return entry;
}

// --- fine-tuning records --------------------------------------------------------------

std::string refiner_record_to_json(const RefinerRecord& record) {
  json j;
  j["id"] = record.id;
  j["input"] = record.input;
  j["target"] = record.target;
  j["mask_boundary"] = record.mask_boundary;
  j["schema"] = record.schema;
  return dump_line(j);
}

RefinerRecord refiner_record_from_json(const std::string& line) {
  const json j = parse_object(line, "refiner record");
  RefinerRecord record;
  record.id = field<std::string>(j, "id", "refiner record");
  record.input = field<std::string>(j, "input", "refiner record");
  record.target = field<std::string>(j, "target", "refiner record");
  record.mask_boundary = field<std::size_t>(j, "mask_boundary", "refiner record");
  record.schema = field<int>(j, "schema", "refiner record");
  return record;
}

std::string verifier_record_to_json(const VerifierRecord& record) {
  json j;
  j["id"] = record.id;
  j["input"] = record.input;
  j["label"] = record.label;
  j["class_weight"] = record.class_weight;
  j["schema"] = record.schema;
  return dump_line(j);
}

VerifierRecord verifier_record_from_json(const std::string& line) {
  const json j = parse_object(line, "verifier record");
  VerifierRecord record;
  record.id = field<std::string>(j, "id", "verifier record");
  record.input = field<std::string>(j, "input", "verifier record");
  record.label = field<int>(j, "label", "verifier record");
  record.class_weight = field<double>(j, "class_weight", "verifier record");
  record.schema = field<int>(j, "schema", "verifier record");
  return record;
}

// --- run records ----------------------------------------------------------------------

std::string run_record_to_json(const RunRecord& record) {
  json j;
  j["question_id"] = record.question_id;
  j["initial"] = solution_to_json_obj(record.initial);
  j["judgment"] = json{{"solution_ref", record.judgment.solution_ref},
                       {"p_correct", record.judgment.p_correct},
                       {"decision", to_string(record.judgment.decision)},
                       {"verifier_kind", to_string(record.judgment.verifier_kind)}};
  if (record.refinement.has_value()) {
    j["refinement"] = json{{"critique_text", record.refinement->critique_text},
                           {"revised", solution_to_json_obj(record.refinement->revised)}};
  } else {
    j["refinement"] = nullptr;
  }
  j["final_answer"] = opt_answer_to_json(record.final_answer);
  j["timing"] = json{{"generate_ms", record.timing.generate_ms},
                     {"verify_ms", record.timing.verify_ms},
                     {"refine_ms", record.timing.refine_ms}};
  return dump_line(j);
}

RunRecord run_record_from_json(const std::string& line) {
  const json j = parse_object(line, "run record");
  RunRecord record;
  record.question_id = field<std::string>(j, "question_id", "run record");
  record.initial = solution_from_json_obj(j.at("initial"), "run record");
  const json& judgment = j.at("judgment");
  record.judgment.solution_ref = field<std::string>(judgment, "solution_ref", "run record");
  record.judgment.p_correct = field<double>(judgment, "p_correct", "run record");
  record.judgment.decision = decision_from_string(field<std::string>(judgment, "decision", "run record"));
  record.judgment.verifier_kind =
      verifier_kind_from_string(field<std::string>(judgment, "verifier_kind", "run record"));
  const json refinement = j.value("refinement", json(nullptr));
  if (!refinement.is_null()) {
    Refinement r;
    r.critique_text = field<std::string>(refinement, "critique_text", "run record");
    r.revised = solution_from_json_obj(refinement.at("revised"), "run record");
    record.refinement = std::move(r);
  }
  record.final_answer = opt_answer_from_json(j.value("final_answer", json(nullptr)), "run record");
  const json& timing = j.at("timing");
  record.timing.generate_ms = field<double>(timing, "generate_ms", "run record");
  record.timing.verify_ms = field<double>(timing, "verify_ms", "run record");
  record.timing.refine_ms = field<double>(timing, "refine_ms", "run record");
  return record;
}

// --- rerank rows -------------------------------------------------------------------------

std::string rerank_row_to_json(const RerankRow& row) {
  json j;
  j["question_id"] = row.question_id;
  j["vote_answer"] = opt_answer_to_json(row.vote_answer);
  j["rerank_answer"] = opt_answer_to_json(row.rerank_answer);
  j["vote_correct"] = row.vote_correct;
  j["rerank_correct"] = row.rerank_correct;
  return dump_line(j);
}

RerankRow rerank_row_from_json(const std::string& line) {
  const json j = parse_object(line, "rerank");
  RerankRow row;
  row.question_id = field<std::string>(j, "question_id", "rerank");
  row.vote_answer = opt_answer_from_json(j.value("vote_answer", json(nullptr)), "rerank");
  row.rerank_answer = opt_answer_from_json(j.value("rerank_answer", json(nullptr)), "rerank");
  row.vote_correct = field<bool>(j, "vote_correct", "rerank");
  row.rerank_correct = field<bool>(j, "rerank_correct", "rerank");
  return row;
}

std::string question_to_json(const Question& question) {
  return dump_line(question_to_json_obj(question));
}

Question question_from_json(const std::string& line) {
  return question_from_json_obj(parse_object(line, "question"), "question");
}

// --- single-object artifacts ----------------------------------------------------------------

std::string funnel_to_json(const FunnelStats& stats, const std::vector<std::string>& item_errors) {
  json j;
  j["raw_count"] = stats.raw_count;
  j["after_rule_count"] = stats.after_rule_count;
  j["after_prompt_count"] = stats.after_prompt_count;
  j["rejected_count_mismatch"] = stats.rejected_count_mismatch;
  j["rejected_step_copy"] = stats.rejected_step_copy;
  j["rejected_final_answer"] = stats.rejected_final_answer;
  j["item_errors"] = item_errors;
  return j.dump(2) + "\n";
}

FunnelStats funnel_from_json(const std::string& text, std::vector<std::string>* item_errors) {
  const json j = parse_object(text, "funnel");
  FunnelStats stats;
  stats.raw_count = field<long>(j, "raw_count", "funnel");
  stats.after_rule_count = field<long>(j, "after_rule_count", "funnel");
  stats.after_prompt_count = field<long>(j, "after_prompt_count", "funnel");
  stats.rejected_count_mismatch = field<long>(j, "rejected_count_mismatch", "funnel");
  stats.rejected_step_copy = field<long>(j, "rejected_step_copy", "funnel");
  stats.rejected_final_answer = field<long>(j, "rejected_final_answer", "funnel");
  if (item_errors != nullptr) {
    item_errors->clear();
    for (const json& e : j.value("item_errors", json::array()))
      item_errors->push_back(e.get<std::string>());
  }
  return stats;
}

std::string threshold_to_json(const Threshold& threshold, std::size_t n_dev) {
  json j;
  j["value"] = threshold.value;
  j["selected_on"] = threshold.selected_on;
  j["dev_accuracy_at_value"] = threshold.dev_accuracy_at_value;
  j["n_dev"] = n_dev;
  return j.dump(2) + "\n";
}

Threshold threshold_from_json(const std::string& text) {
  const json j = parse_object(text, "threshold");
  Threshold t;
  t.value = field<double>(j, "value", "threshold");
  t.selected_on = field<std::string>(j, "selected_on", "threshold");
  t.dev_accuracy_at_value = field<double>(j, "dev_accuracy_at_value", "threshold");
  return t;
}

// --- file helpers ------------------------------------------------------------------------------

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const std::string& line : lines) out << line << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

// --- dataset ingestion ---------------------------------------------------------------------------

namespace {

Question question_from_dataset_row(const json& j, std::size_t index) {
  Question q;
  q.id = j.value("id", "q" + std::to_string(index));
  if (j.contains("answerKey")) {
    // Choice-style record: {"question": {"stem", "choices": [{label, text}]}, "answerKey"}
    const json& inner = j.at("question");
    q.text = field<std::string>(inner, "stem", "dataset");
    q.task_kind = TaskKind::multiple_choice;
    for (const json& choice : inner.at("choices")) {
      ChoiceOption opt;
      const std::string raw_label = field<std::string>(choice, "label", "dataset");
      const std::optional<CanonicalAnswer> label = canonicalize_answer(raw_label);
      if (!label.has_value() || label->kind != AnswerKind::choice_label)
        throw MalformedRow("dataset row " + q.id + ": bad choice label '" + raw_label + "'");
      opt.label = label->value;
      opt.text = field<std::string>(choice, "text", "dataset");
      q.options.push_back(std::move(opt));
    }
    const std::optional<CanonicalAnswer> gold =
        canonicalize_answer(field<std::string>(j, "answerKey", "dataset"));
    if (!gold.has_value() || gold->kind != AnswerKind::choice_label)
      throw MalformedRow("dataset row " + q.id + ": bad answerKey");
    q.gold_answer = *gold;
  } else {
    // Numeric-style record: {"question", "answer": "... #### <gold>"}
    q.text = field<std::string>(j, "question", "dataset");
    q.task_kind = TaskKind::numeric;
    const std::string answer = field<std::string>(j, "answer", "dataset");
    const std::size_t marker = answer.rfind("####");
    if (marker == std::string::npos)
      throw MalformedRow("dataset row " + q.id + ": answer lacks a '####' gold marker");
    const std::optional<CanonicalAnswer> gold = canonicalize_answer(answer.substr(marker + 4));
    if (!gold.has_value() || gold->kind != AnswerKind::number)
      throw MalformedRow("dataset row " + q.id + ": bad gold answer");
    q.gold_answer = *gold;
  }
  q.validate();
  return q;
}

}  // namespace

std::vector<Question> load_questions(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::vector<Question> questions;
  questions.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i)
    questions.push_back(question_from_dataset_row(parse_object(lines[i], "dataset"), i));
  return questions;
}

}  // namespace selfcorrect
