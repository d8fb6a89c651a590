#include "selfcorrect/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace selfcorrect {

namespace {

using GoldIndex = std::unordered_map<std::string, const Question*>;

GoldIndex index_questions(const std::vector<Question>& questions) {
  GoldIndex index;
  index.reserve(questions.size());
  for (const Question& q : questions) index[q.id] = &q;
  return index;
}

bool initial_correct(const RunRecord& r) {
  if (!r.initial.label.has_value())
    throw std::invalid_argument("record " + r.question_id + " has an ungraded initial solution");
  return r.initial.label == Label::correct;
}

bool final_correct(const RunRecord& r, const GoldIndex& index) {
  const auto it = index.find(r.question_id);
  if (it == index.end())
    throw std::invalid_argument("no question with id " + r.question_id + " in the gold set");
  return r.final_answer.has_value() && *r.final_answer == it->second->gold_answer;
}

void require_nonempty(const std::vector<RunRecord>& records) {
  if (records.empty()) throw EmptyRun("metrics need at least one run record");
}

double pct(long numerator, long denominator) {
  return 100.0 * static_cast<double>(numerator) / static_cast<double>(denominator);
}

}  // namespace

double initial_accuracy(const std::vector<RunRecord>& records) {
  require_nonempty(records);
  long correct = 0;
  for (const RunRecord& r : records) correct += initial_correct(r) ? 1 : 0;
  return pct(correct, static_cast<long>(records.size()));
}

double final_accuracy(const std::vector<RunRecord>& records,
                      const std::vector<Question>& questions) {
  require_nonempty(records);
  const GoldIndex index = index_questions(questions);
  long correct = 0;
  for (const RunRecord& r : records) correct += final_correct(r, index) ? 1 : 0;
  return pct(correct, static_cast<long>(records.size()));
}

ConfusionMatrix verifier_confusion(const std::vector<RunRecord>& records) {
  require_nonempty(records);
  ConfusionMatrix m;
  for (const RunRecord& r : records) {
    const bool positive = !initial_correct(r);  // incorrect initial
    const bool predicted = r.judgment.decision == Decision::refine;
    if (positive && predicted) ++m.tp;
    if (!positive && predicted) ++m.fp;
    if (positive && !predicted) ++m.fn;
    if (!positive && !predicted) ++m.tn;
  }
  return m;
}

F1Result verifier_f1(const std::vector<RunRecord>& records) {
  const ConfusionMatrix m = verifier_confusion(records);
  F1Result out;
  if (m.actual_positives() == 0 && m.predicted_positives() == 0) {
    out.undefined = true;
    return out;
  }
  if (m.tp == 0) return out;  // defined, but precision or recall is zero
  const double precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  const double recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  out.value_pct = 100.0 * 2.0 * precision * recall / (precision + recall);
  return out;
}

BehaviorStats behavior_stats(const std::vector<RunRecord>& records,
                             const std::vector<Question>& questions) {
  require_nonempty(records);
  const GoldIndex index = index_questions(questions);
  BehaviorStats stats;
  for (const RunRecord& r : records) {
    if (!r.refinement.has_value()) continue;
    ++stats.attempts;
    if (!initial_correct(r) && final_correct(r, index)) ++stats.successes;
  }
  stats.freq_pct = pct(stats.attempts, static_cast<long>(records.size()));
  stats.contrib_pct = stats.attempts == 0 ? 0.0 : pct(stats.successes, stats.attempts);
  return stats;
}

Decomposition accuracy_decomposition(const std::vector<RunRecord>& records,
                                     const std::vector<Question>& questions) {
  require_nonempty(records);
  const GoldIndex index = index_questions(questions);
  long initial_count = 0;
  long final_count = 0;
  long fixes = 0;
  long breaks = 0;
  for (const RunRecord& r : records) {
    const bool before = initial_correct(r);
    const bool after = final_correct(r, index);
    initial_count += before ? 1 : 0;
    final_count += after ? 1 : 0;
    if (!before && after) ++fixes;
    if (before && !after) ++breaks;
  }
  if (final_count - initial_count != fixes - breaks)
    throw std::logic_error("accuracy delta does not decompose into fixes minus breaks");

  const long n = static_cast<long>(records.size());
  Decomposition out;
  out.fixes = fixes;
  out.breaks = breaks;
  out.gain_pct = pct(fixes, n);
  out.breakage_pct = pct(breaks, n);
  // Defined as the literal difference so delta == gain - breakage bit-for-bit
  // at any n; pct(fixes - breaks, n) can drift by one ulp when n is not a
  // power of two.
  out.delta_pct = out.gain_pct - out.breakage_pct;
  return out;
}

double latency_overhead(const std::vector<RunRecord>& records) {
  require_nonempty(records);
  double sum = 0.0;
  for (const RunRecord& r : records) {
    if (!(r.timing.generate_ms > 0.0))
      throw MissingTimings("record " + r.question_id + " lacks a generation time");
    sum += (r.timing.generate_ms + r.timing.verify_ms + r.timing.refine_ms) /
           r.timing.generate_ms;
  }
  return sum / static_cast<double>(records.size());
}

RunReport build_report(const std::vector<RunRecord>& records,
                       const std::vector<Question>& questions, bool include_latency) {
  RunReport report;
  report.n_records = static_cast<long>(records.size());
  report.initial_accuracy_pct = initial_accuracy(records);
  report.final_accuracy_pct = final_accuracy(records, questions);
  report.delta_pct = report.final_accuracy_pct - report.initial_accuracy_pct;
  report.f1 = verifier_f1(records);
  report.confusion = verifier_confusion(records);
  report.behavior = behavior_stats(records, questions);
  report.decomposition = accuracy_decomposition(records, questions);
  if (include_latency) {
    report.has_latency = true;
    report.latency_overhead_x = latency_overhead(records);
  }
  return report;
}

std::string report_to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["n_records"] = r.n_records;
  j["initial_accuracy_pct"] = r.initial_accuracy_pct;
  j["final_accuracy_pct"] = r.final_accuracy_pct;
  j["delta_pct"] = r.delta_pct;
  j["verifier_f1_pct"] = r.f1.value_pct;
  j["verifier_f1_undefined"] = r.f1.undefined;
  j["confusion"] = {{"tp", r.confusion.tp},
                    {"fp", r.confusion.fp},
                    {"tn", r.confusion.tn},
                    {"fn", r.confusion.fn}};
  j["freq_pct"] = r.behavior.freq_pct;
  j["contrib_pct"] = r.behavior.contrib_pct;
  j["attempts"] = r.behavior.attempts;
  j["successes"] = r.behavior.successes;
  j["gain_pct"] = r.decomposition.gain_pct;
  j["breakage_pct"] = r.decomposition.breakage_pct;
  j["fixes"] = r.decomposition.fixes;
  j["breaks"] = r.decomposition.breaks;
  if (r.has_latency) j["latency_overhead_x"] = r.latency_overhead_x;
  return j.dump(2) + "\n";
}

namespace {

std::string fixed1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void row(std::ostringstream& out, const std::string& name, const std::string& value) {
  out << name;
  for (std::size_t i = name.size(); i < 28; ++i) out << ' ';
  out << value << '\n';
}

}  // namespace

std::string report_to_text(const RunReport& r) {
  std::ostringstream out;
  row(out, "records", std::to_string(r.n_records));
  row(out, "initial accuracy (%)", fixed1(r.initial_accuracy_pct));
  row(out, "final accuracy (%)", fixed1(r.final_accuracy_pct));
  row(out, "delta (pp)", fixed1(r.delta_pct));
  row(out, "verifier F1 (%)",
      r.f1.undefined ? fixed1(r.f1.value_pct) + " (undefined)" : fixed1(r.f1.value_pct));
  row(out, "confusion tp/fp/tn/fn",
      std::to_string(r.confusion.tp) + "/" + std::to_string(r.confusion.fp) + "/" +
          std::to_string(r.confusion.tn) + "/" + std::to_string(r.confusion.fn));
  row(out, "refine frequency (%)", fixed1(r.behavior.freq_pct));
  row(out, "refine contribution (%)", fixed1(r.behavior.contrib_pct));
  row(out, "attempts", std::to_string(r.behavior.attempts));
  row(out, "successes", std::to_string(r.behavior.successes));
  row(out, "gain (pp)", fixed1(r.decomposition.gain_pct));
  row(out, "breakage (pp)", fixed1(r.decomposition.breakage_pct));
  if (r.has_latency) row(out, "latency overhead (x)", fixed2(r.latency_overhead_x));
  return out.str();
}

std::string report_to_csv(const RunReport& r) {
  std::ostringstream out;
  out << "n_records,initial_accuracy_pct,final_accuracy_pct,delta_pct,verifier_f1_pct,"
         "verifier_f1_undefined,tp,fp,tn,fn,freq_pct,contrib_pct,attempts,successes,"
         "gain_pct,breakage_pct,fixes,breaks,latency_overhead_x\n";
  out << r.n_records << ',' << r.initial_accuracy_pct << ',' << r.final_accuracy_pct << ','
      << r.delta_pct << ',' << r.f1.value_pct << ',' << (r.f1.undefined ? 1 : 0) << ','
      << r.confusion.tp << ',' << r.confusion.fp << ',' << r.confusion.tn << ','
      << r.confusion.fn << ',' << r.behavior.freq_pct << ',' << r.behavior.contrib_pct << ','
      << r.behavior.attempts << ',' << r.behavior.successes << ',' << r.decomposition.gain_pct
      << ',' << r.decomposition.breakage_pct << ',' << r.decomposition.fixes << ','
      << r.decomposition.breaks << ',';
  if (r.has_latency)
    out << r.latency_overhead_x;
  out << '\n';
  return out.str();
}

}  // namespace selfcorrect
