#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "selfcorrect/types.hpp"

namespace selfcorrect {

struct EmptyRun : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingTimings : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Positive class = "initial solution is incorrect"; a refine decision is a
// positive prediction.
struct ConfusionMatrix {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long total() const { return tp + fp + tn + fn; }
  long actual_positives() const { return tp + fn; }
  long predicted_positives() const { return tp + fp; }
};

struct F1Result {
  double value_pct = 0.0;
  // True when there were neither positive labels nor positive predictions, so
  // precision and recall are both 0/0; the value is reported as 0.
  bool undefined = false;
};

struct BehaviorStats {
  double freq_pct = 0.0;     // attempts / record count * 100
  double contrib_pct = 0.0;  // successes / attempts * 100, 0 when no attempts
  long attempts = 0;
  long successes = 0;  // attempts whose initial was incorrect and final is correct
};

// How the accuracy moved, split into refinements that fixed a wrong answer
// and refinements that broke a right one. delta == gain - breakage holds
// exactly because all three derive from the same integer counts.
struct Decomposition {
  double gain_pct = 0.0;
  double breakage_pct = 0.0;
  double delta_pct = 0.0;
  long fixes = 0;
  long breaks = 0;
};

double initial_accuracy(const std::vector<RunRecord>& records);
double final_accuracy(const std::vector<RunRecord>& records,
                      const std::vector<Question>& questions);

ConfusionMatrix verifier_confusion(const std::vector<RunRecord>& records);
F1Result verifier_f1(const std::vector<RunRecord>& records);

BehaviorStats behavior_stats(const std::vector<RunRecord>& records,
                             const std::vector<Question>& questions);

Decomposition accuracy_decomposition(const std::vector<RunRecord>& records,
                                     const std::vector<Question>& questions);

// Mean over runs of (generate + verify + refine) / generate. Throws
// MissingTimings when any record lacks a positive generation time.
double latency_overhead(const std::vector<RunRecord>& records);

// Everything the report subcommand prints, in one aggregate.
struct RunReport {
  long n_records = 0;
  double initial_accuracy_pct = 0.0;
  double final_accuracy_pct = 0.0;
  double delta_pct = 0.0;
  F1Result f1;
  ConfusionMatrix confusion;
  BehaviorStats behavior;
  Decomposition decomposition;
  bool has_latency = false;
  double latency_overhead_x = 0.0;
};

RunReport build_report(const std::vector<RunRecord>& records,
                       const std::vector<Question>& questions, bool include_latency = true);

std::string report_to_json(const RunReport& report);  // serialized JSON object
std::string report_to_text(const RunReport& report);  // aligned plain-text table
std::string report_to_csv(const RunReport& report);   // header line + one data row

}  // namespace selfcorrect
