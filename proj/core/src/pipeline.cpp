#include "selfcorrect/pipeline.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

namespace selfcorrect {

void FunnelStats::add_rejection(int criterion) {
  switch (criterion) {
    case 1: ++rejected_count_mismatch; break;
    case 2: ++rejected_step_copy; break;
    case 3: ++rejected_final_answer; break;
    default: throw std::logic_error("unknown rejection criterion");
  }
}

void FunnelStats::merge(const FunnelStats& other) {
  raw_count += other.raw_count;
  after_rule_count += other.after_rule_count;
  after_prompt_count += other.after_prompt_count;
  rejected_count_mismatch += other.rejected_count_mismatch;
  rejected_step_copy += other.rejected_step_copy;
  rejected_final_answer += other.rejected_final_answer;
}

bool FunnelStats::consistent() const {
  const long rejected = rejected_count_mismatch + rejected_step_copy + rejected_final_answer;
  return raw_count == after_rule_count + rejected && after_rule_count >= after_prompt_count &&
         after_prompt_count >= 0;
}

TemplateLibrary TemplateLibrary::defaults() {
  return TemplateLibrary{default_templates(TaskKind::numeric),
                         default_templates(TaskKind::multiple_choice)};
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers < 1) throw std::invalid_argument("workers must be positive");
  if (n == 0) return;

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto body = [&]() {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  const int n_threads = static_cast<int>(std::min<std::size_t>(
      static_cast<std::size_t>(workers), n));
  if (n_threads <= 1) {
    body();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(body);
    for (std::thread& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

Stage1Pipeline::Stage1Pipeline(LmGateway& generator, LmGateway& critiquer,
                               TemplateLibrary templates, Stage1Params params)
    : generator_(generator),
      critiquer_(critiquer),
      templates_(std::move(templates)),
      params_(std::move(params)) {
  if (params_.n_samples < 1) throw std::invalid_argument("n_samples must be positive");
  if (params_.workers < 1) throw std::invalid_argument("workers must be positive");
  if (params_.pair_cap < 0) throw std::invalid_argument("pair_cap must be non-negative");
}

std::vector<SampledSolution> Stage1Pipeline::sample_solutions(const Question& question, int n) {
  const TemplateSet& tmpl = templates_.for_kind(question.task_kind);
  GenParams gen;
  gen.temperature = params_.sample_temperature;
  gen.max_new_tokens = params_.max_new_tokens;
  gen.n_samples = n;
  const std::string prompt = build_cot_prompt(tmpl.cot, question);
  const std::vector<Completion> completions = generator_.generate(prompt, gen);

  std::vector<SampledSolution> out;
  out.reserve(completions.size());
  for (std::size_t i = 0; i < completions.size(); ++i) {
    const Completion& c = completions[i];
    const std::string id = question.id + "/s" + std::to_string(i);
    Solution solution;
    try {
      solution = parse_solution(c.text, question.id);
    } catch (const MalformedSolution&) {
      // Keep the degenerate generation as a stepless solution; grading below
      // marks it incorrect because it has no final answer.
      solution = Solution{};
      solution.question_id = question.id;
      solution.raw_text = strip_after_terminator(c.text);
    }
    solution.id = id;
    solution.provenance = params_.sample_provenance;
    solution = grade(std::move(solution), question);
    out.push_back(SampledSolution{std::move(solution), c.latency_ms, c.prompt_fingerprint,
                                  c.backend_id});
  }
  return out;
}

std::vector<SolutionPair> Stage1Pipeline::form_pairs(const std::vector<Solution>& graded) {
  std::vector<SolutionPair> pairs;
  for (const Solution& inc : graded) {
    if (inc.label != Label::incorrect) continue;
    for (const Solution& cor : graded) {
      if (cor.label != Label::correct) continue;
      if (inc.question_id != cor.question_id)
        throw std::invalid_argument("paired solutions must share a question");
      pairs.push_back(SolutionPair{inc, cor, inc.question_id});
    }
  }
  return pairs;
}

Completion Stage1Pipeline::generate_critique(const Question& question, const SolutionPair& pair) {
  const TemplateSet& tmpl = templates_.for_kind(question.task_kind);
  GenParams gen;
  gen.temperature = params_.critique_temperature;
  gen.max_new_tokens = params_.max_new_tokens;
  gen.n_samples = 1;
  const std::string prompt = build_critique_prompt(tmpl.critique, question, pair.incorrect,
                                                   pair.correct);
  std::vector<Completion> completions = critiquer_.generate(prompt, gen);
  return std::move(completions.front());
}

std::variant<Critique, Rejection> Stage1Pipeline::rule_filter(const std::string& raw_text,
                                                              const SolutionPair& pair) {
  Critique critique;
  try {
    critique = parse_critique(raw_text, pair.incorrect);
  } catch (const CritiqueParseError& e) {
    return Rejection{e.criterion, e.what()};
  }
  if (!pair.correct.final_answer.has_value())
    return Rejection{3, "hint solution lacks a final answer"};
  if (!(critique.suggested_answer == *pair.correct.final_answer))
    return Rejection{3, "suggested answer does not match the hint's final answer"};
  critique.hint_ref = pair.correct.id;
  return critique;
}

std::optional<PassingRevision> Stage1Pipeline::prompt_filter(const Question& question,
                                                             const Critique& critique,
                                                             const SolutionPair& pair) {
  const TemplateSet& tmpl = templates_.for_kind(question.task_kind);
  GenParams gen;  // greedy
  gen.max_new_tokens = params_.max_new_tokens;
  const std::string prompt = build_correction_prompt(tmpl.correction, question, critique);
  const std::vector<Completion> completions = generator_.generate(prompt, gen);
  const Completion& c = completions.front();

  Solution revision;
  try {
    revision = parse_solution(c.text, question.id);
  } catch (const MalformedSolution&) {
    return std::nullopt;
  }
  revision.id = pair.incorrect.id + "/rev";
  revision.provenance = Provenance::refined;
  revision = grade(std::move(revision), question);
  if (revision.label != Label::correct) return std::nullopt;
  return PassingRevision{std::move(revision), c.prompt_fingerprint, c.backend_id};
}

Stage1Pipeline::QuestionOutcome Stage1Pipeline::process_question(const Question& question) {
  QuestionOutcome out;
  out.solutions = sample_solutions(question, params_.n_samples);

  std::vector<Solution> graded;
  graded.reserve(out.solutions.size());
  for (const SampledSolution& s : out.solutions) graded.push_back(s.solution);

  std::vector<SolutionPair> pairs = form_pairs(graded);
  if (params_.pair_cap > 0 && static_cast<int>(pairs.size()) > params_.pair_cap)
    pairs.resize(static_cast<std::size_t>(params_.pair_cap));

  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    const SolutionPair& pair = pairs[pi];
    const Completion raw = generate_critique(question, pair);
    ++out.stats.raw_count;

    std::variant<Critique, Rejection> verdict = rule_filter(raw.text, pair);
    if (std::holds_alternative<Rejection>(verdict)) {
      out.stats.add_rejection(std::get<Rejection>(verdict).criterion);
      continue;
    }
    ++out.stats.after_rule_count;

    Critique critique = std::move(std::get<Critique>(verdict));
    std::optional<PassingRevision> passed = prompt_filter(question, critique, pair);
    if (!passed.has_value()) continue;
    ++out.stats.after_prompt_count;

    CorpusEntry entry;
    entry.id = question.id + "#p" + std::to_string(pi);
    entry.question = question;
    entry.incorrect = pair.incorrect;
    entry.critique = std::move(critique);
    entry.revision = std::move(passed->revision);
    entry.pair_index = static_cast<int>(pi);
    entry.critique_fingerprint = raw.prompt_fingerprint;
    entry.revision_fingerprint = passed->fingerprint;
    entry.critiquer_backend = raw.backend_id;
    entry.generator_backend = passed->backend;
    out.corpus.push_back(std::move(entry));
  }
  return out;
}

Stage1Result Stage1Pipeline::run_stage1(const std::vector<Question>& dataset) {
  for (const Question& q : dataset) q.validate();

  std::vector<QuestionOutcome> outcomes(dataset.size());
  parallel_for(dataset.size(), params_.workers, [&](std::size_t i) {
    try {
      outcomes[i] = process_question(dataset[i]);
    } catch (const BackendUnavailable&) {
      throw;  // persistent backend failure: abort the whole run
    } catch (const CacheMiss&) {
      throw;  // strict replay cannot make progress without the entry
    } catch (const std::exception& e) {
      outcomes[i].error = dataset[i].id + ": " + e.what();
    }
  });

  // Merge in dataset order so the output is independent of thread scheduling.
  Stage1Result result;
  for (QuestionOutcome& o : outcomes) {
    if (o.error.has_value()) {
      result.item_errors.push_back(*o.error);
      continue;
    }
    for (SampledSolution& s : o.solutions) result.solutions.push_back(std::move(s));
    for (CorpusEntry& e : o.corpus) result.corpus.push_back(std::move(e));
    result.stats.merge(o.stats);
  }
  return result;
}

}  // namespace selfcorrect
