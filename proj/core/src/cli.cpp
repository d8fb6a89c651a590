#include "selfcorrect/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <memory>
#include <unordered_map>

#include <json.hpp>

#include "selfcorrect/emitter.hpp"
#include "selfcorrect/engine.hpp"
#include "selfcorrect/gateway.hpp"
#include "selfcorrect/jsonl.hpp"
#include "selfcorrect/metrics.hpp"
#include "selfcorrect/pipeline.hpp"
#include "selfcorrect/rundir.hpp"
#include "selfcorrect/textcodec.hpp"

namespace selfcorrect::cli {

namespace {

using json = nlohmann::ordered_json;

// --- backend wiring ----------------------------------------------------------

std::shared_ptr<Backend> build_role_backend(const RunConfig& config,
                                            const BackendSettings& settings,
                                            const std::string& role,
                                            const std::shared_ptr<ReplayCache>& cache,
                                            const BackendFactory& factory) {
  std::shared_ptr<Backend> inner;
  if (factory != nullptr) {
    inner = factory(role);
  } else if (!settings.base_url.empty()) {
    HttpBackendConfig http;
    http.id = role;
    http.base_url = settings.base_url;
    http.model = settings.model;
    http.chat_path = settings.chat_path;
    http.score_path = settings.score_path;
    http.auth_env = settings.auth_env;
    http.timeout_ms = settings.timeout_ms;
    inner = std::make_shared<HttpBackend>(http);
  }
  if (cache != nullptr)
    return std::make_shared<ReplayBackend>(cache, replay_mode_from_string(config.replay_mode),
                                           inner, role);
  if (inner == nullptr)
    throw ConfigInvalid("backend role '" + role +
                        "' has neither a base_url nor a replay cache to serve it");
  return inner;
}

struct Gateways {
  std::shared_ptr<ReplayCache> cache;
  std::unique_ptr<LmGateway> generator;
  std::unique_ptr<LmGateway> critiquer;
  std::unique_ptr<LmGateway> refiner;
  std::unique_ptr<LmGateway> verifier;
};

// `verify_task_kind` picks the few-shot exemplars for a prompted verifier.
Gateways build_gateways(const RunConfig& config, TaskKind verify_task_kind,
                        const BackendFactory& factory) {
  Gateways g;
  if (!config.replay_cache.empty()) g.cache = std::make_shared<ReplayCache>(config.replay_cache);

  GatewayOptions options;
  options.max_in_flight = std::max(config.workers, options.max_in_flight);

  const auto make = [&](const BackendSettings& settings, const std::string& role) {
    return std::make_unique<LmGateway>(
        build_role_backend(config, settings, role, g.cache, factory), options);
  };
  g.generator = make(config.generator, "generator");
  g.critiquer = make(config.critiquer, "critiquer");
  g.refiner = make(config.refiner, "refiner");

  std::shared_ptr<Backend> verifier_backend;
  if (config.verifier_kind != VerifierKind::oracle) {
    verifier_backend = build_role_backend(config, config.verifier, "verifier", g.cache, factory);
    if (config.verifier_kind == VerifierKind::prompted)
      verifier_backend = std::make_shared<PromptedVerifier>(
          verifier_backend, default_templates(verify_task_kind).verify);
    g.verifier = std::make_unique<LmGateway>(verifier_backend, options);
  }
  return g;
}

// --- shared helpers ------------------------------------------------------------

std::vector<Question> load_dataset(const std::string& path, const std::string& which) {
  if (path.empty())
    throw ConfigInvalid("this stage needs dataset." + which + " in the config");
  std::vector<Question> questions = load_questions(path);
  if (questions.empty()) throw ConfigInvalid("dataset." + which + " is empty: " + path);
  return questions;
}

std::unordered_map<std::string, const Question*> index_questions(
    const std::vector<Question>& questions) {
  std::unordered_map<std::string, const Question*> index;
  index.reserve(questions.size());
  for (const Question& q : questions) index[q.id] = &q;
  return index;
}

const Question& question_by_id(const std::unordered_map<std::string, const Question*>& index,
                               const std::string& id) {
  const auto it = index.find(id);
  if (it == index.end())
    throw std::runtime_error("artifact references unknown question id '" + id + "'");
  return *it->second;
}

Stage1Params stage1_params(const RunConfig& config) {
  Stage1Params params;
  params.n_samples = config.n_samples;
  params.sample_temperature = config.sample_temperature;
  params.critique_temperature = config.critique_temperature;
  params.max_new_tokens = config.max_new_tokens;
  params.pair_cap = config.pair_cap;
  params.workers = config.workers;
  params.sample_provenance = config.sample_provenance;
  return params;
}

EngineConfig engine_config(const RunConfig& config, double threshold) {
  EngineConfig ec;
  ec.verifier_kind = config.verifier_kind;
  ec.refiner_kind = config.refiner_kind;
  ec.threshold = threshold;
  ec.max_new_tokens = config.max_new_tokens;
  ec.random_seed = config.seed;
  ec.two_pass_refine = config.two_pass_refine;
  return ec;
}

// Greedy initial solution for evaluation-side stages; generations without
// step structure become stepless incorrect solutions, like stage-1 sampling.
SampledSolution greedy_initial(LmGateway& generator, const TemplateLibrary& templates,
                               const Question& question, int max_new_tokens) {
  GenParams params;
  params.max_new_tokens = max_new_tokens;
  const std::string prompt =
      build_cot_prompt(templates.for_kind(question.task_kind).cot, question);
  const Completion c = generator.generate(prompt, params).front();

  Solution solution;
  try {
    solution = parse_solution(c.text, question.id);
  } catch (const MalformedSolution&) {
    solution.question_id = question.id;
    solution.raw_text = strip_after_terminator(c.text);
  }
  solution.id = question.id + "/init";
  solution = grade(std::move(solution), question);
  return SampledSolution{std::move(solution), c.latency_ms, c.prompt_fingerprint, c.backend_id};
}

bool skip_if_current(RunDir& dir, const std::vector<std::string>& artifacts,
                     const std::string& stage) {
  const bool current = std::all_of(artifacts.begin(), artifacts.end(), [&](const std::string& a) {
    return dir.stage_current(a);
  });
  if (current)
    std::cout << stage << ": artifacts up to date, nothing to do\n";
  return current;
}

std::string fraction_suffix(double fraction) {
  if (fraction >= 1.0) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_f%g", fraction);
  return buf;
}

// --- stages ---------------------------------------------------------------------

void stage_sample(const RunConfig& config, RunDir& dir, const BackendFactory& factory) {
  if (skip_if_current(dir, {"solutions.jsonl"}, "sample")) return;
  const std::vector<Question> questions = load_dataset(config.train_path, "train");

  Gateways g = build_gateways(config, questions.front().task_kind, factory);
  Stage1Pipeline pipeline(*g.generator, *g.critiquer, TemplateLibrary::defaults(),
                          stage1_params(config));

  std::vector<std::vector<SampledSolution>> per_question(questions.size());
  parallel_for(questions.size(), config.workers, [&](std::size_t i) {
    per_question[i] = pipeline.sample_solutions(questions[i], config.n_samples);
  });

  std::vector<std::string> lines;
  for (const auto& sampled : per_question)
    for (const SampledSolution& s : sampled)
      lines.push_back(solution_row_to_json(SolutionRow{s.solution, s.gen_latency_ms,
                                                       s.fingerprint, s.backend_id}));
  write_lines(dir.path_of("solutions.jsonl"), lines);
  dir.record_stage("solutions.jsonl");
  std::cout << "sample: wrote " << lines.size() << " solutions for " << questions.size()
            << " questions\n";
}

void stage_pair(const RunConfig& config, RunDir& dir, const BackendFactory& /*factory*/) {
  if (skip_if_current(dir, {"pairs.jsonl"}, "pair")) return;
  const std::vector<std::string> solution_lines = read_lines(dir.require("solutions.jsonl"));

  // Group solutions by question in file (= dataset) order.
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Solution>> grouped;
  for (const std::string& line : solution_lines) {
    SolutionRow row = solution_row_from_json(line);
    auto [it, inserted] = grouped.try_emplace(row.solution.question_id);
    if (inserted) order.push_back(row.solution.question_id);
    it->second.push_back(std::move(row.solution));
  }

  std::vector<std::string> lines;
  for (const std::string& qid : order) {
    std::vector<SolutionPair> pairs = Stage1Pipeline::form_pairs(grouped[qid]);
    if (config.pair_cap > 0 && static_cast<int>(pairs.size()) > config.pair_cap)
      pairs.resize(static_cast<std::size_t>(config.pair_cap));
    for (std::size_t i = 0; i < pairs.size(); ++i)
      lines.push_back(pair_row_to_json(
          PairRow{qid, static_cast<int>(i), pairs[i].incorrect.id, pairs[i].correct.id}));
  }
  write_lines(dir.path_of("pairs.jsonl"), lines);
  dir.record_stage("pairs.jsonl");
  std::cout << "pair: wrote " << lines.size() << " pairs\n";
}

struct JoinedArtifacts {
  std::vector<Question> questions;
  std::unordered_map<std::string, const Question*> question_index;
  std::unordered_map<std::string, Solution> solutions;
  std::vector<PairRow> pairs;
};

JoinedArtifacts load_pair_join(const RunConfig& config, RunDir& dir) {
  JoinedArtifacts joined;
  joined.questions = load_dataset(config.train_path, "train");
  joined.question_index = index_questions(joined.questions);
  for (const std::string& line : read_lines(dir.require("solutions.jsonl"))) {
    SolutionRow row = solution_row_from_json(line);
    joined.solutions[row.solution.id] = std::move(row.solution);
  }
  for (const std::string& line : read_lines(dir.require("pairs.jsonl")))
    joined.pairs.push_back(pair_row_from_json(line));
  return joined;
}

SolutionPair make_pair(const JoinedArtifacts& joined, const PairRow& row) {
  const auto incorrect = joined.solutions.find(row.incorrect_id);
  const auto correct = joined.solutions.find(row.correct_id);
  if (incorrect == joined.solutions.end() || correct == joined.solutions.end())
    throw std::runtime_error("pair row references unknown solution ids (" + row.incorrect_id +
                             ", " + row.correct_id + ")");
  return SolutionPair{incorrect->second, correct->second, row.question_id};
}

void stage_critique(const RunConfig& config, RunDir& dir, const BackendFactory& factory) {
  if (skip_if_current(dir, {"critiques.jsonl"}, "critique")) return;
  const JoinedArtifacts joined = load_pair_join(config, dir);

  Gateways g = build_gateways(config, joined.questions.front().task_kind, factory);
  Stage1Pipeline pipeline(*g.generator, *g.critiquer, TemplateLibrary::defaults(),
                          stage1_params(config));

  std::vector<std::string> lines(joined.pairs.size());
  parallel_for(joined.pairs.size(), config.workers, [&](std::size_t i) {
    const PairRow& row = joined.pairs[i];
    const SolutionPair pair = make_pair(joined, row);
    const Question& question = question_by_id(joined.question_index, row.question_id);
    const Completion c = pipeline.generate_critique(question, pair);
    lines[i] = critique_row_to_json(CritiqueRow{row.question_id, row.pair_index,
                                                row.incorrect_id, row.correct_id, c.text,
                                                c.prompt_fingerprint, c.backend_id,
                                                c.latency_ms});
  });
  write_lines(dir.path_of("critiques.jsonl"), lines);
  dir.record_stage("critiques.jsonl");
  std::cout << "critique: wrote " << lines.size() << " critiques\n";
}

void stage_filter(const RunConfig& config, RunDir& dir, const BackendFactory& factory) {
  if (skip_if_current(dir, {"corpus.jsonl", "funnel.json"}, "filter")) return;
  const JoinedArtifacts joined = load_pair_join(config, dir);
  std::vector<CritiqueRow> critiques;
  for (const std::string& line : read_lines(dir.require("critiques.jsonl")))
    critiques.push_back(critique_row_from_json(line));

  Gateways g = build_gateways(config, joined.questions.front().task_kind, factory);
  Stage1Pipeline pipeline(*g.generator, *g.critiquer, TemplateLibrary::defaults(),
                          stage1_params(config));

  struct Outcome {
    FunnelStats stats;
    std::optional<CorpusEntry> entry;
  };
  std::vector<Outcome> outcomes(critiques.size());
  parallel_for(critiques.size(), config.workers, [&](std::size_t i) {
    const CritiqueRow& row = critiques[i];
    const SolutionPair pair = make_pair(
        joined, PairRow{row.question_id, row.pair_index, row.incorrect_id, row.correct_id});
    const Question& question = question_by_id(joined.question_index, row.question_id);
    Outcome& out = outcomes[i];
    ++out.stats.raw_count;

    std::variant<Critique, Rejection> verdict = Stage1Pipeline::rule_filter(row.raw_text, pair);
    if (std::holds_alternative<Rejection>(verdict)) {
      out.stats.add_rejection(std::get<Rejection>(verdict).criterion);
      return;
    }
    ++out.stats.after_rule_count;

    Critique critique = std::move(std::get<Critique>(verdict));
    std::optional<PassingRevision> passed = pipeline.prompt_filter(question, critique, pair);
    if (!passed.has_value()) return;
    ++out.stats.after_prompt_count;

    CorpusEntry entry;
    entry.id = row.question_id + "#p" + std::to_string(row.pair_index);
    entry.question = question;
    entry.incorrect = pair.incorrect;
    entry.critique = std::move(critique);
    entry.revision = std::move(passed->revision);
    entry.pair_index = row.pair_index;
    entry.critique_fingerprint = row.fingerprint;
    entry.revision_fingerprint = passed->fingerprint;
    entry.critiquer_backend = row.backend;
    entry.generator_backend = passed->backend;
    out.entry = std::move(entry);
  });

  FunnelStats stats;
  std::vector<std::string> lines;
  for (Outcome& out : outcomes) {
    stats.merge(out.stats);
    if (out.entry.has_value()) lines.push_back(corpus_entry_to_json(*out.entry));
  }
  if (!stats.consistent()) throw std::logic_error("filter funnel counts do not add up");

  write_lines(dir.path_of("corpus.jsonl"), lines);
  write_file(dir.path_of("funnel.json"), funnel_to_json(stats, {}));
  dir.record_stage("corpus.jsonl");
  dir.record_stage("funnel.json");
  std::cout << "filter: " << stats.raw_count << " raw -> " << stats.after_rule_count
            << " after rules -> " << stats.after_prompt_count << " after prompting\n";
}

void stage_emit(const RunConfig& config, RunDir& dir, const BackendFactory& /*factory*/) {
  const std::string refiner_name = "refiner_records" + fraction_suffix(config.emit_fraction) +
                                   ".jsonl";
  if (skip_if_current(dir, {refiner_name, "verifier_records.jsonl"}, "emit")) return;

  std::vector<CorpusEntry> corpus;
  for (const std::string& line : read_lines(dir.require("corpus.jsonl")))
    corpus.push_back(corpus_entry_from_json(line));

  if (config.emit_fraction < 1.0)
    corpus = subsample(corpus, config.emit_fraction, config.seed);

  std::vector<std::string> skipped;
  const std::vector<RefinerRecord> refiner_records =
      emit_refiner_records(corpus, config.all_steps_critique, &skipped);
  std::vector<std::string> refiner_lines;
  for (const RefinerRecord& r : refiner_records)
    refiner_lines.push_back(refiner_record_to_json(r));
  write_lines(dir.path_of(refiner_name), refiner_lines);
  dir.record_stage(refiner_name);
  for (const std::string& id : skipped)
    std::cerr << "emit: skipped " << id << " (critique endorses every step)\n";

  // Verifier records come from the full sampled pool, not the filtered corpus.
  const std::vector<Question> questions = load_dataset(config.train_path, "train");
  std::vector<Solution> solutions;
  for (const std::string& line : read_lines(dir.require("solutions.jsonl")))
    solutions.push_back(solution_row_from_json(line).solution);
  const std::vector<VerifierRecord> verifier_records =
      emit_verifier_records(questions, solutions);
  std::vector<std::string> verifier_lines;
  for (const VerifierRecord& r : verifier_records)
    verifier_lines.push_back(verifier_record_to_json(r));
  write_lines(dir.path_of("verifier_records.jsonl"), verifier_lines);
  dir.record_stage("verifier_records.jsonl");

  std::cout << "emit: wrote " << refiner_lines.size() << " refiner records ("
            << refiner_name << ") and " << verifier_lines.size() << " verifier records\n";
}

void stage_select_threshold(const RunConfig& config, RunDir& dir, const BackendFactory& factory) {
  if (skip_if_current(dir, {"threshold.json"}, "select-threshold")) return;
  const std::vector<Question> questions = load_dataset(config.dev_path, "dev");

  Gateways g = build_gateways(config, questions.front().task_kind, factory);
  const TemplateLibrary templates = TemplateLibrary::defaults();
  // The threshold in the engine config is irrelevant here; only probabilities
  // and refinement outcomes feed the scan.
  CorrectionEngine engine(g.refiner.get(), g.verifier.get(), templates,
                          engine_config(config, 0.5));

  std::vector<DevRecord> records(questions.size());
  parallel_for(questions.size(), config.workers, [&](std::size_t i) {
    const Question& question = questions[i];
    const SampledSolution initial =
        greedy_initial(*g.generator, templates, question, config.max_new_tokens);
    DevRecord& r = records[i];
    r.p_correct = engine.judge(question, initial.solution).p_correct;
    r.initial_correct = initial.solution.is_correct();
    const Refinement refined = engine.refine(question, initial.solution);
    const Solution graded = grade(refined.revised, question);
    r.refined_correct = graded.is_correct();
  });

  const Threshold threshold = select_threshold(records, config.dev_path);
  write_file(dir.path_of("threshold.json"), threshold_to_json(threshold, records.size()));
  dir.record_stage("threshold.json");
  std::cout << "select-threshold: value " << threshold.value << " (dev accuracy "
            << threshold.dev_accuracy_at_value << "%)\n";
}

double effective_threshold(const RunConfig& config, RunDir& dir) {
  if (config.threshold_source == "fixed") return config.threshold;
  return threshold_from_json(read_file(dir.require("threshold.json"))).value;
}

void stage_evaluate(const RunConfig& config, RunDir& dir, const BackendFactory& factory) {
  if (skip_if_current(dir, {"run_records.jsonl"}, "evaluate")) return;
  const std::vector<Question> questions = load_dataset(config.test_path, "test");
  const double threshold = effective_threshold(config, dir);

  Gateways g = build_gateways(config, questions.front().task_kind, factory);
  const TemplateLibrary templates = TemplateLibrary::defaults();
  CorrectionEngine engine(g.refiner.get(), g.verifier.get(), templates,
                          engine_config(config, threshold));

  std::vector<std::string> lines(questions.size());
  parallel_for(questions.size(), config.workers, [&](std::size_t i) {
    const Question& question = questions[i];
    const SampledSolution initial =
        greedy_initial(*g.generator, templates, question, config.max_new_tokens);
    const RunRecord record =
        engine.self_correct(question, initial.solution, initial.gen_latency_ms);
    lines[i] = run_record_to_json(record);
  });
  write_lines(dir.path_of("run_records.jsonl"), lines);
  dir.record_stage("run_records.jsonl");
  std::cout << "evaluate: wrote " << lines.size() << " run records (threshold " << threshold
            << ")\n";
}

void stage_rerank(const RunConfig& config, RunDir& dir, const BackendFactory& factory) {
  if (skip_if_current(dir, {"rerank.jsonl", "rerank_summary.json"}, "rerank")) return;
  const std::vector<Question> questions = load_dataset(config.test_path, "test");

  Gateways g = build_gateways(config, questions.front().task_kind, factory);
  const TemplateLibrary templates = TemplateLibrary::defaults();
  CorrectionEngine engine(g.refiner.get(), g.verifier.get(), templates,
                          engine_config(config, config.threshold));

  std::vector<std::string> lines(questions.size());
  std::vector<int> vote_correct(questions.size(), 0);
  std::vector<int> rerank_correct(questions.size(), 0);
  parallel_for(questions.size(), config.workers, [&](std::size_t i) {
    const Question& question = questions[i];
    GenParams params;
    params.temperature = config.sample_temperature;
    params.max_new_tokens = config.max_new_tokens;
    params.n_samples = config.rerank_k;
    const std::string prompt =
        build_cot_prompt(templates.for_kind(question.task_kind).cot, question);
    const std::vector<Completion> completions = g.generator->generate(prompt, params);

    CandidateSet set;
    set.question_id = question.id;
    for (std::size_t c = 0; c < completions.size(); ++c) {
      Solution solution;
      try {
        solution = parse_solution(completions[c].text, question.id);
      } catch (const MalformedSolution&) {
        solution.question_id = question.id;
        solution.raw_text = strip_after_terminator(completions[c].text);
      }
      solution.id = question.id + "/c" + std::to_string(c);
      solution = grade(std::move(solution), question);
      const double p = engine.judge(question, solution).p_correct;
      set.candidates.push_back(ScoredCandidate{std::move(solution), p});
    }

    RerankRow row;
    row.question_id = question.id;
    try {
      row.vote_answer = weighted_vote(set);
      row.vote_correct = *row.vote_answer == question.gold_answer;
    } catch (const NoValidAnswer&) {
    }
    try {
      row.rerank_answer = engine.rerank_with_refine(question, set, config.rerank_c);
      row.rerank_correct = *row.rerank_answer == question.gold_answer;
    } catch (const NoValidAnswer&) {
    }
    vote_correct[i] = row.vote_correct ? 1 : 0;
    rerank_correct[i] = row.rerank_correct ? 1 : 0;
    lines[i] = rerank_row_to_json(row);
  });

  write_lines(dir.path_of("rerank.jsonl"), lines);
  const long votes = std::count(vote_correct.begin(), vote_correct.end(), 1);
  const long reranks = std::count(rerank_correct.begin(), rerank_correct.end(), 1);
  json summary;
  summary["n_questions"] = questions.size();
  summary["k"] = config.rerank_k;
  summary["c"] = config.rerank_c;
  summary["vote_accuracy_pct"] = 100.0 * static_cast<double>(votes) /
                                 static_cast<double>(questions.size());
  summary["rerank_accuracy_pct"] = 100.0 * static_cast<double>(reranks) /
                                   static_cast<double>(questions.size());
  write_file(dir.path_of("rerank_summary.json"), summary.dump(2) + "\n");
  dir.record_stage("rerank.jsonl");
  dir.record_stage("rerank_summary.json");
  std::cout << "rerank: vote accuracy " << summary["vote_accuracy_pct"] << "%, rerank accuracy "
            << summary["rerank_accuracy_pct"] << "%\n";
}

void stage_report(const RunConfig& config, RunDir& dir, const BackendFactory& /*factory*/) {
  const std::vector<Question> questions = load_dataset(config.test_path, "test");
  std::vector<RunRecord> records;
  for (const std::string& line : read_lines(dir.require("run_records.jsonl")))
    records.push_back(run_record_from_json(line));

  const bool with_latency = std::all_of(records.begin(), records.end(), [](const RunRecord& r) {
    return r.timing.generate_ms > 0.0;
  });
  const RunReport report = build_report(records, questions, with_latency);

  write_file(dir.path_of("report.json"), report_to_json(report));
  write_file(dir.path_of("report.txt"), report_to_text(report));
  write_file(dir.path_of("report.csv"), report_to_csv(report));
  dir.record_stage("report.json");
  dir.record_stage("report.txt");
  dir.record_stage("report.csv");
  std::cout << report_to_text(report);
}

}  // namespace

const std::vector<std::string> kSubcommands = {
    "sample", "pair",   "critique",         "filter", "emit",
    "select-threshold", "evaluate", "rerank", "report"};

int run_stage(const std::string& name, const RunConfig& config, const std::string& run_dir,
              const BackendFactory& inner_factory) {
  try {
    const std::string effective = run_dir.empty() ? config.run_dir : run_dir;
    if (effective.empty())
      throw ConfigInvalid("no run directory: set run.dir in the config or pass --run-dir");

    RunDir dir(effective, config_hash(config));
    DirLock lock(dir.root());

    if (name == "sample") stage_sample(config, dir, inner_factory);
    else if (name == "pair") stage_pair(config, dir, inner_factory);
    else if (name == "critique") stage_critique(config, dir, inner_factory);
    else if (name == "filter") stage_filter(config, dir, inner_factory);
    else if (name == "emit") stage_emit(config, dir, inner_factory);
    else if (name == "select-threshold") stage_select_threshold(config, dir, inner_factory);
    else if (name == "evaluate") stage_evaluate(config, dir, inner_factory);
    else if (name == "rerank") stage_rerank(config, dir, inner_factory);
    else if (name == "report") stage_report(config, dir, inner_factory);
    else throw ConfigInvalid("unknown subcommand '" + name + "'");
    return kExitOk;
  } catch (const ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const RunDirLocked& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return kExitMissingArtifact;
  } catch (const BackendUnavailable& e) {
    std::cerr << "backend failure: " << e.what() << '\n';
    return kExitBackend;
  } catch (const CacheMiss& e) {
    std::cerr << "backend failure: " << e.what() << '\n';
    return kExitBackend;
  } catch (const MalformedScore& e) {
    std::cerr << "backend failure: " << e.what() << '\n';
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace selfcorrect::cli
