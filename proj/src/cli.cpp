#include "rtsize/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "rtsize/dataset.hpp"
#include "rtsize/pipeline.hpp"
#include "rtsize/scoring.hpp"
#include "rtsize/synth.hpp"

namespace rtsize {

namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out = "rtsize_out";
};

struct InputOptions {
  std::string publications;
  std::string roster;
  std::string uda_map;
};

struct AnalyzeOverrides {
  std::optional<double> alpha, top_threshold, loess_span, outlier_k, practical_threshold;
  std::optional<int> min_units, loess_degree, permutations;
  std::optional<std::string> verdict_rule;
  bool williams = false;
};

KeyValueFile load_config(const GlobalOptions& g) {
  std::string path = g.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  }
  if (path.empty()) return KeyValueFile::parse("");
  return KeyValueFile::load(path);
}

Dataset load_inputs(const KeyValueFile& kv, const InputOptions& in) {
  DatasetConfig cfg = dataset_config_from(kv);
  if (!in.publications.empty()) cfg.publications = in.publications;
  if (!in.roster.empty()) cfg.roster = in.roster;
  if (cfg.publications.empty() || !fs::exists(cfg.publications))
    throw DataError("publications file not found: '" + cfg.publications.string() + "'");
  if (cfg.roster.empty() || !fs::exists(cfg.roster))
    throw DataError("roster file not found: '" + cfg.roster.string() + "'");
  return load_dataset(cfg);
}

void print_validation(const ValidationReport& report, std::ostream& err) {
  for (const auto& issue : report.issues)
    err << "warning: " << to_string(issue.kind) << ": " << issue.pub_id << ": " << issue.detail
        << '\n';
}

std::string validation_csv(const ValidationReport& report) {
  std::string out = "kind,pub_id,detail\n";
  for (const auto& i : report.issues)
    out += to_string(i.kind) + ',' + csv_escape(i.pub_id) + ',' + csv_escape(i.detail) + '\n';
  return out;
}

void add_input_options(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--publications", in.publications, "publications.jsonl (overrides config)");
  cmd->add_option("--roster", in.roster, "roster.csv (overrides config)");
}

int cmd_ingest(const GlobalOptions& g, bool out_given, const InputOptions& in, std::ostream& out,
               std::ostream& err) {
  const KeyValueFile kv = load_config(g);
  const Dataset ds = load_inputs(kv, in);
  const ValidationReport report = validate(ds);
  print_validation(report, err);
  out << "publications: " << ds.publications.size() << '\n'
      << "staff records: " << ds.roster.size() << '\n'
      << "orphaned affiliations: " << report.count(ValidationIssue::Kind::OrphanedAffiliation)
      << '\n'
      << "out-of-period publications: " << report.count(ValidationIssue::Kind::OutOfPeriod)
      << '\n';
  if (out_given) {
    fs::create_directories(g.out);
    write_text_file(fs::path(g.out) / "validation.csv", validation_csv(report));
  }
  return kExitOk;
}

int cmd_score(const GlobalOptions& g, const InputOptions& in, const std::string& baselines_path,
              std::ostream& out, std::ostream& err) {
  const KeyValueFile kv = load_config(g);
  const Dataset ds = load_inputs(kv, in);
  std::optional<Baselines> imported;
  if (!baselines_path.empty()) imported = load_baselines(baselines_path);
  const ValidationReport report = validate(ds, imported ? &*imported : nullptr);
  print_validation(report, err);
  if (report.count(ValidationIssue::Kind::NoBaselineSupport) > 0) {
    err << "error: imported baselines do not cover every publication\n";
    return kExitValidation;
  }
  const Baselines baselines = imported ? *imported : compute_baselines(ds);
  const auto units = compute_unit_scores(ds, baselines);
  const auto scientists = compute_scientist_scores(ds, baselines);
  fs::create_directories(g.out);
  write_text_file(fs::path(g.out) / "unit_scores.csv", unit_scores_csv(units));
  write_text_file(fs::path(g.out) / "scientist_scores.csv", scientist_scores_csv(scientists));
  write_text_file(fs::path(g.out) / "baselines.csv", baselines_csv(baselines));
  out << "scored " << units.size() << " units and " << scientists.size() << " scientists into "
      << g.out << '\n';
  return kExitOk;
}

int cmd_analyze(const GlobalOptions& g, const InputOptions& in, const AnalyzeOverrides& o,
                std::ostream& out, std::ostream& err) {
  const KeyValueFile kv = load_config(g);
  const Dataset ds = load_inputs(kv, in);
  AnalysisConfig cfg = analysis_config_from(kv);
  if (!in.uda_map.empty()) cfg.uda_of = load_uda_map(in.uda_map);
  if (g.seed) cfg.seed = *g.seed;
  cfg.jobs = g.jobs;
  if (o.alpha) cfg.alpha = *o.alpha;
  if (o.top_threshold) cfg.top_threshold = *o.top_threshold;
  if (o.loess_span) cfg.loess_span = *o.loess_span;
  if (o.outlier_k) cfg.outlier_k = *o.outlier_k;
  if (o.practical_threshold) cfg.practical_threshold = *o.practical_threshold;
  if (o.min_units) cfg.min_units = *o.min_units;
  if (o.loess_degree) cfg.loess_degree = *o.loess_degree;
  if (o.permutations) cfg.permutations = *o.permutations;
  if (o.verdict_rule) cfg.verdict_rule = parse_verdict_rule(*o.verdict_rule);
  if (o.williams) cfg.williams = true;
  cfg.check();

  print_validation(validate(ds), err);
  const Report report = run_analysis(ds, cfg);
  write_report(report, g.out);
  out << format_summary_table(report.summary) << '\n' << format_increasing_table(report.increasing);
  return kExitOk;
}

int cmd_simulate(const GlobalOptions& g, WorldConfig wc, const std::string& overrides,
                 std::ostream& out) {
  if (g.seed) wc.seed = *g.seed;
  if (!overrides.empty()) wc.beta_overrides = load_beta_overrides(overrides);
  const World world = generate_world(wc);
  const auto paths = world_to_files(world, g.out);
  out << "generated " << world.dataset.publications.size() << " publications, "
      << world.dataset.roster.size() << " staff records, " << world.truth.beta.size()
      << " SDSs\n";
  for (const auto& p : paths) out << "  " << p.string() << '\n';
  return kExitOk;
}

int cmd_report(const GlobalOptions& g, std::ostream& out) {
  const fs::path dir(g.out);
  out << format_summary_table(load_report_summary(dir / "report_summary.csv")) << '\n'
      << format_increasing_table(load_report_increasing(dir / "report_increasing.csv"));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Field-standardized research productivity and returns-to-size analysis",
               "rtsize"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, std::string("key = value config file (default: $") +
                                           kConfigEnv + ")");
  app.add_option("--seed", g.seed, "master random seed");
  app.add_option("--jobs", g.jobs, "parallel per-SDS workers")->check(CLI::PositiveNumber);
  auto* out_opt = app.add_option("--out", g.out, "output directory");

  InputOptions in;
  auto* ingest = app.add_subcommand("ingest", "load and validate input files");
  add_input_options(ingest, in);

  std::string baselines_path;
  auto* score = app.add_subcommand("score", "write unit, scientist and baseline scores");
  add_input_options(score, in);
  score->add_option("--baselines", baselines_path, "import baselines.csv instead of computing");

  AnalyzeOverrides o;
  auto* analyze = app.add_subcommand("analyze", "run the returns-to-size analysis");
  add_input_options(analyze, in);
  analyze->add_option("--uda-map", in.uda_map, "sds_id,uda_id CSV (overrides config)");
  analyze->add_option("--alpha", o.alpha, "significance level (default 0.1)");
  analyze->add_option("--top-threshold", o.top_threshold, "top-scientist share cut (default 0.2)");
  analyze->add_option("--min-units", o.min_units, "smallest SDS analysed (default 10)");
  analyze->add_option("--loess-span", o.loess_span, "LOESS span (default 0.75)");
  analyze->add_option("--loess-degree", o.loess_degree, "LOESS degree, 1 or 2 (default 1)");
  analyze->add_option("--outlier-k", o.outlier_k, "robust z cut for outliers (default 3)");
  analyze->add_option("--permutations", o.permutations, "permutation count (default 999)");
  analyze->add_option("--practical-threshold", o.practical_threshold,
                      "relative LOESS rise counted as increasing (default 0.05)");
  analyze->add_option("--verdict-rule", o.verdict_rule,
                      "dependence | dependence+npc | dependence+loess | dependence+either | "
                      "dependence+both");
  analyze->add_flag("--williams", o.williams, "apply Williams' correction to G");

  WorldConfig wc;
  std::string beta_overrides;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic world");
  simulate->add_option("--sds", wc.n_sds, "number of SDSs")->check(CLI::PositiveNumber);
  simulate->add_option("--universities", wc.n_universities, "number of universities")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--beta-default", wc.beta_default, "returns-to-size exponent");
  simulate->add_option("--beta-overrides", beta_overrides, "sds_id,beta CSV");
  simulate->add_option("--rho", wc.rho, "size-quality coupling in [-1, 1]");

  auto* report = app.add_subcommand("report", "print tables from an analyze output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(g, out_opt->count() > 0, in, out, err);
    if (*score) return cmd_score(g, in, baselines_path, out, err);
    if (*analyze) return cmd_analyze(g, in, o, out, err);
    if (*simulate) return cmd_simulate(g, wc, beta_overrides, out);
    if (*report) return cmd_report(g, out);
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace rtsize
