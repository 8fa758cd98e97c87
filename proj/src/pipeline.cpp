#include "rtsize/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <set>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace rtsize {

VerdictRule parse_verdict_rule(const std::string& name) {
  if (name == "dependence") return VerdictRule::DependenceOnly;
  if (name == "dependence+npc") return VerdictRule::DependenceAndNpc;
  if (name == "dependence+loess") return VerdictRule::DependenceAndLoess;
  if (name == "dependence+either") return VerdictRule::DependenceAndEither;
  if (name == "dependence+both") return VerdictRule::DependenceAndBoth;
  throw std::invalid_argument("unknown verdict rule '" + name + "'");
}

std::string to_string(VerdictRule rule) {
  switch (rule) {
    case VerdictRule::DependenceOnly: return "dependence";
    case VerdictRule::DependenceAndNpc: return "dependence+npc";
    case VerdictRule::DependenceAndLoess: return "dependence+loess";
    case VerdictRule::DependenceAndEither: return "dependence+either";
    case VerdictRule::DependenceAndBoth: return "dependence+both";
  }
  return "dependence+either";
}

void AnalysisConfig::check() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(top_threshold >= 0.0 && top_threshold <= 1.0))
    throw std::invalid_argument("top_threshold must lie in [0, 1]");
  if (!(loess_span > 0.0 && loess_span <= 1.0))
    throw std::invalid_argument("loess_span must lie in (0, 1]");
  if (loess_degree < 1 || loess_degree > 2) throw std::invalid_argument("loess_degree must be 1 or 2");
  if (permutations < 999) throw std::invalid_argument("permutations must be >= 999");
  if (min_units < 2) throw std::invalid_argument("min_units must be >= 2");
  if (!(outlier_k > 0.0)) throw std::invalid_argument("outlier_k must be positive");
  if (practical_threshold < 0.0) throw std::invalid_argument("practical_threshold must be >= 0");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

AnalysisConfig analysis_config_from(const KeyValueFile& kv) {
  AnalysisConfig c;
  c.alpha = kv.get_double("alpha", c.alpha);
  c.top_threshold = kv.get_double("top_threshold", c.top_threshold);
  c.min_units = static_cast<int>(kv.get_int("min_units", c.min_units));
  c.loess_span = kv.get_double("loess_span", c.loess_span);
  c.loess_degree = static_cast<int>(kv.get_int("loess_degree", c.loess_degree));
  c.outlier_k = kv.get_double("outlier_k", c.outlier_k);
  c.permutations = static_cast<int>(kv.get_int("permutations", c.permutations));
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(c.seed)));
  c.practical_threshold = kv.get_double("practical_threshold", c.practical_threshold);
  if (const auto* rule = kv.find("verdict_rule")) c.verdict_rule = parse_verdict_rule(*rule);
  c.williams = kv.get_bool("williams", c.williams);
  c.jobs = static_cast<int>(kv.get_int("jobs", c.jobs));
  if (const auto path = kv.get_path("uda_map"); !path.empty()) c.uda_of = load_uda_map(path);
  return c;
}

std::map<std::string, std::string> load_uda_map(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path, {"sds_id", "uda_id"});
  std::map<std::string, std::string> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string sds = trim(t.rows[r][0]), uda = trim(t.rows[r][1]);
    if (sds.empty() || uda.empty())
      throw DataError(path.string() + ":" + std::to_string(t.line_numbers[r]) + ": empty identifier");
    if (!out.emplace(sds, uda).second)
      throw DataError(path.string() + ":" + std::to_string(t.line_numbers[r]) +
                      ": duplicate sds_id '" + sds + "'");
  }
  return out;
}

std::string uda_map_csv(const std::map<std::string, std::string>& uda_of) {
  std::string out = "sds_id,uda_id\n";
  for (const auto& [sds, uda] : uda_of) out += csv_escape(sds) + ',' + csv_escape(uda) + '\n';
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& key) {
  // FNV-1a over the key, then a splitmix64 finalizer.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : key) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = master ^ (h + 0x9e3779b97f4a7c15ULL + (master << 6) + (master >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

QualityScreen stage_quality_screen(const SdsFrame& frame, const AnalysisConfig& config) {
  QualityScreen out;
  if (static_cast<int>(frame.units.size()) < config.min_units) {
    out.not_run = true;
    out.screened_out = true;
    out.top.not_run = true;
    out.inactive.not_run = true;
    return out;
  }
  const ThresholdRule rule = config.threshold_rule();
  out.top = associate(contingency(frame, Variable::TopShare, Variable::Size, rule), config.alpha,
                      config.williams);
  out.inactive = associate(contingency(frame, Variable::InactiveShare, Variable::Size, rule),
                           config.alpha, config.williams);
  out.screened_out = out.top.significant || out.inactive.significant;
  return out;
}

AssociationResult stage_size_productivity(const SdsFrame& frame, const AnalysisConfig& config) {
  return associate(contingency(frame, Variable::Productivity, Variable::Size,
                               config.threshold_rule()),
                   config.alpha, config.williams);
}

std::string to_string(LoessVerdict v) {
  switch (v) {
    case LoessVerdict::Increasing: return "increasing";
    case LoessVerdict::Constant: return "constant";
    case LoessVerdict::NotRun: return "not_run";
  }
  return "not_run";
}

LoessAssessment assess_loess(const std::vector<std::pair<double, double>>& points,
                             const AnalysisConfig& config, bool remove_outliers) {
  LoessAssessment out;
  const std::size_t min_points =
      std::max<std::size_t>(4, static_cast<std::size_t>(config.loess_degree) + 2);
  if (points.size() < min_points) return out;

  LoessFit fit = loess_fit(points, config.loess_span, config.loess_degree);
  if (remove_outliers) {
    // A few extreme points bend the whole neighbourhood, so dropping every
    // flagged point at once would also strip their neighbours. Remove the
    // worst one, refit, and look again.
    std::set<std::size_t> excluded;
    const std::size_t max_removed = std::max<std::size_t>(1, points.size() / 5);
    while (excluded.size() < max_removed && points.size() - excluded.size() > min_points) {
      const auto flagged = detect_outliers_residual(fit, config.outlier_k);
      if (flagged.empty()) break;
      const auto kept = fit.kept_indices();
      std::size_t worst = flagged.front();
      double worst_abs = -1.0;
      for (std::size_t j = 0; j < kept.size(); ++j) {
        if (!std::binary_search(flagged.begin(), flagged.end(), kept[j])) continue;
        const double r = std::abs(fit.points[kept[j]].second - fit.fitted[j]);
        if (r > worst_abs) {
          worst_abs = r;
          worst = kept[j];
        }
      }
      excluded.insert(worst);
      fit = loess_fit(points, config.loess_span, config.loess_degree, excluded);
    }
  }

  std::vector<double> sizes;
  for (std::size_t i : fit.kept_indices()) sizes.push_back(fit.points[i].first);
  std::sort(sizes.begin(), sizes.end());
  out.x25 = quantile_sorted(sizes, 0.25);
  out.x75 = quantile_sorted(sizes, 0.75);
  out.f25 = fit.predict(out.x25);
  out.f75 = fit.predict(out.x75);
  const bool rising = out.x75 > out.x25 && out.f75 > out.f25;
  const bool material = (out.f75 - out.f25) > config.practical_threshold * std::abs(out.f25);
  out.verdict = rising && material ? LoessVerdict::Increasing : LoessVerdict::Constant;
  out.fit = std::move(fit);
  return out;
}

Confirmation stage_confirm(const SdsFrame& frame, const AnalysisConfig& config,
                           std::uint64_t seed) {
  Confirmation out;
  if (frame.units.size() < 8) return out;
  std::vector<std::pair<double, double>> points;
  points.reserve(frame.units.size());
  for (const auto& u : frame.units) points.emplace_back(u.size, u.productivity);

  out.quartiles = quartile_split(points);
  out.npc_p = npc_test(*out.quartiles, config.permutations, seed);
  out.loess_raw = assess_loess(points, config, false);
  out.loess = assess_loess(points, config, true);
  return out;
}

std::string to_string(FinalClass c) {
  switch (c) {
    case FinalClass::Excluded: return "excluded";
    case FinalClass::ConstantReturns: return "constant_returns";
    case FinalClass::IncreasingReturns: return "increasing_returns";
  }
  return "excluded";
}

FinalClass final_class_of(const SdsResult& r, const AnalysisConfig& config) {
  if (r.screened_out) return FinalClass::Excluded;
  if (!r.size_prod_assoc || !r.size_prod_assoc->significant || !(r.size_prod_assoc->tau_b > 0.0))
    return FinalClass::ConstantReturns;
  const bool npc = r.npc_p && *r.npc_p < config.alpha;
  const bool loess = r.loess_verdict == LoessVerdict::Increasing;
  bool confirmed = false;
  switch (config.verdict_rule) {
    case VerdictRule::DependenceOnly: confirmed = true; break;
    case VerdictRule::DependenceAndNpc: confirmed = npc; break;
    case VerdictRule::DependenceAndLoess: confirmed = loess; break;
    case VerdictRule::DependenceAndEither: confirmed = npc || loess; break;
    case VerdictRule::DependenceAndBoth: confirmed = npc && loess; break;
  }
  return confirmed ? FinalClass::IncreasingReturns : FinalClass::ConstantReturns;
}

SdsResult analyze_frame(const SdsFrame& frame, const std::string& uda_id,
                        const AnalysisConfig& config) {
  SdsResult r;
  r.sds_id = frame.sds_id;
  r.uda_id = uda_id;
  r.n_units = static_cast<int>(frame.units.size());
  const QualityScreen screen = stage_quality_screen(frame, config);
  r.top_assoc = screen.top;
  r.inactive_assoc = screen.inactive;
  r.screened_out = screen.screened_out;
  if (!screen.not_run) r.size_prod_assoc = stage_size_productivity(frame, config);
  if (!r.screened_out) {
    r.confirmation = stage_confirm(frame, config, derive_seed(config.seed, frame.sds_id));
    r.npc_p = r.confirmation.npc_p;
    r.loess_verdict = r.confirmation.loess.verdict;
  }
  r.final_class = final_class_of(r, config);
  return r;
}

std::string significance_stars(double p) {
  if (p < 0.05) return "**";
  if (p < 0.10) return "*";
  return "";
}

std::vector<UdaSummaryRow> summarize_by_uda(const std::vector<SdsResult>& results) {
  std::vector<UdaSummaryRow> rows;
  const char* analyses[] = {"top", "inactive", "size_prod"};
  std::set<std::string> udas;
  for (const auto& r : results) udas.insert(r.uda_id);
  for (const char* analysis : analyses) {
    UdaSummaryRow total{"TOTAL", analysis, 0, 0, 0.0};
    for (const auto& uda : udas) {
      UdaSummaryRow row{uda, analysis, 0, 0, 0.0};
      for (const auto& r : results) {
        if (r.uda_id != uda) continue;
        ++row.n_sds;
        bool sig = false;
        if (std::string(analysis) == "top") sig = r.top_assoc.significant;
        else if (std::string(analysis) == "inactive") sig = r.inactive_assoc.significant;
        else sig = r.size_prod_assoc && r.size_prod_assoc->significant;
        if (sig) ++row.n_significant;
      }
      row.share = row.n_sds ? static_cast<double>(row.n_significant) / row.n_sds : 0.0;
      total.n_sds += row.n_sds;
      total.n_significant += row.n_significant;
      rows.push_back(row);
    }
    total.share = total.n_sds ? static_cast<double>(total.n_significant) / total.n_sds : 0.0;
    rows.push_back(total);
  }
  return rows;
}

Report analyze_frames(std::vector<SdsFrame> frames, const AnalysisConfig& config) {
  config.check();
  std::sort(frames.begin(), frames.end(),
            [](const SdsFrame& a, const SdsFrame& b) { return a.sds_id < b.sds_id; });
  Report report;
  report.config = config;
  report.sds.resize(frames.size());

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(config.jobs));
  auto worker = [&](std::size_t slot) {
    try {
      for (std::size_t i = next++; i < frames.size(); i = next++) {
        const auto it = config.uda_of.find(frames[i].sds_id);
        const std::string uda = it == config.uda_of.end() ? "UNASSIGNED" : it->second;
        report.sds[i] = analyze_frame(frames[i], uda, config);
      }
    } catch (...) {
      errors[slot] = std::current_exception();
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.jobs),
                                               std::max<std::size_t>(frames.size(), 1));
  if (n_threads <= 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  report.summary = summarize_by_uda(report.sds);
  for (const auto& r : report.sds) {
    if (r.final_class != FinalClass::IncreasingReturns) continue;
    report.increasing.push_back({r.sds_id, r.uda_id, r.size_prod_assoc->tau_b,
                                 r.size_prod_assoc->p_value,
                                 significance_stars(r.size_prod_assoc->p_value)});
  }
  report.frames = std::move(frames);
  return report;
}

Report run_analysis(const Dataset& dataset, const AnalysisConfig& config) {
  config.check();
  if (dataset.publications.empty() || dataset.roster.empty())
    throw DataError("empty dataset: no publications or no roster");

  const Baselines baselines = compute_baselines(dataset);
  const auto unit_scores = compute_unit_scores(dataset, baselines);
  const auto scientist_scores = compute_scientist_scores(dataset, baselines);

  std::map<std::string, std::vector<UnitScore>> units_by_sds;
  std::map<std::string, std::vector<ScientistScore>> scientists_by_sds;
  std::map<std::string, std::vector<StaffRecord>> roster_by_sds;
  for (const auto& u : unit_scores) units_by_sds[u.sds_id].push_back(u);
  for (const auto& s : scientist_scores) scientists_by_sds[s.sds_id].push_back(s);
  for (const auto& s : dataset.roster) roster_by_sds[s.sds_id].push_back(s);

  std::vector<SdsFrame> frames;
  for (const auto& [sds, roster] : roster_by_sds) {
    const ScientistLabels labels = label_scientists(sds, scientists_by_sds[sds]);
    frames.push_back(build_frame(sds, units_by_sds[sds], labels, roster, dataset.period));
  }
  return analyze_frames(std::move(frames), config);
}

namespace {

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : "NA"; }

std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string report_summary_csv(const std::vector<UdaSummaryRow>& rows) {
  std::string out = "uda_id,analysis,n_sds,n_significant,share\n";
  for (const auto& r : rows) {
    out += csv_escape(r.uda_id) + ',' + r.analysis + ',' + std::to_string(r.n_sds) + ',' +
           std::to_string(r.n_significant) + ',' + format_real(r.share) + '\n';
  }
  return out;
}

std::string report_increasing_csv(const std::vector<IncreasingRow>& rows) {
  std::string out = "sds_id,uda_id,tau_b,p_value,stars\n";
  for (const auto& r : rows) {
    out += csv_escape(r.sds_id) + ',' + csv_escape(r.uda_id) + ',' + format_real(r.tau_b) + ',' +
           format_real(r.p_value) + ',' + r.stars + '\n';
  }
  return out;
}

std::string sds_results_csv(const std::vector<SdsResult>& results) {
  std::string out =
      "sds_id,uda_id,n_units,top_g,top_p,top_tau,inactive_g,inactive_p,inactive_tau,"
      "screened_out,size_prod_g,size_prod_p,size_prod_tau,npc_p,loess_verdict,final_class\n";
  auto assoc = [](const AssociationResult& a) {
    if (a.not_run) return std::string("NA,NA,NA");
    return format_real(a.g_statistic) + ',' + format_real(a.p_value) + ',' + format_real(a.tau_b);
  };
  for (const auto& r : results) {
    out += csv_escape(r.sds_id) + ',' + csv_escape(r.uda_id) + ',' + std::to_string(r.n_units) +
           ',' + assoc(r.top_assoc) + ',' + assoc(r.inactive_assoc) + ',' +
           bool_str(r.screened_out) + ',' +
           (r.size_prod_assoc ? assoc(*r.size_prod_assoc) : std::string("NA,NA,NA")) + ',' +
           opt_real(r.npc_p) + ',' + to_string(r.loess_verdict) + ',' +
           to_string(r.final_class) + '\n';
  }
  return out;
}

std::string box_plot_csv(const QuartileGroups& groups) {
  std::string out =
      "quartile,size_min,size_max,n,q1,median,q3,whisker_lo,whisker_hi,mean,outliers\n";
  for (std::size_t g = 0; g < 4; ++g) {
    const BoxStats& b = groups.box[g];
    std::string outliers;
    for (double v : b.outliers) outliers += (outliers.empty() ? "" : ";") + format_real(v);
    out += std::to_string(g + 1) + ',' + format_real(groups.size_range[g].first) + ',' +
           format_real(groups.size_range[g].second) + ',' + std::to_string(b.n) + ',' +
           format_real(b.q1) + ',' + format_real(b.median) + ',' + format_real(b.q3) + ',' +
           format_real(b.whisker_lo) + ',' + format_real(b.whisker_hi) + ',' +
           format_real(b.mean) + ',' + outliers + '\n';
  }
  return out;
}

std::string loess_plot_csv(const LoessAssessment& loess) {
  std::string out = "x,fitted,is_outlier\n";
  if (!loess.fit) return out;
  const LoessFit& fit = *loess.fit;
  const std::set<std::size_t> excluded(fit.excluded_outliers.begin(), fit.excluded_outliers.end());
  std::size_t k = 0;
  for (std::size_t i = 0; i < fit.points.size(); ++i) {
    const bool outlier = excluded.count(i) > 0;
    const double fitted = outlier ? fit.predict(fit.points[i].first) : fit.fitted[k++];
    out += format_real(fit.points[i].first) + ',' + format_real(fitted) + ',' +
           (outlier ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<UdaSummaryRow> load_report_summary(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path, {"uda_id", "analysis", "n_sds", "n_significant", "share"});
  std::vector<UdaSummaryRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::string where = path.string() + ":" + std::to_string(t.line_numbers[r]);
    rows.push_back({f[0], f[1], static_cast<int>(parse_int(f[2], where)),
                    static_cast<int>(parse_int(f[3], where)), parse_double(f[4], where)});
  }
  return rows;
}

std::vector<IncreasingRow> load_report_increasing(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path, {"sds_id", "uda_id", "tau_b", "p_value", "stars"});
  std::vector<IncreasingRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& f = t.rows[r];
    const std::string where = path.string() + ":" + std::to_string(t.line_numbers[r]);
    rows.push_back({f[0], f[1], parse_double(f[2], where), parse_double(f[3], where), f[4]});
  }
  return rows;
}

std::string format_summary_table(const std::vector<UdaSummaryRow>& rows) {
  std::vector<std::string> udas;
  std::map<std::pair<std::string, std::string>, UdaSummaryRow> cell;
  for (const auto& r : rows) {
    if (std::find(udas.begin(), udas.end(), r.uda_id) == udas.end()) udas.push_back(r.uda_id);
    cell[{r.uda_id, r.analysis}] = r;
  }
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-28s %-20s %-20s %-20s\n", "UDA", "top scientists",
                "inactive scientists", "size-productivity");
  out += buf;
  for (const auto& uda : udas) {
    std::string cols[3];
    const char* analyses[] = {"top", "inactive", "size_prod"};
    for (int a = 0; a < 3; ++a) {
      const auto it = cell.find({uda, analyses[a]});
      if (it == cell.end()) continue;
      std::snprintf(buf, sizeof buf, "%d out of %d (%.0f%%)", it->second.n_significant,
                    it->second.n_sds, 100.0 * it->second.share);
      cols[a] = buf;
    }
    std::snprintf(buf, sizeof buf, "%-28s %-20s %-20s %-20s\n", uda.c_str(), cols[0].c_str(),
                  cols[1].c_str(), cols[2].c_str());
    out += buf;
  }
  return out;
}

std::string format_increasing_table(const std::vector<IncreasingRow>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %-24s %10s\n", "SDS", "UDA", "tau-b");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-24s %-24s %+10.4f%s\n", r.sds_id.c_str(), r.uda_id.c_str(),
                  r.tau_b, r.stars.c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%zu SDSs with significant increasing returns to size\n",
                rows.size());
  out += buf;
  out += "** significant at 5%, * significant at 10%\n";
  return out;
}

std::string plot_file_stem(const std::string& sds_id) {
  std::string out;
  for (unsigned char ch : sds_id)
    out += (std::isalnum(ch) || ch == '-' || ch == '_' || ch == '.') ? static_cast<char>(ch) : '_';
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

void write_report(const Report& report, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "plots");
  write_text_file(out_dir / "report_summary.csv", report_summary_csv(report.summary));
  write_text_file(out_dir / "report_increasing.csv", report_increasing_csv(report.increasing));
  write_text_file(out_dir / "sds_results.csv", sds_results_csv(report.sds));

  std::string frames = kFrameCsvHeader;
  for (const auto& f : report.frames) frames += frame_csv_rows(f, report.config.threshold_rule());
  write_text_file(out_dir / "frames.csv", frames);

  for (const auto& r : report.sds) {
    if (!r.confirmation.quartiles) continue;
    const std::string stem = plot_file_stem(r.sds_id);
    write_text_file(out_dir / "plots" / (stem + "_box.csv"), box_plot_csv(*r.confirmation.quartiles));
    write_text_file(out_dir / "plots" / (stem + "_loess.csv"), loess_plot_csv(r.confirmation.loess));
  }
}

}  // namespace rtsize
