#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rtsize/classify.hpp"
#include "rtsize/dataset.hpp"
#include "rtsize/loess.hpp"
#include "rtsize/scoring.hpp"
#include "rtsize/stats.hpp"

namespace rtsize {

// How the confirmatory checks combine with a significant, positive
// size-productivity association.
enum class VerdictRule {
  DependenceOnly,
  DependenceAndNpc,
  DependenceAndLoess,
  DependenceAndEither,
  DependenceAndBoth,
};

VerdictRule parse_verdict_rule(const std::string& name);
std::string to_string(VerdictRule rule);

struct AnalysisConfig {
  double alpha = 0.1;
  double top_threshold = 0.20;
  int min_units = 10;
  double loess_span = 0.75;
  int loess_degree = 1;
  double outlier_k = 3.0;
  int permutations = 999;
  std::uint64_t seed = 20110101;
  double practical_threshold = 0.05;  // relative rise of the LOESS curve over the size IQR
  VerdictRule verdict_rule = VerdictRule::DependenceAndEither;
  bool williams = false;
  int jobs = 1;
  std::map<std::string, std::string> uda_of;  // sds_id -> uda_id

  // Throws std::invalid_argument on out-of-range settings.
  void check() const;
  ThresholdRule threshold_rule() const { return {top_threshold}; }
};

// Reads analysis keys from a config file (alpha, top_threshold, min_units,
// loess_span, loess_degree, outlier_k, permutations, seed,
// practical_threshold, verdict_rule, williams, jobs, uda_map).
AnalysisConfig analysis_config_from(const KeyValueFile& kv);

// sds_id,uda_id CSV.
std::map<std::string, std::string> load_uda_map(const std::filesystem::path& path);
std::string uda_map_csv(const std::map<std::string, std::string>& uda_of);

// Per-SDS seed derived from the master seed and the SDS identifier, so that
// results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t master, const std::string& key);

struct QualityScreen {
  AssociationResult top;
  AssociationResult inactive;
  bool screened_out = false;
  bool not_run = false;
};

// Top-share x size and inactive-share x size association. Frames below
// min_units are not tested and are excluded.
QualityScreen stage_quality_screen(const SdsFrame& frame, const AnalysisConfig& config);

// Productivity class x size class association.
AssociationResult stage_size_productivity(const SdsFrame& frame, const AnalysisConfig& config);

enum class LoessVerdict { Increasing, Constant, NotRun };
std::string to_string(LoessVerdict v);

struct LoessAssessment {
  LoessVerdict verdict = LoessVerdict::NotRun;
  std::optional<LoessFit> fit;
  double x25 = 0.0, x75 = 0.0;  // size quartiles of the kept points
  double f25 = 0.0, f75 = 0.0;  // curve values there
};

// Fits LOESS to (size, productivity); optionally drops residual outliers one
// at a time (worst first, refitting in between, at most a fifth of the
// points). Increasing iff the curve rises between the 25th and 75th size
// percentiles by more than practical_threshold relative to its value at the
// 25th percentile.
LoessAssessment assess_loess(const std::vector<std::pair<double, double>>& points,
                             const AnalysisConfig& config, bool remove_outliers);

struct Confirmation {
  std::optional<double> npc_p;
  std::optional<QuartileGroups> quartiles;
  LoessAssessment loess;       // after outlier removal
  LoessAssessment loess_raw;   // all points
};

Confirmation stage_confirm(const SdsFrame& frame, const AnalysisConfig& config,
                           std::uint64_t seed);

enum class FinalClass { Excluded, ConstantReturns, IncreasingReturns };
std::string to_string(FinalClass c);

struct SdsResult {
  std::string sds_id;
  std::string uda_id;
  int n_units = 0;
  AssociationResult top_assoc;
  AssociationResult inactive_assoc;
  bool screened_out = false;
  std::optional<AssociationResult> size_prod_assoc;
  std::optional<double> npc_p;
  LoessVerdict loess_verdict = LoessVerdict::NotRun;
  FinalClass final_class = FinalClass::Excluded;
  Confirmation confirmation;
};

// Analyses one frame end to end: screen, size-productivity association,
// confirmatory checks, final class.
SdsResult analyze_frame(const SdsFrame& frame, const std::string& uda_id,
                        const AnalysisConfig& config);

FinalClass final_class_of(const SdsResult& r, const AnalysisConfig& config);

struct UdaSummaryRow {
  std::string uda_id;
  std::string analysis;  // top | inactive | size_prod
  int n_sds = 0;
  int n_significant = 0;
  double share = 0.0;
};

struct IncreasingRow {
  std::string sds_id;
  std::string uda_id;
  double tau_b = 0.0;
  double p_value = 1.0;
  std::string stars;  // "**" p < 0.05, "*" p < 0.10
};

struct Report {
  std::vector<SdsResult> sds;  // ordered by sds_id
  std::vector<SdsFrame> frames;
  std::vector<UdaSummaryRow> summary;
  std::vector<IncreasingRow> increasing;
  AnalysisConfig config;
};

std::string significance_stars(double p);

// Runs every per-SDS analysis (in parallel up to config.jobs) and aggregates
// in sds_id order.
Report analyze_frames(std::vector<SdsFrame> frames, const AnalysisConfig& config);

// Scoring, classification and analysis of a whole dataset. Throws DataError
// for an empty dataset.
Report run_analysis(const Dataset& dataset, const AnalysisConfig& config);

std::vector<UdaSummaryRow> summarize_by_uda(const std::vector<SdsResult>& results);

std::string report_summary_csv(const std::vector<UdaSummaryRow>& rows);
std::string report_increasing_csv(const std::vector<IncreasingRow>& rows);
std::string sds_results_csv(const std::vector<SdsResult>& results);
std::string box_plot_csv(const QuartileGroups& groups);
std::string loess_plot_csv(const LoessAssessment& loess);

std::vector<UdaSummaryRow> load_report_summary(const std::filesystem::path& path);
std::vector<IncreasingRow> load_report_increasing(const std::filesystem::path& path);

// Human-readable tables for standard output.
std::string format_summary_table(const std::vector<UdaSummaryRow>& rows);
std::string format_increasing_table(const std::vector<IncreasingRow>& rows);

// Writes report_summary.csv, report_increasing.csv, sds_results.csv,
// frames.csv and plots/ under out_dir.
void write_report(const Report& report, const std::filesystem::path& out_dir);

std::string plot_file_stem(const std::string& sds_id);

}  // namespace rtsize
