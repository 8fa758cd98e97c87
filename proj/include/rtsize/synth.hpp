#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rtsize/dataset.hpp"

namespace rtsize {

// Parameters of a synthetic national research system with planted
// returns-to-size exponents.
struct WorldConfig {
  int n_sds = 183;
  int n_universities = 60;
  int n_udas = 9;
  double presence_probability = 0.7;  // chance a university staffs a given SDS

  // Unit headcount ~ round(LogNormal(size_log_mean, size_log_sigma)), truncated.
  double size_log_mean = 2.7;
  double size_log_sigma = 0.8;
  int size_min = 6;
  int size_max = 80;

  double beta_default = 1.0;                   // 1 = constant returns
  std::map<std::string, double> beta_overrides;  // sds_id -> beta
  double rho = 0.0;  // coupling between unit size and scientist quality
  double quality_sigma = 0.1;
  double inactive_share = 0.15;
  // The best star_share of each SDS (by latent quality) publish star_boost
  // times more. With scale_stars_only the unit scale factor multiplies the
  // stars' output alone, so planted returns raise unit productivity while
  // leaving who ranks as top or inactive largely untouched.
  double star_share = 0.2;
  double star_boost = 8.0;
  bool scale_stars_only = true;

  double pubs_per_capita_year = 2.0;
  double reference_size = 25.0;  // scale factor is 1 from here up
  double unit_noise_sigma = 0.15;

  // Citations ~ negative binomial with per-category mean drawn around
  // citation_mean; a small dispersion gives a heavy right tail.
  double citation_mean = 8.0;
  double citation_mean_sigma = 0.6;
  double citation_dispersion = 2.0;

  double life_science_share = 66.0 / 183.0;
  double external_coauthor_probability = 0.9;  // else a colleague from the same unit
  double mean_extra_authors = 1.5;
  double second_category_probability = 0.2;
  double partial_presence_probability = 0.15;
  double part_time_probability = 0.05;

  Period period{2004, 2008};
  std::uint64_t seed = 1;

  void check() const;
  double beta_for(const std::string& sds_id) const;
};

struct GroundTruth {
  std::map<std::string, double> beta;             // sds_id -> planted exponent
  std::map<std::string, std::string> uda_of;      // sds_id -> uda_id
  std::map<std::string, int> quality_decile;      // scientist_id -> 1..10 within SDS
};

struct World {
  Dataset dataset;
  GroundTruth truth;
};

std::string sds_name(int index);

// Deterministic per seed; every SDS draws from its own generator seeded by
// (seed, sds index).
World generate_world(const WorldConfig& config);

// Writes publications.jsonl, roster.csv, uda_map.csv, config.toml and
// ground_truth.csv into dir (created if needed).
std::vector<std::filesystem::path> world_to_files(const World& world,
                                                  const std::filesystem::path& dir);

// sds_id,beta CSV.
std::map<std::string, double> load_beta_overrides(const std::filesystem::path& path);

}  // namespace rtsize
