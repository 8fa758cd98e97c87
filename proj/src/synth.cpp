#include "rtsize/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "rtsize/pipeline.hpp"

namespace rtsize {

namespace {

struct SynthScientist {
  std::string id;
  std::string university_id;
  double z = 0.0;        // latent quality score
  double quality = 0.0;  // 0 for inactive scientists
  bool star = false;
  std::map<int, double> presence;
  double presence_total = 0.0;
};

struct SynthUnit {
  std::string university_id;
  std::vector<std::size_t> members;  // indices into the SDS scientist list
  double rs = 0.0;
};

std::size_t pick_weighted(std::mt19937_64& rng, const std::vector<double>& cumulative) {
  std::uniform_real_distribution<double> u(0.0, cumulative.back());
  const double r = u(rng);
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                               cumulative.size() - 1);
}

long long negative_binomial(std::mt19937_64& rng, double mean, double dispersion) {
  std::gamma_distribution<double> gamma(dispersion, mean / dispersion);
  const double lambda = gamma(rng);
  if (lambda <= 0.0) return 0;
  std::poisson_distribution<long long> poisson(lambda);
  return poisson(rng);
}

}  // namespace

void WorldConfig::check() const {
  if (n_sds < 1 || n_universities < 1 || n_udas < 1)
    throw std::invalid_argument("world: counts must be >= 1");
  if (!(beta_default > 0.0)) throw std::invalid_argument("world: beta must be > 0");
  for (const auto& [sds, beta] : beta_overrides)
    if (!(beta > 0.0)) throw std::invalid_argument("world: beta for " + sds + " must be > 0");
  if (rho < -1.0 || rho > 1.0) throw std::invalid_argument("world: rho must lie in [-1, 1]");
  if (size_min < 1 || size_max < size_min) throw std::invalid_argument("world: bad size truncation");
  if (presence_probability <= 0.0 || presence_probability > 1.0)
    throw std::invalid_argument("world: presence_probability must lie in (0, 1]");
  if (inactive_share < 0.0 || inactive_share >= 1.0)
    throw std::invalid_argument("world: inactive_share must lie in [0, 1)");
  if (star_share < 0.0 || star_share > 1.0 || star_boost <= 0.0)
    throw std::invalid_argument("world: star_share must lie in [0, 1], star_boost must be > 0");
  if (citation_mean <= 0.0 || citation_dispersion <= 0.0)
    throw std::invalid_argument("world: citation parameters must be positive");
  for (double p : {external_coauthor_probability, second_category_probability,
                   partial_presence_probability, part_time_probability, life_science_share})
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("world: probabilities must lie in [0, 1]");
  if (partial_presence_probability + part_time_probability > 1.0)
    throw std::invalid_argument("world: presence probabilities sum above 1");
  if (mean_extra_authors < 0.0 || pubs_per_capita_year <= 0.0 || reference_size <= 0.0 ||
      quality_sigma < 0.0 || unit_noise_sigma < 0.0 || citation_mean_sigma < 0.0)
    throw std::invalid_argument("world: rates and spreads must be non-negative");
  if (period.empty()) throw std::invalid_argument("world: empty period");
}

double WorldConfig::beta_for(const std::string& sds_id) const {
  const auto it = beta_overrides.find(sds_id);
  return it == beta_overrides.end() ? beta_default : it->second;
}

std::string sds_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "SDS%03d", index + 1);
  return buf;
}

World generate_world(const WorldConfig& config) {
  config.check();
  World world;
  Dataset& ds = world.dataset;
  ds.period = config.period;
  const int years = config.period.years();

  std::vector<std::string> universities;
  for (int u = 0; u < config.n_universities; ++u) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "U%03d", u + 1);
    universities.emplace_back(buf);
  }
  const double inactive_cut = config.inactive_share;
  const double coupling = std::sqrt(std::max(0.0, 1.0 - config.rho * config.rho));

  for (int s = 0; s < config.n_sds; ++s) {
    const std::string sds = sds_name(s);
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32), static_cast<std::uint32_t>(s)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const double beta = config.beta_for(sds);
    world.truth.beta[sds] = beta;
    const int uda_index = static_cast<int>(static_cast<long long>(s) * config.n_udas / config.n_sds);
    world.truth.uda_of[sds] = "UDA" + std::to_string(uda_index + 1);

    const bool life_science =
        std::floor((s + 1) * config.life_science_share) > std::floor(s * config.life_science_share);
    const std::string cat_a = "C" + sds.substr(3) + "A";
    const std::string cat_b = "C" + sds.substr(3) + "B";
    if (life_science) {
      ds.category_lifesci.insert(cat_a);
      ds.category_lifesci.insert(cat_b);
    }
    const double mean_a = config.citation_mean * std::exp(config.citation_mean_sigma * normal(rng));
    const double mean_b = config.citation_mean * std::exp(config.citation_mean_sigma * normal(rng));

    // Staff.
    std::vector<SynthScientist> scientists;
    std::vector<SynthUnit> units;
    for (const auto& uni : universities) {
      if (unif(rng) >= config.presence_probability) continue;
      const double raw = std::exp(config.size_log_mean + config.size_log_sigma * normal(rng));
      const int headcount =
          std::clamp(static_cast<int>(std::lround(raw)), config.size_min, config.size_max);
      const double z_size = (std::log(static_cast<double>(headcount)) - config.size_log_mean) /
                            config.size_log_sigma;
      SynthUnit unit{uni, {}, 0.0};
      for (int i = 0; i < headcount; ++i) {
        SynthScientist sc;
        sc.id = uni + "-" + sds + "-" + std::to_string(i + 1);
        sc.university_id = uni;
        sc.z = config.rho * z_size + coupling * normal(rng);
        const double phi = 0.5 * std::erfc(-sc.z / std::sqrt(2.0));
        sc.quality = phi < inactive_cut ? 0.0 : std::exp(config.quality_sigma * sc.z);
        sc.star = phi >= 1.0 - config.star_share;

        const double kind = unif(rng);
        if (kind < config.partial_presence_probability && years > 1) {
          std::uniform_int_distribution<int> pick(0, years - 1);
          int a = pick(rng), b = pick(rng);
          if (a > b) std::swap(a, b);
          for (int y = a; y <= b; ++y) sc.presence[config.period.first_year + y] = 1.0;
        } else {
          const double fraction =
              kind < config.partial_presence_probability + config.part_time_probability ? 0.5 : 1.0;
          for (int y = 0; y < years; ++y) sc.presence[config.period.first_year + y] = fraction;
        }
        for (const auto& [y, f] : sc.presence) sc.presence_total += f;
        unit.rs += sc.presence_total / years;
        unit.members.push_back(scientists.size());
        scientists.push_back(std::move(sc));
      }
      units.push_back(std::move(unit));
    }

    // Quality deciles within the SDS.
    std::vector<std::size_t> order(scientists.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return scientists[x].z < scientists[y].z; });
    for (std::size_t r = 0; r < order.size(); ++r) {
      const int decile = static_cast<int>(r * 10 / order.size()) + 1;
      world.truth.quality_decile[scientists[order[r]].id] = decile;
    }

    // Publications. Lead authors are drawn in proportion to their expected
    // output: quality x presence, times star_boost for stars, times the
    // unit's scale factor (rs / reference_size)^(beta - 1), flat beyond
    // reference_size.
    long long pub_counter = 0;
    for (const auto& unit : units) {
      if (unit.rs <= 0.0) continue;
      const double scale =
          std::pow(std::min(unit.rs, config.reference_size) / config.reference_size, beta - 1.0);
      double output = 0.0;
      std::vector<double> cumulative;
      for (std::size_t m : unit.members) {
        const auto& sc = scientists[m];
        const double star = sc.star ? config.star_boost : 1.0;
        const double scaled = sc.star || !config.scale_stars_only ? scale : 1.0;
        output += sc.quality * sc.presence_total * star * scaled;
        cumulative.push_back(output);
      }
      if (output <= 0.0) continue;
      std::vector<std::size_t> active;
      for (std::size_t m : unit.members)
        if (scientists[m].quality > 0.0) active.push_back(m);

      const double noise = std::exp(config.unit_noise_sigma * normal(rng) -
                                    0.5 * config.unit_noise_sigma * config.unit_noise_sigma);
      std::poisson_distribution<long long> n_pubs_dist(config.pubs_per_capita_year * output * noise);
      const long long n_pubs = n_pubs_dist(rng);

      for (long long p = 0; p < n_pubs; ++p) {
        const std::size_t lead = unit.members[pick_weighted(rng, cumulative)];
        const SynthScientist& sc = scientists[lead];

        PublicationRecord pub;
        pub.pub_id = "P" + sds.substr(3) + "-" + std::to_string(++pub_counter);
        {
          std::vector<int> yrs;
          std::vector<double> cum;
          double tot = 0.0;
          for (const auto& [y, f] : sc.presence) {
            tot += f;
            yrs.push_back(y);
            cum.push_back(tot);
          }
          pub.year = yrs[pick_weighted(rng, cum)];
        }
        const bool primary_a = unif(rng) < 0.7;
        pub.categories.push_back(primary_a ? cat_a : cat_b);
        if (unif(rng) < config.second_category_probability)
          pub.categories.push_back(primary_a ? cat_b : cat_a);
        pub.life_science = life_science;
        pub.citations = negative_binomial(rng, primary_a ? mean_a : mean_b,
                                          config.citation_dispersion);

        pub.authors.push_back({sc.id, UnitKey{sc.university_id, sds}, 1});
        std::poisson_distribution<int> extra_dist(config.mean_extra_authors);
        const int extra = std::min(extra_dist(rng), 19);
        std::vector<std::size_t> used{lead};
        for (int k = 0; k < extra; ++k) {
          const int position = static_cast<int>(pub.authors.size()) + 1;
          bool internal = unif(rng) >= config.external_coauthor_probability &&
                          used.size() < active.size();
          if (internal) {
            std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
            std::size_t candidate = active[pick(rng)];
            for (int tries = 0; tries < 8 && std::find(used.begin(), used.end(), candidate) != used.end(); ++tries)
              candidate = active[pick(rng)];
            if (std::find(used.begin(), used.end(), candidate) != used.end()) internal = false;
            if (internal) {
              used.push_back(candidate);
              const auto& co = scientists[candidate];
              pub.authors.push_back({co.id, UnitKey{co.university_id, sds}, position});
              continue;
            }
          }
          pub.authors.push_back({"X" + pub.pub_id.substr(1) + "-" + std::to_string(position),
                                 std::nullopt, position});
        }
        ds.publications.push_back(std::move(pub));
      }
    }

    for (auto& sc : scientists) {
      ds.roster.push_back(StaffRecord{sc.id, sc.university_id, sds, std::move(sc.presence)});
    }
  }
  return world;
}

std::vector<std::filesystem::path> world_to_files(const World& world,
                                                  const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string());

  std::vector<fs::path> paths{dir / "publications.jsonl", dir / "roster.csv", dir / "uda_map.csv",
                              dir / "config.toml", dir / "ground_truth.csv"};
  write_text_file(paths[0], serialize_publications(world.dataset.publications));
  write_text_file(paths[1], serialize_roster(world.dataset.roster));
  write_text_file(paths[2], uda_map_csv(world.truth.uda_of));
  write_text_file(paths[3], serialize_config(world.dataset, "uda_map.csv"));
  std::string truth = "sds_id,uda_id,beta\n";
  for (const auto& [sds, beta] : world.truth.beta) {
    const auto it = world.truth.uda_of.find(sds);
    truth += csv_escape(sds) + ',' + csv_escape(it == world.truth.uda_of.end() ? "" : it->second) +
             ',' + format_real(beta) + '\n';
  }
  write_text_file(paths[4], truth);
  return paths;
}

std::map<std::string, double> load_beta_overrides(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path, {"sds_id", "beta"});
  std::map<std::string, double> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = path.string() + ":" + std::to_string(t.line_numbers[r]);
    const double beta = parse_double(t.rows[r][1], where + ": field 'beta'");
    if (!(beta > 0.0)) throw DataError(where + ": field 'beta': must be > 0");
    out[trim(t.rows[r][0])] = beta;
  }
  return out;
}

}  // namespace rtsize
