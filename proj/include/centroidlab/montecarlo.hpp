#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "centroidlab/analysis.hpp"
#include "centroidlab/core.hpp"
#include "centroidlab/rng.hpp"
#include "centroidlab/treegen.hpp"

namespace centroidlab {

enum class Collector { Depth, Label, SubtreeFraction, TwoCentroid };

inline const char* to_string(Collector c) {
  switch (c) {
    case Collector::Depth: return "depth";
    case Collector::Label: return "label";
    case Collector::SubtreeFraction: return "subtree_fraction";
    case Collector::TwoCentroid: return "two_centroid";
  }
  return "unknown";
}

inline Collector collector_from_string(const std::string& name) {
  for (auto c : {Collector::Depth, Collector::Label, Collector::SubtreeFraction, Collector::TwoCentroid}) {
    if (name == to_string(c)) return c;
  }
  throw std::invalid_argument("unknown collector '" + name + "'");
}

struct ExperimentConfig {
  FamilyParams family = FamilyParams::recursive();
  std::uint64_t n = 100;
  std::uint64_t trials = 1000;
  std::uint64_t master_seed = 0;
  std::vector<Collector> collectors{Collector::Depth, Collector::Label, Collector::SubtreeFraction,
                                    Collector::TwoCentroid};
  std::uint64_t subtree_bins = 25;

  bool collects(Collector c) const { return std::find(collectors.begin(), collectors.end(), c) != collectors.end(); }

  void validate() const {
    if (n < 1) throw std::invalid_argument("experiment: n must be at least 1");
    if (n > 0xFFFFFFFFull) throw std::invalid_argument("experiment: n exceeds the label range");
    if (trials < 1) throw std::invalid_argument("experiment: trials must be at least 1");
    if (subtree_bins < 2) throw std::invalid_argument("experiment: subtree_bins must be at least 2");
    if (collectors.empty()) throw std::invalid_argument("experiment: no collectors selected");
    detail::require_realizable(family);
  }
};

struct RunOptions {
  unsigned threads = 0;            // 0: hardware concurrency
  std::uint64_t chunk_size = 256;  // trials per work unit
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
  double second_moment = 0.0;

  friend bool operator==(const Moments&, const Moments&) = default;
};

struct MCSummary {
  ExperimentConfig config;
  std::map<Collector, DistributionTable> tables;
  std::map<Collector, Moments> moments;
  std::optional<double> two_centroid_frequency;
  double wall_time = 0.0;  // seconds
};

namespace detail {

// Exact integer histograms; merging them is order independent, so the summary
// does not depend on how trials were scheduled.
struct Tally {
  std::vector<std::uint64_t> depth;
  std::vector<std::uint64_t> label;
  std::vector<std::uint64_t> subtree;  // indexed by S
  std::uint64_t two_centroid = 0;

  void reset(std::uint64_t n) {
    depth.assign(n, 0);
    label.assign(n + 1, 0);
    subtree.assign(n + 1, 0);
    two_centroid = 0;
  }

  void merge(const Tally& other) {
    for (std::size_t i = 0; i < depth.size(); ++i) depth[i] += other.depth[i];
    for (std::size_t i = 0; i < label.size(); ++i) label[i] += other.label[i];
    for (std::size_t i = 0; i < subtree.size(); ++i) subtree[i] += other.subtree[i];
    two_centroid += other.two_centroid;
  }
};

// Moments of value * scale from an integer histogram, accumulated exactly.
inline Moments histogram_moments(const std::vector<std::uint64_t>& counts, double scale) {
  using i128 = __int128;
  i128 count = 0;
  i128 sum = 0;
  i128 sum_sq = 0;
  for (std::size_t v = 0; v < counts.size(); ++v) {
    const i128 c = counts[v];
    count += c;
    sum += c * static_cast<i128>(v);
    sum_sq += c * static_cast<i128>(v) * static_cast<i128>(v);
  }
  Moments m;
  const double nd = static_cast<double>(count);
  m.mean = static_cast<double>(sum) / nd * scale;
  m.second_moment = static_cast<double>(sum_sq) / nd * scale * scale;
  if (count > 1) {
    const i128 numerator = count * sum_sq - sum * sum;
    m.variance = static_cast<double>(numerator) / (nd * (nd - 1.0)) * scale * scale;
  }
  return m;
}

inline DistributionTable integer_table(const std::vector<std::uint64_t>& counts, std::uint64_t trials) {
  DistributionTable table;
  table.provenance = Provenance::Empirical;
  table.sample_count = trials;
  std::size_t first = 0;
  while (first < counts.size() && counts[first] == 0) ++first;
  std::size_t last = counts.size();
  while (last > first && counts[last - 1] == 0) --last;
  for (std::size_t v = first; v < last; ++v) {
    table.support.push_back(static_cast<double>(v));
    table.mass.push_back(static_cast<double>(counts[v]) / static_cast<double>(trials));
  }
  return table;
}

/// Bin of S in the right-closed partition of [1/2, 1) into `bins` pieces; S < n.
inline std::uint64_t subtree_bin(std::uint64_t s, std::uint64_t n, std::uint64_t bins) {
  const unsigned __int128 t = static_cast<unsigned __int128>(2 * s - n) * bins;
  const auto ceil = static_cast<std::uint64_t>((t + n - 1) / n);
  return ceil == 0 ? 0 : ceil - 1;
}

inline DistributionTable subtree_table(const std::vector<std::uint64_t>& counts, std::uint64_t n,
                                       std::uint64_t bins, std::uint64_t trials) {
  std::vector<std::uint64_t> binned(bins, 0);
  for (std::uint64_t s = (n + 1) / 2; s < n; ++s) binned[subtree_bin(s, n, bins)] += counts[s];
  DistributionTable table;
  table.kind = SupportKind::Binned;
  table.provenance = Provenance::Empirical;
  table.sample_count = trials;
  table.bin_width = 0.5 / static_cast<double>(bins);
  for (std::uint64_t b = 0; b < bins; ++b) {
    table.support.push_back(0.5 + 0.5 * static_cast<double>(b) / static_cast<double>(bins));
    table.mass.push_back(static_cast<double>(binned[b]) / static_cast<double>(trials));
  }
  table.support.push_back(1.0);
  table.mass.push_back(static_cast<double>(counts[n]) / static_cast<double>(trials));
  return table;
}

}  // namespace detail

/// Trial i draws its tree from RngStream(master_seed, i); the result is
/// identical for every thread count.
inline MCSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {}) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t n = config.n;
  const std::uint64_t chunk = std::max<std::uint64_t>(1, options.chunk_size);
  const std::uint64_t chunks = (config.trials + chunk - 1) / chunk;
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, chunks));

  std::vector<detail::Tally> tallies(threads);
  std::atomic<std::uint64_t> next_chunk{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&](unsigned w) {
    try {
      detail::Tally& tally = tallies[w];
      tally.reset(n);
      detail::TreeSampler sampler;
      std::vector<Label> parent;
      std::vector<std::uint32_t> sizes;
      for (;;) {
        const std::uint64_t c = next_chunk.fetch_add(1);
        if (c >= chunks || failed.load()) break;
        const std::uint64_t end = std::min(config.trials, (c + 1) * chunk);
        for (std::uint64_t trial = c * chunk; trial < end; ++trial) {
          auto gen = RngStream{config.master_seed, trial}.engine();
          sampler.sample(config.family, n, gen, parent);
          if (n == 1) parent.assign(2, 0);
          detail::fill_subtree_sizes(parent, sizes);
          const auto report = detail::centroid_report(parent, sizes);
          ++tally.depth[report.nearest_depth];
          ++tally.label[report.nearest_label];
          ++tally.subtree[report.subtree_size];
          if (report.centroid_labels.size() == 2) ++tally.two_centroid;
        }
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      failed = true;
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  detail::Tally total = std::move(tallies[0]);
  for (unsigned w = 1; w < threads; ++w) total.merge(tallies[w]);

  MCSummary summary;
  summary.config = config;
  const std::uint64_t trials = config.trials;
  if (config.collects(Collector::Depth)) {
    summary.tables[Collector::Depth] = detail::integer_table(total.depth, trials);
    summary.moments[Collector::Depth] = detail::histogram_moments(total.depth, 1.0);
  }
  if (config.collects(Collector::Label)) {
    summary.tables[Collector::Label] = detail::integer_table(total.label, trials);
    summary.moments[Collector::Label] = detail::histogram_moments(total.label, 1.0);
  }
  if (config.collects(Collector::SubtreeFraction)) {
    summary.tables[Collector::SubtreeFraction] = detail::subtree_table(total.subtree, n, config.subtree_bins, trials);
    summary.moments[Collector::SubtreeFraction] =
        detail::histogram_moments(total.subtree, 1.0 / static_cast<double>(n));
  }
  if (config.collects(Collector::TwoCentroid)) {
    const double freq = static_cast<double>(total.two_centroid) / static_cast<double>(trials);
    summary.two_centroid_frequency = freq;
    DistributionTable table;
    table.provenance = Provenance::Empirical;
    table.sample_count = trials;
    table.support = {0.0, 1.0};
    table.mass = {1.0 - freq, freq};
    summary.tables[Collector::TwoCentroid] = table;
    summary.moments[Collector::TwoCentroid] = {freq, trials > 1 ? freq * (1.0 - freq) * trials / (trials - 1.0) : 0.0, freq};
  }
  summary.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

struct ComparisonStats {
  double tv_distance = 0.0;
  double max_cdf_diff = 0.0;
  std::vector<std::pair<int, double>> moment_z_scores;  // (order, z)
};

namespace detail {

inline double table_raw_moment(const DistributionTable& t, int order) {
  CompensatedSum sum;
  for (std::size_t i = 0; i < t.support.size(); ++i) sum.add(t.mass[i] * std::pow(t.support[i], order));
  return sum.value();
}

}  // namespace detail

/// Total variation, Kolmogorov distance and moment z-scores of an empirical
/// table against a reference on the union of their supports.
inline ComparisonStats compare_distributions(const DistributionTable& empirical, const DistributionTable& reference) {
  if (empirical.kind != reference.kind) throw std::invalid_argument("compare: integer and binned supports differ");
  if (empirical.kind == SupportKind::Binned &&
      (empirical.bin_width != reference.bin_width || empirical.support != reference.support)) {
    throw std::invalid_argument("compare: bin layouts differ");
  }
  std::map<double, std::pair<double, double>> joint;
  for (std::size_t i = 0; i < empirical.support.size(); ++i) joint[empirical.support[i]].first += empirical.mass[i];
  for (std::size_t i = 0; i < reference.support.size(); ++i) joint[reference.support[i]].second += reference.mass[i];

  ComparisonStats stats;
  CompensatedSum tv;
  double cdf_p = 0.0;
  double cdf_q = 0.0;
  for (const auto& [point, pq] : joint) {
    tv.add(std::fabs(pq.first - pq.second));
    cdf_p += pq.first;
    cdf_q += pq.second;
    stats.max_cdf_diff = std::max(stats.max_cdf_diff, std::fabs(cdf_p - cdf_q));
  }
  stats.tv_distance = std::min(1.0, 0.5 * tv.value());
  stats.max_cdf_diff = std::min(1.0, stats.max_cdf_diff);

  // Binned supports carry bin edges, so moments are only meaningful for integers.
  if (empirical.kind == SupportKind::Integer && empirical.sample_count > 0) {
    const double count = static_cast<double>(empirical.sample_count);
    for (int order = 1; order <= 2; ++order) {
      const double emp = detail::table_raw_moment(empirical, order);
      const double ref = detail::table_raw_moment(reference, order);
      const double spread = detail::table_raw_moment(empirical, 2 * order) - emp * emp;
      if (spread > 0.0) stats.moment_z_scores.emplace_back(order, (emp - ref) / std::sqrt(spread / count));
    }
  }
  return stats;
}

/// JSON with keys config, collectors, moments, frequency and, if requested, wall_time.
inline nlohmann::ordered_json to_json(const MCSummary& s, bool include_wall_time = false) {
  using nlohmann::ordered_json;
  ordered_json config;
  config["family"] = s.config.family.tag();
  config["alpha"] = s.config.family.alpha();
  config["n"] = s.config.n;
  config["trials"] = s.config.trials;
  config["master_seed"] = s.config.master_seed;
  ordered_json names = ordered_json::array();
  for (auto c : s.config.collectors) names.push_back(to_string(c));
  config["collectors"] = names;
  config["subtree_bins"] = s.config.subtree_bins;

  ordered_json collectors = ordered_json::object();
  ordered_json moments = ordered_json::object();
  for (const auto& [c, table] : s.tables) {
    collectors[to_string(c)] = {{"support", table.support}, {"mass", table.mass}};
  }
  for (const auto& [c, m] : s.moments) {
    moments[to_string(c)] = {{"mean", m.mean}, {"variance", m.variance}, {"second_moment", m.second_moment}};
  }
  ordered_json out;
  out["config"] = config;
  out["collectors"] = collectors;
  out["moments"] = moments;
  ordered_json frequency = ordered_json::object();
  if (s.two_centroid_frequency) frequency["two_centroid"] = *s.two_centroid_frequency;
  out["frequency"] = frequency;
  if (include_wall_time) out["wall_time"] = s.wall_time;
  return out;
}

namespace detail {

inline std::string format_number(double x) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, x);
  return std::string(buffer, result.ptr);
}

}  // namespace detail

/// One row per support point: collector,support,mass,provenance.
inline void write_csv(std::ostream& os, const std::string& collector, const DistributionTable& table) {
  for (std::size_t i = 0; i < table.support.size(); ++i) {
    os << collector << ',' << detail::format_number(table.support[i]) << ','
       << detail::format_number(table.mass[i]) << ',' << to_string(table.provenance) << '\n';
  }
}

inline void to_csv(std::ostream& os, const MCSummary& s) {
  os << "collector,support,mass,provenance\n";
  for (const auto& [c, table] : s.tables) write_csv(os, to_string(c), table);
}

}  // namespace centroidlab
