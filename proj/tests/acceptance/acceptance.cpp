// Standalone acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "centroidlab/centroidlab.hpp"
#include "oracles.hpp"

using namespace centroidlab;

namespace {

constexpr double kLn2 = std::numbers::ln2;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Family {
  FamilyParams params;
  oracle::Kind kind;
  unsigned d;
};

const std::vector<Family>& families() {
  static const std::vector<Family> list{
      {FamilyParams::recursive(), oracle::Kind::Recursive, 0},
      {FamilyParams::plane_oriented(), oracle::Kind::Plane, 0},
      {FamilyParams::d_ary(2), oracle::Kind::DAry, 2},
      {FamilyParams::d_ary(3), oracle::Kind::DAry, 3},
  };
  return list;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string fmt_fixed(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5f", x);
  return buf;
}

// Tracks the largest deviation and whether every one stayed within its tolerance.
struct Tracker {
  double worst = 0.0;
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::string first_failure;

  void near(double expected, double actual, double tol, const std::string& what) {
    const double err = std::fabs(expected - actual);
    ++checks;
    if (err > worst || std::isnan(err)) worst = std::isnan(err) ? INFINITY : err;
    if (!(err <= tol)) {
      if (failures++ == 0) first_failure = what + ": expected " + fmt(expected) + ", got " + fmt(actual);
    }
  }

  void require(bool ok, const std::string& what) {
    ++checks;
    if (!ok && failures++ == 0) first_failure = what;
  }

  Outcome outcome(const std::string& summary) const {
    Outcome o;
    o.pass = failures == 0;
    o.detail = summary + ", " + std::to_string(checks) + " checks";
    if (failures) o.detail += ", " + std::to_string(failures) + " failed, first: " + first_failure;
    return o;
  }
};

IncreasingTree as_tree(const oracle::Parents& parent, const FamilyParams& family) {
  return tree_from_parents(std::span<const std::uint32_t>(parent).subspan(2), family);
}

// 1. Exact formulas against laws computed from degree-weighted enumeration.
Outcome oracle_equivalence() {
  Tracker t;
  for (const auto& fam : families()) {
    const auto& f = fam.params;
    const double alpha = f.alpha();
    const std::string tag = f.tag();
    for (unsigned n = 2; n <= 8; ++n) {
      const auto trees = oracle::weighted_trees(fam.kind, fam.d, n);
      std::vector<oracle::Rational> half(n + 1), sixtenth(n + 1), depth_ge(n + 1), counts(n + 1), subtree(n + 1),
          branch(n + 1);
      oracle::Rational twins = 0, mean_depth = 0, mean_label = 0;
      for (const auto& [parent, prob] : trees) {
        std::vector<unsigned> size(n + 1);
        for (unsigned k = 1; k <= n; ++k) size[k] = oracle::subtree_size(parent, k);
        for (unsigned k = 1; k <= n; ++k) {
          if (size[k] - 1 >= n / 2) half[k] += prob;
          if (size[k] - 1 >= 3 * n / 5) sixtenth[k] += prob;
          if (k >= 2) counts[size[k]] += prob;
        }
        const auto c = oracle::nearest_centroid(parent);
        for (unsigned h = 0; h <= c.depth; ++h) depth_ge[h] += prob;
        subtree[c.subtree] += prob;
        branch[n - c.subtree] += prob;
        if (c.twin) twins += prob;
        mean_depth += prob * c.depth;
        mean_label += prob * c.label;
      }
      const std::string at = tag + " n=" + std::to_string(n);
      for (unsigned k = 1; k <= n; ++k) {
        t.near(oracle::to_double(half[k]), p_lambda_exact({f, n, k, 0.5}), 1e-12, at + " lambda(1/2) k=" + std::to_string(k));
        t.near(oracle::to_double(sixtenth[k]), p_lambda_exact({f, n, k, 0.6}), 1e-12, at + " lambda(0.6) k=" + std::to_string(k));
      }
      for (unsigned h = 0; h <= n; ++h) {
        t.near(oracle::to_double(depth_ge[h]), p_depth_ge_exact(f, n, h), 1e-12, at + " depth h=" + std::to_string(h));
      }
      for (unsigned m = 1; m < n; ++m) {
        t.near(oracle::to_double(counts[m]), expected_subtree_count(alpha, n, m), 1e-12, at + " U_m m=" + std::to_string(m));
      }
      if (n % 2 == 0) t.near(oracle::to_double(twins), prob_two_centroids(f, n), 1e-12, at + " two centroids");
      const auto pmf = centroid_subtree_pmf_exact(f, n);
      for (unsigned m = (n + 1) / 2; m <= n; ++m) {
        const double got = m < n ? p_centroid_subtree_exact(f, n, m) : pmf.mass.back();
        t.near(oracle::to_double(subtree[m]), got, 1e-12, at + " S m=" + std::to_string(m));
      }
      if (fam.kind == oracle::Kind::Recursive) {
        const auto moon = moon_recursive_stats(f, n);
        t.near(oracle::to_double(mean_depth), moon.expected_depth, 1e-12, at + " moon E(D)");
        t.near(oracle::to_double(mean_label), moon.expected_label, 1e-12, at + " moon E(L)");
        for (unsigned b = 0; b <= n; ++b) {
          const double got = b < moon.ancestral_branch_pmf.size() ? moon.ancestral_branch_pmf[b] : 0.0;
          t.near(oracle::to_double(branch[b]), got, 1e-12, at + " moon branch b=" + std::to_string(b));
        }
      }
    }
  }
  return t.outcome("max abs error " + fmt(t.worst));
}

// Total distances via one pass down from the root; labels increase away from it.
std::vector<std::uint64_t> total_distances(std::span<const std::uint32_t> parent, std::size_t n) {
  std::vector<std::uint64_t> size(n + 1, 1), depth(n + 1, 0), total(n + 1, 0);
  for (std::size_t v = n; v >= 2; --v) size[parent[v]] += size[v];
  for (std::size_t v = 2; v <= n; ++v) {
    depth[v] = depth[parent[v]] + 1;
    total[1] += depth[v];
  }
  for (std::size_t v = 2; v <= n; ++v) total[v] = total[parent[v]] + n - 2 * size[v];
  return total;
}

bool matches_argmin(const IncreasingTree& tree) {
  const std::size_t n = tree.size();
  const auto total = total_distances(tree.parents(), n);
  const auto best = *std::min_element(total.begin() + 1, total.end());
  std::vector<Label> argmin;
  for (std::size_t v = 1; v <= n; ++v) {
    if (total[v] == best) argmin.push_back(static_cast<Label>(v));
  }
  auto labels = find_centroids(tree).centroid_labels;
  std::sort(labels.begin(), labels.end());
  return labels == argmin;
}

// 2. Branch-rule centroids equal the distance minimisers.
Outcome centroid_definition() {
  Tracker t;
  std::size_t enumerated = 0;
  for (const auto& fam : families()) {
    for (unsigned n = 1; n <= 8; ++n) {
      for (const auto& [parent, prob] : oracle::weighted_trees(fam.kind, fam.d, n)) {
        ++enumerated;
        auto labels = find_centroids(as_tree(parent, fam.params)).centroid_labels;
        std::sort(labels.begin(), labels.end());
        t.require(labels == oracle::distance_centroids(parent), fam.params.tag() + " enumerated n=" + std::to_string(n));
      }
    }
  }
  std::size_t random = 0;
  for (const auto& fam : families()) {
    for (std::uint64_t n : {1000u, 10000u}) {
      for (std::uint64_t i = 0; i < 10000; ++i) {
        ++random;
        const auto tree = sample_tree(fam.params, n, RngStream{20240 + n, i});
        t.require(matches_argmin(tree), fam.params.tag() + " random n=" + std::to_string(n) + " tree " + std::to_string(i));
      }
    }
  }
  return t.outcome(std::to_string(enumerated) + " enumerated and " + std::to_string(random) + " random trees");
}

ExperimentConfig simulation_config(const FamilyParams& family) {
  ExperimentConfig config;
  config.family = family;
  config.n = 10000;
  config.trials = 100000;
  config.master_seed = 20240601;
  config.subtree_bins = 25;
  return config;
}

double label_one(const MCSummary& s) {
  const auto& t = s.tables.at(Collector::Label);
  return t.mass_at(1.0);
}

// 3. Limit laws reproduced by simulation.
Outcome simulation_laws(const MCSummary& rec, const MCSummary& plane, const MCSummary& binary) {
  Tracker t;
  auto moments = [](const MCSummary& s, Collector c) { return s.moments.at(c); };

  t.near(1.0, moments(rec, Collector::Depth).mean, 0.02, "recursive mean D");
  t.near(0.7726, moments(rec, Collector::Depth).variance, 0.03, "recursive var D");
  t.near(1.0 - kLn2, label_one(rec), 0.01, "recursive P(L=1)");
  t.near(2.5, moments(rec, Collector::Label).mean, 0.05, "recursive mean L");
  t.near(0.7598, moments(rec, Collector::SubtreeFraction).mean, 0.01, "recursive mean S/n");
  const double tv = compare_distributions(rec.tables.at(Collector::Depth), depth_limit_table(1.0, 40)).tv_distance;
  t.near(0.0, tv, 0.01, "recursive depth TV");

  t.near(0.5, moments(plane, Collector::Depth).mean, 0.02, "plane mean D");
  t.near(1.75, moments(plane, Collector::Label).mean, 0.05, "plane mean L");
  t.near(2.0 - std::numbers::sqrt2, label_one(plane), 0.01, "plane P(L=1)");
  t.near(0.8646, moments(plane, Collector::SubtreeFraction).mean, 0.01, "plane mean S/n");

  t.near(2.0, moments(binary, Collector::Depth).mean, 0.05, "binary mean D");
  t.near(4.0, moments(binary, Collector::Label).mean, 0.15, "binary mean L");
  t.require(label_one(binary) <= 0.05, "binary P(L=1) " + fmt(label_one(binary)));
  t.near(0.6137, moments(binary, Collector::SubtreeFraction).mean, 0.015, "binary mean S/n");
  t.near(2 * kLn2 - 1, moments(binary, Collector::SubtreeFraction).second_moment, 0.015, "binary E((S/n)^2)");

  return t.outcome("recursive E(D)=" + fmt_fixed(moments(rec, Collector::Depth).mean) +
                   " Var(D)=" + fmt_fixed(moments(rec, Collector::Depth).variance) + " TV=" + fmt_fixed(tv) +
                   ", plane E(L)=" + fmt_fixed(moments(plane, Collector::Label).mean) +
                   ", binary E(S/n)=" + fmt_fixed(moments(binary, Collector::SubtreeFraction).mean));
}

// 4. Two-centroid frequency in recursive trees of size 1000.
Outcome two_centroid_rate() {
  ExperimentConfig config;
  config.family = FamilyParams::recursive();
  config.n = 1000;
  config.trials = 200000;
  config.master_seed = 1000;
  config.collectors = {Collector::TwoCentroid};
  const double freq = *run_experiment(config).two_centroid_frequency;
  const double p = 1000.0 / (501.0 * 500.0);
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(config.trials));
  Tracker t;
  t.near(p, freq, 3 * sigma, "two-centroid frequency");
  t.near(p, prob_two_centroids(config.family, config.n), 1e-15, "exact two-centroid probability");
  return t.outcome("frequency " + fmt(freq) + " vs " + fmt(p) + ", " + fmt((freq - p) / sigma) + " sigma");
}

// 5. Exact path probabilities never exceed the stated bounds.
Outcome bound_suite() {
  Tracker t;
  std::vector<std::uint64_t> sizes{3, 4, 5, 6, 7, 8, 20, 40, 60};
  for (const auto& fam : families()) {
    const double alpha = fam.params.alpha();
    for (std::uint64_t n : sizes) {
      for (std::uint64_t k = 1; k <= n; ++k) {
        for (double sigma : {0.5, 0.6, 0.75}) {
          const double p = p_lambda_exact({fam.params, n, k, sigma});
          const auto bound = p_lambda_upper_bound(alpha, k, sigma);
          const std::string at = fam.params.tag() + " n=" + std::to_string(n) + " k=" + std::to_string(k);
          t.require(p <= bound.general, at + " general bound");
          if (bound.sharp) t.require(p <= *bound.sharp, at + " sharp bound");
        }
      }
    }
  }
  return t.outcome("violations " + std::to_string(t.failures));
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, a, b);
}

// 6. Internal coherence of the limit laws.
Outcome analytical_coherence() {
  Tracker t;
  for (double alpha : {0.5, 1.0, 1.25, 1.5, 2.0}) {
    const std::string a = "alpha=" + fmt(alpha);
    for (std::uint64_t h = 0; h <= 40; ++h) {
      const auto x = depth_limit_dist(alpha, h);
      t.near(x.ccdf - depth_limit_dist(alpha, h + 1).ccdf, x.pmf, 1e-12, a + " pmf/ccdf h=" + std::to_string(h));
    }
    for (double v : {0.1, 0.3, 0.5, 0.9}) {
      double series = 0.0;
      for (std::uint64_t h = 0; h <= 60; ++h) series += depth_limit_dist(alpha, h).ccdf * std::pow(v, static_cast<double>(h));
      t.near(eval_depth_gf(alpha, v).C, series, 1e-10, a + " gf v=" + fmt(v));
    }
    const auto labels = label_limit_table(alpha, 200);
    t.near(1.0, labels.total_mass() + labels.truncation_tail_bound, 1e-9, a + " label normalisation");
    double depth_mean = 0.0;
    for (std::uint64_t h = 0; h <= 80; ++h) depth_mean += h * depth_limit_dist(alpha, h).pmf;
    t.near(alpha, depth_mean, 1e-9, a + " depth mean");
    double label_mean = 0.0;
    for (std::size_t i = 0; i < labels.support.size(); ++i) label_mean += labels.support[i] * labels.mass[i];
    t.near(1.0 + 1.5 * alpha, label_mean, 1e-8, a + " label mean");
    const double first = integrate([&](double th) { return th * subtree_limit_density(alpha, th); }, 0.5, 1.0);
    t.near(subtree_limit_moment(alpha, 1), first + point_mass(alpha), 1e-8, a + " subtree mean");
    t.require(point_mass(alpha) == label_limit_pmf(alpha, 1), a + " point mass is P(L=1)");
    t.near(label_limit_pmf(alpha, 1), 1.0 - depth_limit_dist(alpha, 1).ccdf, 1e-12, a + " P(D=0) is P(L=1)");
    for (std::uint64_t k = 1; k <= 12; ++k) {
      double displaced = 0.0;
      for (std::uint64_t j = 1; j <= 400; ++j) displaced += lim_p_lambda(alpha, k + j) * parent_prob(alpha, k, j);
      t.near(label_limit_pmf(alpha, k), lim_p_lambda(alpha, k) - displaced, 1e-8, a + " parent decomposition k=" + std::to_string(k));
    }
  }
  for (double alpha : {0.5, 1.0, 1.25, 2.0}) {
    const double mass = integrate([&](double th) { return subtree_limit_density(alpha, th); }, 0.5, 1.0);
    t.near(1.0, mass + point_mass(alpha), 1e-9, "alpha=" + fmt(alpha) + " density normalisation");
  }
  for (std::uint64_t h = 0; h <= 10; ++h) {
    for (double eps : {1e-6, -1e-6, 1e-10, -1e-10}) {
      t.near(depth_limit_dist(1.0, h).ccdf, depth_limit_dist(1.0 + eps, h).ccdf, 10 * std::fabs(eps), "ramp h=" + std::to_string(h));
    }
  }
  return t.outcome("max deviation " + fmt(t.worst));
}

// 7. Histogram of S/n against the limiting density and atom.
Outcome subtree_histogram(const MCSummary& rec) {
  Tracker t;
  const auto& table = rec.tables.at(Collector::SubtreeFraction);
  const std::size_t bins = rec.config.subtree_bins;
  t.require(table.support.size() == bins + 1, "bin count");
  double worst_bin = 0.0;
  for (std::size_t i = 0; i < bins && i < table.support.size(); ++i) {
    const double lo = 0.5 + 0.5 * static_cast<double>(i) / bins;
    const double hi = 0.5 + 0.5 * static_cast<double>(i + 1) / bins;
    const double expected = subtree_limit_cdf(1.0, hi) - subtree_limit_cdf(1.0, lo);
    worst_bin = std::max(worst_bin, std::fabs(table.mass[i] - expected));
    t.near(expected, table.mass[i], 0.02, "bin " + std::to_string(i));
  }
  const double atom = table.mass.back();
  t.near(1.0 - kLn2, atom, 0.01, "atom at S=n");
  return t.outcome("worst bin deviation " + fmt(worst_bin) + ", atom " + fmt_fixed(atom));
}

// 8. Identical JSON across runs and thread counts.
Outcome determinism() {
  ExperimentConfig config;
  config.family = FamilyParams::plane_oriented();
  config.n = 1000;
  config.trials = 4000;
  config.master_seed = 8;
  const auto a = to_json(run_experiment(config, {1, 256})).dump();
  const auto b = to_json(run_experiment(config, {1, 256})).dump();
  const auto c = to_json(run_experiment(config, {4, 256})).dump();
  const auto d = to_json(run_experiment(config, {4, 37})).dump();
  Tracker t;
  t.require(a == b, "repeat run differs");
  t.require(a == c, "4 threads differ from 1");
  t.require(a == d, "chunk size changes output");
  return t.outcome(std::to_string(a.size()) + " bytes of JSON");
}

}  // namespace

int main() {
  bool all = true;
  auto report = [&](int number, const char* name, const std::function<Outcome()>& run) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && o.pass;
    std::printf("criterion %d %s: %s (%s; %.1f s)\n", number, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds);
    std::fflush(stdout);
  };

  report(1, "oracle equivalence", oracle_equivalence);
  report(2, "centroid definition", centroid_definition);

  MCSummary rec, plane, binary;
  report(3, "simulated limit laws", [&] {
    rec = run_experiment(simulation_config(FamilyParams::recursive()));
    plane = run_experiment(simulation_config(FamilyParams::plane_oriented()));
    binary = run_experiment(simulation_config(FamilyParams::d_ary(2)));
    return simulation_laws(rec, plane, binary);
  });
  report(4, "two-centroid rate", two_centroid_rate);
  report(5, "bound suite", bound_suite);
  report(6, "analytical coherence", analytical_coherence);
  report(7, "subtree histogram", [&] {
    if (rec.tables.empty()) rec = run_experiment(simulation_config(FamilyParams::recursive()));
    return subtree_histogram(rec);
  });
  report(8, "determinism", determinism);
  return all ? 0 : 1;
}
