#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "centroidlab/centroidlab.hpp"

namespace centroidlab::cli {

enum ExitCode : int { kOk = 0, kDomainError = 1, kUsageError = 2 };

/// Raised for any invocation that is rejected before computation starts.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CliInvocation {
  std::string subcommand;
  std::optional<std::string> help;  // set when --help was requested
  FamilyParams family = FamilyParams::recursive();

  std::optional<std::uint64_t> n;
  std::optional<std::uint64_t> k;
  std::optional<std::uint64_t> h;
  std::optional<std::uint64_t> m;
  std::optional<std::uint64_t> order;  // moment order
  std::optional<double> sigma;
  std::optional<double> theta;
  std::optional<double> v;
  std::uint64_t trials = 1000;
  std::uint64_t count = 1;
  std::uint64_t seed = 0;
  std::uint64_t bins = 25;
  unsigned threads = 0;
  std::string format = "csv";
  std::optional<std::string> out_path;
  std::optional<std::string> plot_script;
  bool wall_time = false;
  std::vector<Collector> collectors;

  // Query selector for `exact` and `limit`.
  std::string query;
};

namespace detail {

inline std::string fmt(double x) { return centroidlab::detail::format_number(x); }

inline std::uint64_t default_seed() {
  if (const char* env = std::getenv("CENTROIDLAB_SEED")) {
    try {
      std::size_t used = 0;
      const auto value = std::stoull(env, &used);
      if (used == std::string(env).size()) return value;
    } catch (const std::exception&) {
    }
    throw UsageError("CENTROIDLAB_SEED must be a non-negative integer");
  }
  return 0;
}

struct FamilyFlags {
  std::optional<std::string> family;
  std::optional<double> alpha;
  std::optional<unsigned> d;

  void attach(CLI::App& app) {
    app.add_option("--family", family, "recursive | plane | dary | alpha");
    app.add_option("--alpha", alpha, "family parameter alpha = 1 + c2/c1");
    app.add_option("--d", d, "arity of the d-ary family");
  }

  FamilyParams resolve() const {
    if (alpha && !(*alpha > 0.0)) throw UsageError("alpha must be positive");
    if (d && *d < 2) throw UsageError("d ≥ 2 required");
    if (!family) {
      if (d) throw UsageError("--d requires --family dary");
      return alpha ? FamilyParams::general(*alpha) : FamilyParams::recursive();
    }
    FamilyParams result = FamilyParams::recursive();
    if (*family == "recursive") {
      result = FamilyParams::recursive();
    } else if (*family == "plane") {
      result = FamilyParams::plane_oriented();
    } else if (*family == "dary") {
      result = FamilyParams::d_ary(d.value_or(2));
    } else if (*family == "alpha") {
      if (!alpha) throw UsageError("--family alpha requires --alpha");
      return FamilyParams::general(*alpha);
    } else {
      throw UsageError("unknown family '" + *family + "'");
    }
    if (d && result.variant() != Variant::DAry) throw UsageError("--d only applies to --family dary");
    if (alpha && *alpha != result.alpha()) {
      throw UsageError("contradictory family and alpha: " + *family + " has alpha " + fmt(result.alpha()));
    }
    return result;
  }
};

// Registers mutually exclusive query flags and reports which one was used.
class QuerySet {
 public:
  explicit QuerySet(CLI::App& app) : app_(app) {}

  template <class T>
  void value(const std::string& flag, std::optional<T>& target, const std::string& help) {
    app_.add_option(flag, target, help);
    names_.push_back(flag);
  }

  void flag(const std::string& flag, const std::string& help) {
    app_.add_flag(flag, help);
    names_.push_back(flag);
  }

  std::string selected() const {
    std::string chosen;
    for (const auto& name : names_) {
      if (app_.count(name) == 0) continue;
      if (!chosen.empty()) throw UsageError("choose only one of " + chosen + " and " + name);
      chosen = name;
    }
    if (chosen.empty()) throw UsageError(app_.get_name() + ": no query selected");
    return chosen.substr(2);
  }

 private:
  CLI::App& app_;
  std::vector<std::string> names_;
};

}  // namespace detail

/// Parses argv[1..]; throws UsageError on any invalid invocation.
inline CliInvocation parse_args(const std::vector<std::string>& args) {
  CliInvocation inv;
  CLI::App app{"Centroids of random very simple increasing trees", "centroidlab"};
  app.require_subcommand(1);
  detail::FamilyFlags family_flags;

  // Values shared by several subcommands.
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_path;
  std::optional<std::string> plot_script;
  std::vector<std::string> collect;
  // Query values that land in a shared invocation field after parsing.
  std::optional<std::uint64_t> subtree_count_m;
  std::optional<std::uint64_t> lambda_k;
  std::optional<std::uint64_t> depth_order;
  std::optional<std::uint64_t> label_order;
  std::optional<std::uint64_t> subtree_order;
  std::optional<double> displaced_theta;

  auto add_common = [&](CLI::App* sub) {
    family_flags.attach(*sub);
    sub->add_option("-o,--out", out_path, "write output to this path instead of standard output");
  };

  auto* sample = app.add_subcommand("sample", "sample trees and write them as parent lists");
  add_common(sample);
  sample->add_option("-n", inv.n, "tree size")->required();
  sample->add_option("--seed", seed, "master seed (default: $CENTROIDLAB_SEED or 0)");
  sample->add_option("--count", inv.count, "number of trees")->check(CLI::PositiveNumber);

  auto* exact = app.add_subcommand("exact", "exact finite-n probabilities");
  add_common(exact);
  exact->add_option("-n", inv.n, "tree size")->required();
  exact->add_option("--sigma", inv.sigma, "descendant fraction for --k (default 1/2)");
  detail::QuerySet exact_queries(*exact);
  exact_queries.value("--k", inv.k, "P(node k has >= floor(sigma n) descendants)");
  exact_queries.value("--depth", inv.h, "P(D >= h)");
  exact_queries.value("--m", inv.m, "P(S = m)");
  exact_queries.value("--subtree-count", subtree_count_m, "expected number of subtrees of this size");
  exact_queries.flag("--two-centroids", "probability of two centroids (even n)");
  exact_queries.flag("--subtree-pmf", "full law of S");
  exact_queries.flag("--depth-pmf", "full law of D");
  exact_queries.flag("--moon", "recursive-tree depth and label means and branch law");

  auto* limit = app.add_subcommand("limit", "limiting laws as n grows");
  add_common(limit);
  detail::QuerySet limit_queries(*limit);
  limit_queries.value("--depth", inv.h, "P(D >= h) and P(D = h)");
  limit_queries.value("--label", inv.k, "P(L = k)");
  limit_queries.value("--lambda", lambda_k, "probability that node k lies on the centroid path");
  limit_queries.value("--depth-moment", depth_order, "factorial moment of D");
  limit_queries.value("--label-moment", label_order, "factorial moment of L");
  limit_queries.value("--subtree-moment", subtree_order, "E(S^r)");
  limit_queries.value("--subtree-density", inv.theta, "density of S at theta");
  limit_queries.value("--not-centroid", displaced_theta, "limit probability that the subtree root is displaced, at theta");
  limit_queries.value("--gf", inv.v, "C(v) and A(v)");
  limit_queries.flag("--depth-mean", "E(D)");
  limit_queries.flag("--depth-variance", "Var(D)");
  limit_queries.flag("--label-mean", "E(L)");
  limit_queries.flag("--label-variance", "Var(L)");
  limit_queries.flag("--point-mass", "P(S = 1)");

  auto add_experiment = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_option("-n", inv.n, "tree size")->required();
    sub->add_option("--trials", inv.trials, "number of trees")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "master seed (default: $CENTROIDLAB_SEED or 0)");
    sub->add_option("--collect", collect, "depth | label | subtree_fraction | two_centroid (repeatable)");
    sub->add_option("--bins", inv.bins, "subtree-fraction bins")->check(CLI::Range(2, 1 << 20));
    sub->add_option("--threads", inv.threads, "worker threads (default: all cores)");
    sub->add_option("--format", inv.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  };
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo laws next to their limits");
  add_experiment(simulate);
  simulate->add_option("--plot-script", plot_script, "write a gnuplot script for the CSV output");
  simulate->add_flag("--wall-time", inv.wall_time, "include wall time in JSON output");
  auto* compare = app.add_subcommand("compare", "distance between Monte Carlo and limit laws");
  add_experiment(compare);

  auto* oracle = app.add_subcommand("oracle", "exact formulas against exhaustive enumeration");
  add_common(oracle);
  oracle->add_option("-n", inv.n, "largest size enumerated (2..9)")->required();

  auto* dot = app.add_subcommand("export-dot", "one sampled tree in DOT format");
  add_common(dot);
  dot->add_option("-n", inv.n, "tree size")->required();
  dot->add_option("--seed", seed, "master seed (default: $CENTROIDLAB_SEED or 0)");

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    const auto* chosen = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    inv.help = chosen->help();
    return inv;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  const CLI::App* sub = app.get_subcommands().front();
  inv.subcommand = sub->get_name();
  inv.family = family_flags.resolve();
  inv.seed = seed ? *seed : detail::default_seed();
  inv.out_path = out_path;
  inv.plot_script = plot_script;
  if (inv.subcommand == "exact") inv.query = exact_queries.selected();
  if (inv.subcommand == "limit") inv.query = limit_queries.selected();
  if (subtree_count_m) inv.m = subtree_count_m;
  if (lambda_k) inv.k = lambda_k;
  if (displaced_theta) inv.theta = displaced_theta;
  for (const auto& order : {depth_order, label_order, subtree_order}) {
    if (order) inv.order = order;
  }
  if (inv.subcommand == "simulate" || inv.subcommand == "compare") {
    if (collect.empty()) collect = {"depth", "label", "subtree_fraction", "two_centroid"};
    for (const auto& name : collect) {
      try {
        inv.collectors.push_back(collector_from_string(name));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
  }
  if (inv.n && *inv.n < 1) throw UsageError("n must be at least 1");
  if (inv.subcommand == "oracle" && (*inv.n < 2 || *inv.n > 9)) throw UsageError("oracle: n must lie in 2..9");
  if (inv.plot_script && !inv.out_path) throw UsageError("--plot-script needs --out for the data file");
  if (inv.plot_script && inv.format != "csv") throw UsageError("--plot-script needs --format csv");
  if (inv.subcommand != "limit" && inv.subcommand != "oracle" && !inv.family.realizable()) {
    throw UsageError("alpha=" + detail::fmt(inv.family.alpha()) +
                     " has no growth process; alpha > 1 requires alpha = d/(d-1)");
  }
  return inv;
}

namespace detail {

inline void write_row(std::ostream& os, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) os << ',';
    os << c;
    first = false;
  }
  os << '\n';
}

inline void write_table(std::ostream& os, const DistributionTable& table) {
  os << "support,mass,provenance\n";
  for (std::size_t i = 0; i < table.support.size(); ++i) {
    write_row(os, {fmt(table.support[i]), fmt(table.mass[i]), to_string(table.provenance)});
  }
}

inline void run_exact(const CliInvocation& inv, std::ostream& out) {
  const auto& f = inv.family;
  const std::uint64_t n = *inv.n;
  const double alpha = f.alpha();
  const std::string& q = inv.query;
  if (q == "k") {
    out << fmt(p_lambda_exact({f, n, *inv.k, inv.sigma.value_or(0.5)})) << '\n';
  } else if (q == "depth") {
    out << fmt(p_depth_ge_exact(f, n, *inv.h)) << '\n';
  } else if (q == "m") {
    out << fmt(p_centroid_subtree_exact(f, n, *inv.m)) << '\n';
  } else if (q == "subtree-count") {
    out << fmt(expected_subtree_count(alpha, n, *inv.m)) << '\n';
  } else if (q == "two-centroids") {
    out << fmt(prob_two_centroids(f, n)) << '\n';
  } else if (q == "subtree-pmf") {
    write_table(out, centroid_subtree_pmf_exact(f, n));
  } else if (q == "depth-pmf") {
    DistributionTable table;
    for (std::uint64_t h = 0; h < n; ++h) {
      table.support.push_back(static_cast<double>(h));
      table.mass.push_back(p_depth_ge_exact(f, n, h) - p_depth_ge_exact(f, n, h + 1));
    }
    write_table(out, table);
  } else if (q == "moon") {
    const auto stats = moon_recursive_stats(f, n);
    out << "expected_depth," << fmt(stats.expected_depth) << '\n';
    out << "expected_label," << fmt(stats.expected_label) << '\n';
    for (std::size_t b = 0; b < stats.ancestral_branch_pmf.size(); ++b) {
      out << "branch_" << b << ',' << fmt(stats.ancestral_branch_pmf[b]) << '\n';
    }
  }
}

inline void run_limit(const CliInvocation& inv, std::ostream& out) {
  const double a = inv.family.alpha();
  const std::string& q = inv.query;
  if (q == "depth") {
    const auto d = depth_limit_dist(a, *inv.h);
    out << "ccdf," << fmt(d.ccdf) << "\npmf," << fmt(d.pmf) << '\n';
  } else if (q == "label") {
    out << fmt(label_limit_pmf(a, *inv.k)) << '\n';
  } else if (q == "lambda") {
    out << fmt(lim_p_lambda(a, *inv.k)) << '\n';
  } else if (q == "depth-moment") {
    out << fmt(depth_limit_factorial_moment(a, *inv.order)) << '\n';
  } else if (q == "label-moment") {
    out << fmt(label_limit_factorial_moment(a, *inv.order)) << '\n';
  } else if (q == "subtree-moment") {
    out << fmt(subtree_limit_moment(a, *inv.order)) << '\n';
  } else if (q == "subtree-density") {
    out << fmt(subtree_limit_density(a, *inv.theta)) << '\n';
  } else if (q == "not-centroid") {
    out << fmt(not_centroid_asym(a, *inv.theta)) << '\n';
  } else if (q == "gf") {
    const auto g = eval_depth_gf(a, *inv.v);
    out << "C," << fmt(g.C) << "\nA," << fmt(g.A) << '\n';
  } else if (q == "depth-mean") {
    out << fmt(depth_limit_mean(a)) << '\n';
  } else if (q == "depth-variance") {
    out << fmt(depth_limit_variance(a)) << '\n';
  } else if (q == "label-mean") {
    out << fmt(label_limit_mean(a)) << '\n';
  } else if (q == "label-variance") {
    out << fmt(label_limit_variance(a)) << '\n';
  } else if (q == "point-mass") {
    out << fmt(point_mass(a)) << '\n';
  }
}

inline ExperimentConfig experiment_config(const CliInvocation& inv) {
  ExperimentConfig config;
  config.family = inv.family;
  config.n = *inv.n;
  config.trials = inv.trials;
  config.master_seed = inv.seed;
  config.collectors = inv.collectors;
  config.subtree_bins = inv.bins;
  return config;
}

/// Limit-law counterpart of an empirical table, on a support that covers it.
inline DistributionTable reference_table(const ExperimentConfig& config, Collector c, const DistributionTable& empirical) {
  const double alpha = config.family.alpha();
  const auto top = empirical.support.empty() ? 0 : static_cast<std::uint64_t>(empirical.support.back());
  switch (c) {
    case Collector::Depth: return depth_limit_table(alpha, std::max<std::uint64_t>(top, 40));
    case Collector::Label: return label_limit_table(alpha, std::max<std::uint64_t>(top, 200));
    case Collector::SubtreeFraction: return subtree_limit_table(alpha, config.subtree_bins);
    case Collector::TwoCentroid: {
      DistributionTable table;
      table.provenance = Provenance::Exact;
      const double p = config.n % 2 == 0 ? prob_two_centroids(config.family, config.n) : 0.0;
      table.support = {0.0, 1.0};
      table.mass = {1.0 - p, p};
      return table;
    }
  }
  return {};
}

inline void write_plot_script(std::ostream& os, const std::string& data_path, const MCSummary& s) {
  os << "# gnuplot script; data columns: collector,support,mass,provenance\n";
  os << "set datafile separator ','\n";
  os << "set key top right\n";
  os << "set style data linespoints\n";
  std::size_t index = 0;
  for (const auto& [c, table] : s.tables) {
    const std::string name = to_string(c);
    os << "set title '" << name << " (" << s.config.family.tag() << ", n=" << s.config.n << ")'\n";
    os << "set xlabel '" << name << "'\nset ylabel 'probability'\n";
    if (index++ > 0) os << "pause -1 'next plot'\n";
    os << "plot '" << data_path << "' using (strcol(1) eq '" << name
       << "' && strcol(4) eq 'empirical' ? $2 : 1/0):3 title 'empirical', \\\n"
       << "     '" << data_path << "' using (strcol(1) eq '" << name
       << "' && strcol(4) ne 'empirical' ? $2 : 1/0):3 title 'reference'\n";
  }
}

// Writes to the --out path when given, otherwise to `fallback`.
class Sink {
 public:
  Sink(const std::optional<std::string>& path, std::ostream& fallback) : stream_(&fallback) {
    if (path) {
      file_.open(*path);
      if (!file_) throw std::runtime_error("cannot open '" + *path + "' for writing");
      stream_ = &file_;
    }
  }

  std::ostream& stream() { return *stream_; }

  void close() {
    if (file_.is_open()) {
      file_.close();
      if (!file_) throw std::runtime_error("failed writing output file");
    }
  }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

inline void run_simulate(const CliInvocation& inv, std::ostream& out) {
  const auto config = experiment_config(inv);
  const auto summary = run_experiment(config, {inv.threads});
  if (inv.format == "json") {
    auto json = to_json(summary, inv.wall_time);
    out << json.dump(2) << '\n';
    return;
  }
  out << "collector,support,mass,provenance\n";
  for (const auto& [c, table] : summary.tables) {
    write_csv(out, to_string(c), table);
    write_csv(out, to_string(c), reference_table(config, c, table));
  }
  if (inv.plot_script) {
    std::ofstream script(*inv.plot_script);
    if (!script) throw std::runtime_error("cannot open '" + *inv.plot_script + "' for writing");
    write_plot_script(script, *inv.out_path, summary);
    if (!script) throw std::runtime_error("failed writing plot script");
  }
}

inline void run_compare(const CliInvocation& inv, std::ostream& out) {
  const auto config = experiment_config(inv);
  const auto summary = run_experiment(config, {inv.threads});
  nlohmann::ordered_json json = nlohmann::ordered_json::object();
  if (inv.format == "csv") out << "collector,tv_distance,max_cdf_diff,z_mean,z_second_moment\n";
  for (const auto& [c, table] : summary.tables) {
    const auto stats = compare_distributions(table, reference_table(config, c, table));
    std::string z1 = "";
    std::string z2 = "";
    for (const auto& [order, z] : stats.moment_z_scores) (order == 1 ? z1 : z2) = fmt(z);
    if (inv.format == "csv") {
      write_row(out, {to_string(c), fmt(stats.tv_distance), fmt(stats.max_cdf_diff), z1, z2});
    } else {
      nlohmann::ordered_json entry = {{"tv_distance", stats.tv_distance}, {"max_cdf_diff", stats.max_cdf_diff}};
      nlohmann::ordered_json zs = nlohmann::ordered_json::array();
      for (const auto& [order, z] : stats.moment_z_scores) zs.push_back({{"order", order}, {"z", z}});
      entry["moment_z_scores"] = zs;
      json[to_string(c)] = entry;
    }
  }
  if (inv.format == "json") out << json.dump(2) << '\n';
}

inline bool run_oracle(const CliInvocation& inv, std::ostream& out) {
  const auto report = run_oracle_suite(inv.family, *inv.n);
  out << "family " << inv.family.tag() << ", n = 2.." << *inv.n << '\n';
  out << "check,comparisons,max_abs_error,result\n";
  for (const auto& c : report.checks) {
    write_row(out, {c.name, std::to_string(c.comparisons), fmt(c.max_abs_error), c.pass ? "PASS" : "FAIL"});
  }
  out << (report.pass() ? "all checks passed" : "some checks FAILED") << '\n';
  return report.pass();
}

inline void write_dot(std::ostream& out, const IncreasingTree& tree, std::uint64_t seed) {
  const auto report = find_centroids(tree);
  out << "digraph increasing_tree {\n";
  out << "  // family=" << tree.family().tag() << " n=" << tree.size() << " seed=" << seed << '\n';
  out << "  node [shape=circle];\n";
  for (Label v = 1; v <= tree.size(); ++v) {
    out << "  " << v << " [label=\"" << v << '"';
    const bool centroid =
        std::find(report.centroid_labels.begin(), report.centroid_labels.end(), v) != report.centroid_labels.end();
    if (centroid) {
      out << ", shape=doublecircle, style=filled, fillcolor=lightgrey, xlabel=\""
          << (v == report.nearest_label ? "centroid" : "second centroid") << '"';
    }
    out << "];\n";
  }
  for (Label v = 2; v <= tree.size(); ++v) out << "  " << tree.parent(v) << " -> " << v << ";\n";
  out << "}\n";
}

}  // namespace detail

/// Runs a parsed invocation; returns the process exit code.
inline int execute(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  if (inv.help) {
    out << *inv.help;
    return kOk;
  }
  try {
    detail::Sink sink(inv.out_path, out);
    std::ostream& os = sink.stream();
    int code = kOk;
    if (inv.subcommand == "sample") {
      std::vector<IncreasingTree> trees;
      for (std::uint64_t i = 0; i < inv.count; ++i) trees.push_back(sample_tree(inv.family, *inv.n, {inv.seed, i}));
      write_trees(os, inv.family, *inv.n, inv.seed, trees);
    } else if (inv.subcommand == "exact") {
      detail::run_exact(inv, os);
    } else if (inv.subcommand == "limit") {
      detail::run_limit(inv, os);
    } else if (inv.subcommand == "simulate") {
      detail::run_simulate(inv, os);
    } else if (inv.subcommand == "compare") {
      detail::run_compare(inv, os);
    } else if (inv.subcommand == "oracle") {
      if (!detail::run_oracle(inv, os)) code = kDomainError;
    } else if (inv.subcommand == "export-dot") {
      detail::write_dot(os, sample_tree(inv.family, *inv.n, {inv.seed, 0}), inv.seed);
    }
    sink.close();
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDomainError;
  }
}

/// Parses and runs; usage errors go to `err` with exit code 2.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliInvocation inv;
  try {
    inv = parse_args(args);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::domain_error& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }
  return execute(inv, out, err);
}

}  // namespace centroidlab::cli
