#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "centroidlab/analysis.hpp"
#include "centroidlab/treegen.hpp"
#include "oracles.hpp"

using namespace centroidlab;

namespace {

std::vector<FamilyParams> families() {
  return {FamilyParams::recursive(), FamilyParams::plane_oriented(), FamilyParams::d_ary(2), FamilyParams::d_ary(3),
          FamilyParams::general(0.3)};
}

ExactRational parent3_probability(const FamilyParams& f, Label p) {
  ExactRational total = 0;
  for (const auto& [tree, prob] : enumerate_histories(f, 3)) {
    if (tree.parent(3) == p) total += prob;
  }
  return total;
}

}  // namespace

TEST(SampleTree, SmallSizes) {
  const auto one = sample_tree(FamilyParams::recursive(), 1, {3, 0});
  EXPECT_EQ(one.size(), 1u);
  EXPECT_TRUE(one.parent_list().empty());
  for (const auto& f : families()) {
    for (std::uint64_t s = 0; s < 20; ++s) EXPECT_EQ(sample_tree(f, 2, {s, s}).parent(2), 1u);
  }
}

TEST(SampleTree, RecursiveThirdNodeIsFair) {
  const int draws = 100000;
  int to_root = 0;
  for (int i = 0; i < draws; ++i) to_root += sample_tree(FamilyParams::recursive(), 3, {11, static_cast<std::uint64_t>(i)}).parent(3) == 1;
  const double sd = std::sqrt(0.25 / draws);
  EXPECT_NEAR(to_root / static_cast<double>(draws), 0.5, 3 * sd);
}

TEST(SampleTree, Reproducible) {
  for (const auto& f : families()) {
    EXPECT_EQ(sample_tree(f, 500, {77, 3}), sample_tree(f, 500, {77, 3})) << f.tag();
    EXPECT_NE(sample_tree(f, 500, {77, 3}).parent_list(), sample_tree(f, 500, {77, 4}).parent_list()) << f.tag();
  }
}

TEST(SampleTree, RespectsDegreeCapAtScale) {
  for (int d : {2, 3}) {
    const auto tree = sample_tree(FamilyParams::d_ary(d), 20000, {1, 2});
    std::vector<int> outdeg(tree.size() + 1, 0);
    for (Label k = 2; k <= tree.size(); ++k) {
      ASSERT_LT(tree.parent(k), k);
      ASSERT_LE(++outdeg[tree.parent(k)], d);
    }
  }
}

TEST(SampleTree, UnrealizableFamilyThrows) {
  EXPECT_THROW(sample_tree(FamilyParams::general(1.7), 10, {0, 0}), std::domain_error);
}

// Shape frequencies from 10^6 draws against the exact history law.
class SamplerLaw : public ::testing::TestWithParam<SamplingMethod> {};

TEST_P(SamplerLaw, MatchesEnumeratedLaw) {
  const int draws = 1000000;
  for (const auto& f : families()) {
    for (std::size_t n = 2; n <= 6; ++n) {
      std::map<std::vector<Label>, double> exact;
      for (const auto& [tree, prob] : enumerate_histories(f, n)) exact[tree.parent_list()] = prob.convert_to<double>();
      std::map<std::vector<Label>, int> counts;
      auto gen = RngStream{2024, n}.engine();
      for (int i = 0; i < draws; ++i) ++counts[sample_tree_with(f, n, gen, GetParam()).parent_list()];
      double tv = 0.0;
      for (const auto& [shape, p] : exact) {
        const auto it = counts.find(shape);
        tv += std::fabs((it == counts.end() ? 0 : it->second) / static_cast<double>(draws) - p);
      }
      for (const auto& [shape, c] : counts) {
        if (!exact.count(shape)) tv += c / static_cast<double>(draws);
      }
      EXPECT_LE(0.5 * tv, 0.005) << f.tag() << " n=" << n;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Methods, SamplerLaw, ::testing::Values(SamplingMethod::Direct, SamplingMethod::Fenwick),
                         [](const auto& info) { return info.param == SamplingMethod::Direct ? "Direct" : "Fenwick"; });

// Larger trees: depth of node n and root degree agree between the two methods.
TEST(SampleTree, MethodsAgreeOnLargeTrees) {
  const int draws = 4000;
  const std::size_t n = 500;
  for (const auto& f : families()) {
    double depth[2] = {0, 0};
    double depth_sq[2] = {0, 0};
    int m = 0;
    for (auto method : {SamplingMethod::Direct, SamplingMethod::Fenwick}) {
      for (int i = 0; i < draws; ++i) {
        const auto tree = sample_tree(f, n, {77 + static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(i)}, method);
        const double d = depth_of(tree, static_cast<Label>(n));
        depth[m] += d / draws;
        depth_sq[m] += d * d / draws;
      }
      ++m;
    }
    const double var = depth_sq[0] - depth[0] * depth[0] + depth_sq[1] - depth[1] * depth[1];
    EXPECT_NEAR(depth[0], depth[1], 4 * std::sqrt(var / draws)) << f.tag();
  }
}

TEST(EnumerateHistories, ProbabilitiesSumToExactlyOne) {
  for (const auto& f : families()) {
    for (std::size_t n = 1; n <= 8; ++n) {
      ExactRational total = 0;
      for (const auto& entry : enumerate_histories(f, n)) total += entry.second;
      EXPECT_EQ(total, 1) << f.tag() << " n=" << n;
    }
  }
}

TEST(EnumerateHistories, ThirdNodeMarginals) {
  const auto recursive = enumerate_histories(FamilyParams::recursive(), 3);
  ASSERT_EQ(recursive.size(), 2u);
  for (const auto& entry : recursive) EXPECT_EQ(entry.second, ExactRational(1, 2));
  EXPECT_EQ(parent3_probability(FamilyParams::plane_oriented(), 1), ExactRational(2, 3));
  EXPECT_EQ(parent3_probability(FamilyParams::plane_oriented(), 2), ExactRational(1, 3));
  EXPECT_EQ(parent3_probability(FamilyParams::d_ary(2), 1), ExactRational(1, 3));
  EXPECT_EQ(parent3_probability(FamilyParams::d_ary(2), 2), ExactRational(2, 3));
}

TEST(EnumerateHistories, RecursiveTreesAreUniform) {
  ExactRational factorial = 1;
  for (std::size_t n = 2; n <= 7; ++n) {
    factorial *= static_cast<long>(n - 1);
    const auto all = enumerate_histories(FamilyParams::recursive(), n);
    EXPECT_EQ(all.size(), factorial.convert_to<std::size_t>());
    for (const auto& entry : all) EXPECT_EQ(entry.second, 1 / factorial);
  }
}

// The growth process agrees with the degree-weight description of each family.
TEST(EnumerateHistories, AgreesWithDegreeWeightedTrees) {
  const std::vector<std::tuple<FamilyParams, oracle::Kind, unsigned>> cases{
      {FamilyParams::recursive(), oracle::Kind::Recursive, 0},
      {FamilyParams::plane_oriented(), oracle::Kind::Plane, 0},
      {FamilyParams::d_ary(2), oracle::Kind::DAry, 2},
      {FamilyParams::d_ary(3), oracle::Kind::DAry, 3}};
  for (const auto& [family, kind, d] : cases) {
    for (unsigned n = 1; n <= 7; ++n) {
      std::map<std::vector<Label>, ExactRational> law;
      for (const auto& [tree, prob] : enumerate_histories(family, n)) law[tree.parent_list()] += prob;
      const auto reference = oracle::weighted_trees(kind, d, n);
      ASSERT_EQ(law.size(), reference.size()) << family.tag() << " n=" << n;
      for (const auto& [parents, prob] : reference) {
        const std::vector<Label> key(parents.begin() + std::min<std::size_t>(2, parents.size()), parents.end());
        EXPECT_EQ(law[key], prob) << family.tag() << " n=" << n;
      }
    }
  }
}

TEST(EnumerateHistories, RangeChecked) {
  EXPECT_THROW(enumerate_histories(FamilyParams::recursive(), 0), std::invalid_argument);
  EXPECT_THROW(enumerate_histories(FamilyParams::recursive(), 10), std::invalid_argument);
}

TEST(TreeFromParents, Validation) {
  const auto f = FamilyParams::recursive();
  EXPECT_NO_THROW(tree_from_parents(std::vector<Label>{1, 1}, f));
  try {
    tree_from_parents(std::vector<Label>{2}, f);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("increasing property violated"), std::string::npos);
  }
  try {
    tree_from_parents(std::vector<Label>{1, 4}, f);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("parent exceeds label"), std::string::npos);
  }
  EXPECT_THROW(tree_from_parents(std::vector<Label>{0}, f), std::invalid_argument);
  EXPECT_THROW(tree_from_parents(std::vector<Label>{1, 1, 1}, FamilyParams::d_ary(2)), std::invalid_argument);
  EXPECT_NO_THROW(tree_from_parents(std::vector<Label>{1, 1, 1}, FamilyParams::d_ary(3)));
}

TEST(TreeFile, RoundTrip) {
  const auto f = FamilyParams::d_ary(3);
  std::vector<IncreasingTree> trees;
  for (std::uint64_t i = 0; i < 5; ++i) trees.push_back(sample_tree(f, 40, {9, i}));
  std::stringstream buffer;
  write_trees(buffer, f, 40, 9, trees);
  EXPECT_EQ(buffer.str().substr(0, buffer.str().find('\n')), "#family=dary-3,n=40,seed=9");
  const auto file = read_trees(buffer);
  EXPECT_EQ(file.family, f);
  EXPECT_EQ(file.n, 40u);
  EXPECT_EQ(file.seed, 9u);
  EXPECT_EQ(file.trees, trees);
}

TEST(TreeFile, RejectsMalformedInput) {
  std::istringstream no_header("1,1\n");
  EXPECT_THROW(read_trees(no_header), std::invalid_argument);
  std::istringstream wrong_length("#family=recursive,n=4,seed=0\n1,1\n");
  EXPECT_THROW(read_trees(wrong_length), std::invalid_argument);
  std::istringstream bad_tree("#family=recursive,n=3,seed=0\n1,3\n");
  EXPECT_THROW(read_trees(bad_tree), std::invalid_argument);
}
