#include <gtest/gtest.h>

#include "factorlab/corpus.hpp"
#include "factorlab/payoff.hpp"

using namespace factorlab;

TEST(Shape, IndexRoundTripsRowMajor) {
  Shape s({2, 3, 4});
  EXPECT_EQ(s.size(), 24u);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.index(s.deindex(i)), i);
  EXPECT_EQ(s.index({0, 0, 1}), 1u);
  EXPECT_EQ(s.index({0, 1, 0}), 4u);
  EXPECT_EQ(s.stride(0), 12u);
}

TEST(Shape, RejectsBadActions) {
  Shape s({3, 3});
  EXPECT_THROW(s.index({3, 0}), InvalidAction);
  EXPECT_THROW(s.index({0}), InvalidAction);
  EXPECT_THROW(Shape(std::vector<int>{}), InvalidInput);
  EXPECT_THROW(Shape({2, 0}), InvalidInput);
}

TEST(JointPayoff, ValidatesSizeAndFiniteness) {
  EXPECT_THROW(JointPayoff({2, 2}, {1, 2, 3}), InvalidInput);
  EXPECT_THROW(JointPayoff({1}, {std::nan("")}), InvalidInput);
  EXPECT_THROW(JointPayoff::matrix({{1, 2}, {3}}), InvalidInput);
}

TEST(JointPayoff, ArgmaxAndArgminSets) {
  auto p = JointPayoff::matrix({{1, 5}, {5, -2}});
  EXPECT_EQ(argmax_set(p), (ActionSet{{0, 1}, {1, 0}}));
  EXPECT_EQ(argmin_set(p), (ActionSet{{1, 1}}));
}

TEST(Corpus, KeysResolveAndUnknownThrows) {
  EXPECT_EQ(corpus_entry("table6_qjt").at({0, 0}), 8.0);
  EXPECT_EQ(corpus_entry("table6_qjt").at({0, 1}), -12.0);
  EXPECT_EQ(corpus_entry("pp_onestep_p2").at({0, 0}), 10.0);
  EXPECT_EQ(corpus_entry("pp_onestep_p2").at({0, 3}), -2.0);
  EXPECT_THROW(corpus_entry("missing"), LookupError);
}

TEST(Monotonicity, AdditivePayoffIsMonotone) {
  auto p = JointPayoff::matrix({{0, 1, 3}, {2, 3, 5}});
  EXPECT_TRUE(classify_monotonicity(p).is_monotonic);
}

TEST(Monotonicity, CrossingPayoffIsNot) {
  EXPECT_FALSE(classify_monotonicity(corpus_entry("table6_qjt")).is_monotonic);
}
