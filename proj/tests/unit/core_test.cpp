// Copyright 2026 The ccopt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "ccopt/core.hpp"

#include <gtest/gtest.h>

#include <vector>

namespace ccopt {
namespace {

DenseVector vec(std::initializer_list<double> v) {
  DenseVector out(v.size());
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(Prog, ZeroVectorIsZero) { EXPECT_EQ(prog(vec({0, 0, 0})), 0); }

TEST(Prog, LastNonzeroIndex) {
  EXPECT_EQ(prog(vec({1, 0, 2, 0})), 3);
  EXPECT_EQ(prog(vec({0, 0, 5})), 3);
}

TEST(Prog, ExactZeroTest) {
  EXPECT_EQ(prog(vec({0, 1e-300, 0})), 2);
  EXPECT_EQ(prog(vec({0, -0.0, 0})), 0);
}

TEST(Prog, SubadditiveAndScaleInvariant) {
  const DenseVector x = vec({1, 0, 3, 0, 0});
  const DenseVector y = vec({0, 2, 0, 0, 0});
  EXPECT_LE(prog(x + y), std::max(prog(x), prog(y)));
  EXPECT_EQ(prog(-2.5 * x), prog(x));
}

TEST(PairwiseSum, FixedTreeOrder) {
  // ((a+b)+(c+(d+e))) for five terms.
  std::vector<double> t = {1e16, 1.0, -1e16, 1.0, 1.0};
  const double expected = (1e16 + 1.0) + (-1e16 + (1.0 + 1.0));
  EXPECT_EQ(pairwise_sum(std::span<const double>(t)), expected);
}

TEST(PairwiseSum, VectorsMatchScalarTree) {
  std::vector<DenseVector> terms;
  std::vector<double> first;
  for (int i = 0; i < 7; ++i) {
    terms.push_back(vec({0.1 * i, 1.0 / (i + 1)}));
    first.push_back(0.1 * i);
  }
  const DenseVector s = pairwise_sum(std::span<const DenseVector>(terms));
  EXPECT_EQ(s(0), pairwise_sum(std::span<const double>(first)));
  EXPECT_EQ(pairwise_mean(std::span<const DenseVector>(terms))(0), s(0) / 7.0);
}

TEST(PairwiseSum, EmptyInput) {
  std::vector<DenseVector> none;
  EXPECT_THROW(pairwise_sum(std::span<const DenseVector>(none)), ValidationError);
  std::vector<double> empty;
  EXPECT_EQ(pairwise_sum(std::span<const double>(empty)), 0.0);
  EXPECT_THROW(pairwise_mean(std::span<const double>(empty)), ValidationError);
}

TEST(RequireFinite, RejectsNan) {
  EXPECT_NO_THROW(require_finite(vec({1, 2}), "x"));
  EXPECT_THROW(require_finite(vec({1, std::nan("")}), "x"), NumericalError);
}

}  // namespace
}  // namespace ccopt
