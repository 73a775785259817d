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


#include "ccopt/hard_instances.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace ccopt {
namespace {

// Composite Simpson rule for sqrt(e) * int_{-40}^{z} exp(-t^2/2) dt.
double phi_quadrature(double z) {
  const int steps = 200000;  // even
  const double lo = -40.0;
  const double h = (z - lo) / steps;
  auto f = [](double t) { return std::exp(-0.5 * t * t); };
  double sum = f(lo) + f(z);
  for (int k = 1; k < steps; ++k) sum += (k % 2 ? 4.0 : 2.0) * f(lo + k * h);
  return std::sqrt(std::numbers::e) * sum * h / 3.0;
}

DenseVector probe_at_level(int d, int level, RandomStream& rng) {
  DenseVector x = DenseVector::Zero(d);
  for (int j = 0; j < level; ++j) x(j) = 2.0 * rng.normal();
  if (level > 0 && x(level - 1) == 0.0) x(level - 1) = 1.0;
  return x;
}

TEST(PsiPhi, BoundaryAndLimits) {
  const auto half = psi_phi(0.5);
  EXPECT_EQ(half.psi, 0.0);
  EXPECT_EQ(half.dpsi, 0.0);
  EXPECT_EQ(psi_phi(-3.0).psi, 0.0);
  EXPECT_DOUBLE_EQ(psi_phi(1.0).psi, 1.0);
  EXPECT_NEAR(psi_phi(40.0).phi, std::sqrt(2.0 * std::numbers::pi * std::numbers::e), 1e-14);
  EXPECT_DOUBLE_EQ(psi_phi(0.0).dphi, std::sqrt(std::numbers::e));
  for (double z : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
    EXPECT_NEAR(psi_phi(z).phi, phi_quadrature(z), 1e-9 * phi_quadrature(z)) << z;
  }
}

TEST(PsiPhi, DerivativesMatchFiniteDifferences) {
  for (double z : {0.55, 0.8, 1.0, 2.5, -1.0, 0.2}) {
    const double h = 1e-6;
    const double dpsi = (psi_phi(z + h).psi - psi_phi(z - h).psi) / (2 * h);
    const double dphi = (psi_phi(z + h).phi - psi_phi(z - h).phi) / (2 * h);
    EXPECT_NEAR(psi_phi(z).dpsi, dpsi, 1e-6 * std::max(1.0, std::abs(dpsi))) << z;
    EXPECT_NEAR(psi_phi(z).dphi, dphi, 1e-6 * std::max(1.0, std::abs(dphi))) << z;
  }
}

TEST(ChainFunctions, GradientAtZero) {
  const DenseVector zero = DenseVector::Zero(6);
  const DenseVector g = chain_gradient(ChainPart::kFull, zero);
  EXPECT_NEAR(g(0), -std::sqrt(std::numbers::e), 1e-15);
  for (int j = 1; j < 6; ++j) EXPECT_EQ(g(j), 0.0);
  EXPECT_GE(g.cwiseAbs().maxCoeff(), 1.0);
  const DenseVector fd =
      finite_difference_gradient([](const DenseVector& x) { return chain_value(ChainPart::kFull, x); },
                                 zero);
  EXPECT_NEAR((fd - g).norm(), 0.0, 1e-8);
}

TEST(ChainFunctions, HalfSumIsFull) {
  auto rng = derive_stream(1, {"test", 0, 0, 0, "probe"});
  for (int t = 0; t < 200; ++t) {
    DenseVector x(8);
    for (int j = 0; j < 8; ++j) x(j) = 2.0 * rng.normal();
    const double h = chain_value(ChainPart::kFull, x);
    const double split = 0.5 * (chain_value(ChainPart::kFirst, x) + chain_value(ChainPart::kSecond, x));
    EXPECT_NEAR(split, h, 1e-12);
  }
}

TEST(ChainFunctions, ZeroChainAndParity) {
  const int d = 10;
  auto rng = derive_stream(2, {"test", 0, 0, 0, "probe"});
  int violations = 0;
  for (int level = 0; level <= d; ++level) {
    for (int t = 0; t < 100; ++t) {
      const DenseVector x = probe_at_level(d, level, rng);
      const int p1 = prog(chain_gradient(ChainPart::kFirst, x));
      const int p2 = prog(chain_gradient(ChainPart::kSecond, x));
      if (p1 > level + 1 || p2 > level + 1) ++violations;
      if (level % 2 == 1 && p1 > level) ++violations;
      if (level % 2 == 0 && level > 0 && p2 > level) ++violations;
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(ChainFunctions, CurvatureBound) {
  auto rng = derive_stream(3, {"test", 0, 0, 0, "probe"});
  double worst = 0.0;
  for (int t = 0; t < 300; ++t) {
    DenseVector x(6), u(6);
    for (int j = 0; j < 6; ++j) {
      x(j) = 2.0 * rng.normal();
      u(j) = rng.normal();
    }
    u.normalize();
    for (auto part : {ChainPart::kFirst, ChainPart::kSecond}) {
      const double eps = 1e-5;
      const double c =
          std::abs(u.dot(chain_gradient(part, x + eps * u) - chain_gradient(part, x))) / eps;
      worst = std::max(worst, c);
    }
  }
  EXPECT_LE(worst, kChainSmoothness * (1 + 1e-3));
}

TEST(BuildChain, StronglyConvexClosedForm) {
  ChainParams p;
  p.kind = ChainKind::kStronglyConvex;
  p.L = 4.0;
  p.mu = 1.0;
  p.n = 4;
  p.Delta_x = 2.0;
  const auto chain = build_chain(p);
  EXPECT_NEAR(chain.q, 1.0 / 3.0, 1e-15);
  const auto& x = chain.problem.x_star;
  const int d = chain.params.d;
  EXPECT_EQ(d, strongly_convex_chain_dim(4.0));
  const double kappa = 4.0;
  double worst = 0.0;
  for (int j = 1; j + 1 < d; ++j) {
    worst = std::max(worst, std::abs(-x(j - 1) + 2 * (kappa + 1) / (kappa - 1) * x(j) - x(j + 1)));
  }
  EXPECT_LE(worst, 1e-10);
  // Truncation adds the mirror term -lambda q^{2(d+1)-j} to lambda q^j.
  const double q = 1.0 / 3.0;
  for (int j = 1; j <= d; ++j) {
    const double image = chain.lambda * (std::pow(q, j) - std::pow(q, 2 * (d + 1) - j));
    EXPECT_NEAR(x(j - 1), image, 1e-15) << j;
  }
  EXPECT_NEAR(chain.problem.Delta_x, 2.0, 1e-12);
  EXPECT_GE(chain.problem.G_star, 0.0);
}

TEST(BuildChain, NesterovClosedForm) {
  ChainParams p;
  p.kind = ChainKind::kNesterov;
  p.L = 1.0;
  p.d = 3;
  p.Delta_x = 1.0;  // lambda = sqrt(3 / 3) = 1
  const auto chain = build_chain(p);
  EXPECT_DOUBLE_EQ(chain.lambda, 1.0);
  EXPECT_NEAR(chain.problem.x_star(0), 0.75, 1e-14);
  EXPECT_NEAR(chain.problem.x_star(1), 0.5, 1e-14);
  EXPECT_NEAR(chain.problem.x_star(2), 0.25, 1e-14);
  EXPECT_NEAR(chain.problem.f_star, -3.0 / 32.0, 1e-14);
  EXPECT_NEAR(chain.problem.value(chain.problem.x_star), -3.0 / 32.0, 1e-14);
}

TEST(BuildChain, NesterovTruncatedOptimum) {
  ChainParams p;
  p.kind = ChainKind::kNesterov;
  p.L = 2.0;
  p.d = 20;
  p.Delta_x = 5.0;
  const auto chain = build_chain(p);
  const auto& H = *chain.problem.hessian;
  for (int k = 1; k <= p.d; ++k) {
    DenseVector b = DenseVector::Zero(k);
    b(0) = p.L / 4.0 * chain.lambda;
    const DenseVector xk = H.topLeftCorner(k, k).ldlt().solve(b);
    DenseVector x = DenseVector::Zero(p.d);
    x.head(k) = xk;
    EXPECT_NEAR(chain.problem.value(x), nesterov_truncated_optimum(p.L, chain.lambda, k), 1e-8)
        << k;
  }
}

TEST(BuildChain, Errors) {
  ChainParams p;
  p.n = 3;
  p.d = 4;
  EXPECT_THROW(build_chain(p), ValidationError);
  p.n = 2;
  p.kind = ChainKind::kStronglyConvex;
  p.mu = 1.0;
  p.L = 1.0;
  EXPECT_THROW(build_chain(p), ValidationError);
  p.L = 0.5;
  EXPECT_THROW(build_chain(p), ValidationError);
}

TEST(BuildChain, GradientsMatchFiniteDifferences) {
  std::vector<ProblemInstance> problems;
  for (auto kind : {ChainKind::kStronglyConvex, ChainKind::kNesterov, ChainKind::kPsiPhi}) {
    ChainParams p;
    p.kind = kind;
    p.L = 3.0;
    p.mu = 0.3;
    p.n = 4;
    p.d = 8;
    problems.push_back(build_chain(p).problem);
  }
  auto rng = derive_stream(4, {"test", 0, 0, 0, "probe"});
  for (const auto& problem : problems) {
    for (int t = 0; t < 20; ++t) {
      DenseVector x(problem.d);
      for (int j = 0; j < problem.d; ++j) x(j) = rng.normal();
      for (int i : {0, problem.n - 1}) {
        const DenseVector g = problem.local_gradient(i, x);
        const DenseVector fd = finite_difference_gradient(
            [&](const DenseVector& y) { return problem.local_value(i, y); }, x);
        EXPECT_LE((g - fd).norm(), 1e-6 * std::max(1.0, g.norm())) << problem.name;
      }
    }
  }
}

TEST(BuildChain, PsiPhiScaling) {
  ChainParams p;
  p.kind = ChainKind::kPsiPhi;
  p.L = 2.0;
  p.n = 2;
  p.d = 5;
  p.Delta_f = 3.0;
  const auto chain = build_chain(p);
  EXPECT_NEAR(chain.lambda, std::sqrt(152.0 * 3.0 / (2.0 * 12.0 * 5.0)), 1e-15);
  EXPECT_FALSE(chain.problem.convex);
  const DenseVector x = DenseVector::Constant(5, 0.3);
  const double f = chain.problem.value(x);
  const double h = chain_value(ChainPart::kFull, x / chain.lambda);
  EXPECT_NEAR(f, p.L * chain.lambda * chain.lambda / 152.0 * h, 1e-14);
}

TEST(AdversarialSparsifier, ZeroOmegaKeepsEverything) {
  const auto spec = adversarial_sparsifier(0.0);
  auto rng = derive_stream(5, {"test", 0, 0, 0, kSharedTag});
  DenseVector x(4);
  x << 1.0, -2.0, 3.0, 0.5;
  EXPECT_EQ(decompress(compress(spec, x, rng), 4), x);
}

TEST(AdversarialSparsifier, MomentsMatchClaim) {
  const double omega = 3.0;
  const auto spec = adversarial_sparsifier(omega);
  auto rng = derive_stream(6, {"test", 0, 0, 0, kSharedTag});
  DenseVector x(5);
  x << 1.0, -2.0, 0.5, 3.0, -1.5;
  const int draws = 20000;
  DenseVector mean = DenseVector::Zero(5);
  DenseVector sq = DenseVector::Zero(5);
  double err = 0.0, err_sq = 0.0;
  for (int k = 0; k < draws; ++k) {
    const DenseVector c = decompress(compress(spec, x, rng), 5);
    mean += c;
    sq += c.cwiseProduct(c);
    const double e = (c - x).squaredNorm() / x.squaredNorm();
    err += e;
    err_sq += e * e;
  }
  mean /= draws;
  const DenseVector var = sq / draws - mean.cwiseProduct(mean);
  for (int j = 0; j < 5; ++j) EXPECT_LE(std::abs(mean(j) - x(j)), 3 * std::sqrt(var(j) / draws));
  err /= draws;
  const double se = std::sqrt((err_sq / draws - err * err) / draws);
  EXPECT_LE(std::abs(err - omega), 3 * se);
}

ChainInstance gc_chain(int d) {
  ChainParams p;
  p.kind = ChainKind::kNesterov;
  p.L = 1.0;
  p.n = 2;
  p.d = d;
  return build_chain(p);
}

TEST(TracedRun, GradientDescentGainsOneCoordinatePerRound) {
  const auto chain = gc_chain(30);
  const auto trace = traced_run(TracedAlgorithm::gradient_descent(1.0), chain.problem,
                                CompressorSpec::identity(), 25, 7);
  ASSERT_EQ(trace.T(), 25);
  for (long t = 0; t <= 25; ++t) EXPECT_EQ(trace.B[t], t);
  ASSERT_EQ(trace.query_prog[0].size(), 25u);
  EXPECT_EQ(trace.query_prog[0][3].second, 3);
}

TEST(TracedRun, IncrementsBoundedForEveryAlgorithm) {
  const auto chain = gc_chain(60);
  const auto spec = adversarial_sparsifier(2.0);
  std::vector<TracedAlgorithm> algorithms{TracedAlgorithm::gradient_descent(0.5)};
  for (auto kind : {BaselineKind::kQsgd, BaselineKind::kMemSgd, BaselineKind::kDoubleSqueeze,
                    BaselineKind::kEf21Sgd}) {
    algorithms.push_back(TracedAlgorithm::from_baseline(kind, 0.5));
  }
  TracedAlgorithm neo = TracedAlgorithm::gradient_descent(0.5);
  neo.hyper.R = 3;
  neo.hyper.p = 5.0;
  neo.hyper.gamma = {10.0, 2.0, 1.0};
  algorithms.push_back(neo);
  for (const auto& a : algorithms) {
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
      const auto trace = traced_run(a, chain.problem, spec, 45, 8, trial);
      EXPECT_TRUE(trace.increment_violations().empty());
      EXPECT_FALSE(trace.diverged);
    }
  }
}

TEST(TracedRun, ProgressTailSmallSample) {
  const auto chain = gc_chain(101);
  const auto tail =
      progress_tail(TracedAlgorithm::gradient_descent(1.0), chain.problem, 4.0, 100, 100, 9);
  EXPECT_EQ(tail.increment_violations, 0);
  EXPECT_NEAR(tail.threshold, std::numbers::e * 20.0, 1e-12);
  EXPECT_LE(tail.frequency, 1.0 / std::numbers::e + 0.05);
  EXPECT_GT(tail.mean_final, 5.0);
}

TEST(BernoulliPair, ConstructionAndOracle) {
  const double L = 2.0, Delta_x = 4.0, sigma = 1.5, p = 0.5;
  const auto pair = build_bernoulli_pair(L, Delta_x, sigma, p, 2);
  EXPECT_EQ(pair.plus.local_gradient(0, DenseVector::Constant(1, 2.0))(0), 0.0);
  EXPECT_EQ(pair.minus.local_gradient(1, DenseVector::Constant(1, -2.0))(0), 0.0);
  EXPECT_EQ(pair.plus.value(pair.plus.x_star), 0.0);

  for (double x0 : {-3.0, 1.9, 2.1, 5.0}) {
    const DenseVector x = DenseVector::Constant(1, x0);
    const DenseVector fd = finite_difference_gradient(
        [&](const DenseVector& y) { return pair.plus.value(y); }, x);
    EXPECT_NEAR(fd(0), pair.plus.gradient(x)(0), 1e-6);

    auto rng = derive_stream(10, {"test", 0, 0, 0, "oracle"});
    const double g = pair.plus.gradient(x)(0);
    const int draws = 20000;
    double sum = 0.0, sum_sq = 0.0;
    DenseVector out(1);
    for (int k = 0; k < draws; ++k) {
      oracle_average(pair.plus, 0, x, pair.oracle, 1, rng, out);
      EXPECT_EQ(std::abs(out(0)), sigma);
      sum += out(0);
      sum_sq += (out(0) - g) * (out(0) - g);
    }
    const double var = sigma * sigma - g * g;
    EXPECT_LE(std::abs(sum / draws - g), 3 * std::sqrt(var / draws) + 1e-12);
    // Squared deviation takes two values; its SE follows from them.
    const double a = (sigma - g) * (sigma - g), b = (sigma + g) * (sigma + g);
    const double pa = 0.5 + g / (2 * sigma);
    const double se = std::abs(a - b) * std::sqrt(pa * (1 - pa) / draws);
    EXPECT_LE(std::abs(sum_sq / draws - var), 3 * se + 1e-12);
  }
}

TEST(BernoulliPair, RangeChecked) {
  EXPECT_THROW(build_bernoulli_pair(1.0, 1.0, 1.0, 0.9), ValidationError);
  EXPECT_THROW(build_bernoulli_pair(1.0, 0.01, 1.0, 0.2), ValidationError);
  EXPECT_NO_THROW(build_bernoulli_pair(1.0, 1.0, 1.0, 0.5));
}

}  // namespace
}  // namespace ccopt
