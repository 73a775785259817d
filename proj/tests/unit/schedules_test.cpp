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


#include "ccopt/schedules.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace ccopt {
namespace {

CompressorClass contractive(double delta) { return {std::nullopt, delta}; }
CompressorClass unbiased(double omega) { return {omega, std::nullopt}; }

ScheduleInputs inputs(double L, double mu, double sigma, int n, double G) {
  ScheduleInputs in;
  in.L = L;
  in.mu = mu;
  in.sigma = sigma;
  in.n = n;
  in.G_star = G;
  in.g0 = 1.0;
  in.Delta_x = 1.0;
  in.Delta_f = 1.0;
  return in;
}

TEST(LrSchedule, Examples) {
  EXPECT_DOUBLE_EQ(lr_schedule(0.5, 1.0, 0.2, 0.0, 1000), 0.2);
  EXPECT_DOUBLE_EQ(lr_schedule(0.1, 1.0, 5.0, 0.7, 0), 0.1);
  EXPECT_DOUBLE_EQ(lr_schedule(0.1, 1.0, 1.0, 0.5, 99), 0.1);
  EXPECT_DOUBLE_EQ(lr_schedule(0.1, 1.0, 1.0, 0.5, 399), 0.05);
  EXPECT_THROW(lr_schedule(0.0, 1.0, 1.0, 0.5, 0), ValidationError);
  EXPECT_THROW(lr_schedule(1.0, 1.0, 1.0, -0.5, 0), ValidationError);
}

TEST(Validate, GammaAboveP) {
  NeolithicHyper h;
  h.K = 3;
  h.p = 1.0;
  h.gamma = PowerSchedule::constant(1.5);
  EXPECT_THROW(validate(h), ValidationError);
  h.gamma = PowerSchedule::constant(1.0);
  EXPECT_NO_THROW(validate(h));
  h.R = 0;
  EXPECT_THROW(validate(h), ValidationError);
}

TEST(ScheduleScSingle, IdentityClassOracle) {
  auto in = inputs(1.0, 1.0, 1.0, 4, 0.0);
  const auto h = schedule_sc_single(in, {0.0, 1.0}, 1000);
  EXPECT_EQ(h.R, 7);
  EXPECT_EQ(h.K, 142);
  EXPECT_DOUBLE_EQ(h.p, 5.0);
  EXPECT_DOUBLE_EQ(h.gamma.at(0), 1.0);
  EXPECT_DOUBLE_EQ(h.eta.at(0), 1.0);
}

TEST(ScheduleScSingle, HalfDeltaFirstTermDominates) {
  EXPECT_NEAR(4.0 / 0.5 * std::log(4.0 / 0.5), 16.6355, 1e-4);
  auto in = inputs(4.0, 1.0, 1.0, 1, 0.0);
  const auto h = schedule_sc_single(in, contractive(0.5), 10000);
  EXPECT_EQ(h.R, 17);
  EXPECT_EQ(h.K, 588);
  EXPECT_DOUBLE_EQ(h.gamma.at(5), 0.5);  // kappa = 4
  EXPECT_NEAR(h.p, 7.980507763356993, 1e-12);
}

TEST(ScheduleScSingle, HeterogeneousOracle) {
  auto in = inputs(10.0, 0.1, 0.5, 8, 2.0);
  in.g0 = 3.0;
  const auto h = schedule_sc_single(in, contractive(0.2), 100000);
  EXPECT_EQ(h.R, 138);
  EXPECT_EQ(h.K, 724);
  EXPECT_DOUBLE_EQ(h.p, 5.0);
  EXPECT_NEAR(h.gamma.at(0), 0.1, 1e-15);
}

TEST(ScheduleScSingle, Errors) {
  EXPECT_THROW(schedule_sc_single(inputs(1.0, 0.0, 1.0, 1, 0.0), contractive(0.5), 100),
               ValidationError);
  EXPECT_THROW(schedule_sc_single(inputs(1.0, 1.0, 1.0, 1, 0.0), contractive(0.01), 10),
               ValidationError);
}

TEST(ScheduleScSingle, SigmaZeroUsesFloorAndNotes) {
  auto in = inputs(1.0, 1.0, 0.0, 4, 0.0);
  const auto h = schedule_sc_single(in, contractive(1.0), 1000);
  ASSERT_FALSE(h.notes.empty());
  EXPECT_NE(h.notes.front().find("floor"), std::string::npos);
}

TEST(ScheduleScSingle, UnbiasedUsesReciprocal) {
  auto in = inputs(4.0, 1.0, 1.0, 1, 0.0);
  const auto a = schedule_sc_single(in, unbiased(1.0), 10000);
  const auto b = schedule_sc_single(in, contractive(0.5), 10000);
  EXPECT_EQ(a.R, b.R);
  EXPECT_EQ(a.K, b.K);
}

TEST(ScheduleGc, BoundaryGammaEqualsP) {
  auto in = inputs(1.0, 0.0, 1.0, 4, 0.1);
  const auto c = schedule_gc(in, 50, contractive(0.2));
  EXPECT_DOUBLE_EQ(c.p, 5.0);
  EXPECT_DOUBLE_EQ(c.gamma.at(0), 5.0);
  EXPECT_LT(c.gamma.at(1), 5.0);
  EXPECT_DOUBLE_EQ(c.gamma.at(8), 1.0);
  EXPECT_NO_THROW(validate(c));

  const auto u = schedule_gc(in, 50, unbiased(3.0));
  EXPECT_DOUBLE_EQ(u.p, 2.0);
  EXPECT_DOUBLE_EQ(u.gamma.at(0), 2.0);
  EXPECT_DOUBLE_EQ(u.gamma.at(3), 1.0);
  EXPECT_NO_THROW(validate(u));
}

TEST(ScheduleGc, UnbiasedNoiselessStepTendsToInverseL) {
  auto in = inputs(3.0, 0.0, 1e-9, 4, 0.0);
  in.Delta_x = 2.0;
  const auto h = schedule_gc(in, 100, unbiased(0.0));
  EXPECT_NEAR(h.eta.at(0), 1.0 / 3.0, 1e-6);
}

TEST(ScheduleNc, ContractiveOracle) {
  auto in = inputs(2.0, 0.0, 1.0, 4, 0.5);
  in.Delta_f = 3.0;
  const auto h = schedule_nc(in, 10000, contractive(0.1));
  EXPECT_EQ(h.R, 72);
  EXPECT_EQ(h.K, 138);
  ASSERT_EQ(h.eta_terms.size(), 3u);
  EXPECT_DOUBLE_EQ(h.eta_terms[0], 0.125);
  EXPECT_NEAR(h.eta_terms[1], 1.7629275847478105, 1e-12);
  EXPECT_NEAR(h.eta_terms[2], 3.543761852513347, 1e-9);
  EXPECT_DOUBLE_EQ(h.eta.at(0), 0.125);
  EXPECT_DOUBLE_EQ(h.p, 1.0);
  EXPECT_DOUBLE_EQ(h.gamma.at(0), 1.0);
}

TEST(ScheduleNc, UnbiasedOracle) {
  auto in = inputs(2.0, 0.0, 1.0, 4, 0.5);
  in.Delta_f = 3.0;
  const auto h = schedule_nc(in, 10000, unbiased(4.0));
  EXPECT_EQ(h.R, 42);
  EXPECT_EQ(h.K, 238);
  EXPECT_DOUBLE_EQ(h.eta_terms[0], 0.5);
  EXPECT_NEAR(h.eta_terms[1], 0.99121744784535648, 1e-12);
  EXPECT_NEAR(h.eta_terms[2], 1.5681814954134237, 1e-12);
  EXPECT_DOUBLE_EQ(h.eta.at(0), 0.5);
}

TEST(ScheduleNc, DoublingSigmaShrinksMiddleBranch) {
  auto in = inputs(2.0, 0.0, 1.0, 4, 0.5);
  in.Delta_f = 3.0;
  // Pin R and K by using a lossless class (R = ceil(max(ln, 1))).
  const auto a = schedule_nc(in, 10000, contractive(1.0));
  in.sigma = 2.0;
  const auto b = schedule_nc(in, 10000, contractive(1.0));
  ASSERT_EQ(a.R, b.R);
  EXPECT_NEAR(b.eta_terms[1] / a.eta_terms[1], 0.5, 1e-12);
}

TEST(ScheduleNc, LosslessThirdBranchInfinite) {
  auto in = inputs(1.0, 0.0, 1.0, 1, 0.0);
  in.Delta_f = 1.0;
  // arg < e so R = ceil(1/delta) = 1.
  const auto h = schedule_nc(in, 1, contractive(1.0));
  EXPECT_EQ(h.R, 1);
  EXPECT_TRUE(std::isinf(h.eta_terms[2]));
  EXPECT_DOUBLE_EQ(h.eta.at(0), std::min(h.eta_terms[0], h.eta_terms[1]));
}

TEST(ScheduleNc, BudgetBelowR) {
  auto in = inputs(2.0, 0.0, 1.0, 4, 0.5);
  EXPECT_THROW(schedule_nc(in, 5, contractive(0.1)), ValidationError);
}

TEST(Schedules, Pure) {
  auto in = inputs(2.0, 0.5, 0.3, 4, 0.5);
  in.Delta_x = 2.0;
  const auto a = schedule_gc(in, 40, contractive(0.3));
  const auto b = schedule_gc(in, 40, contractive(0.3));
  EXPECT_EQ(a.R, b.R);
  EXPECT_EQ(a.eta.at(0), b.eta.at(0));
  const auto pa = plan_multistage(in, contractive(0.3), 1e-3);
  const auto pb = plan_multistage(in, contractive(0.3), 1e-3);
  ASSERT_EQ(pa.stages.size(), pb.stages.size());
  for (std::size_t s = 0; s < pa.stages.size(); ++s) {
    EXPECT_EQ(pa.stages[s].K, pb.stages[s].K);
    EXPECT_EQ(pa.stages[s].R, pb.stages[s].R);
    EXPECT_EQ(pa.stages[s].p, pb.stages[s].p);
  }
}

TEST(PlanMultistage, StageCountAndTargets) {
  auto in = inputs(8.0, 1.0, 0.0, 2, 0.0);
  in.Delta_x = 1.0;
  in.g0 = 4.0;
  const auto plan = plan_multistage(in, contractive(0.5), 1e-3);
  EXPECT_EQ(plan.S, static_cast<int>(std::ceil(std::log2(8.0 / 1e-3))));
  ASSERT_EQ(plan.stages.size(), static_cast<std::size_t>(plan.S));
  EXPECT_DOUBLE_EQ(plan.targets[0], 2.0);
  EXPECT_DOUBLE_EQ(plan.targets[2], 0.5);
  EXPECT_DOUBLE_EQ(plan.start_bounds[0], 4.0);
  EXPECT_DOUBLE_EQ(plan.start_bounds[1], 131.0 / 81.0 * 2.0);
  long total = 0;
  for (const auto& h : plan.stages) {
    EXPECT_GE(h.K, 1);
    EXPECT_GE(h.p, 5.0);
    total += h.K * h.R;
  }
  EXPECT_EQ(plan.total_rounds(), total);
}

}  // namespace
}  // namespace ccopt
