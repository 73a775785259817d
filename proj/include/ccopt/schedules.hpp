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


#pragma once

#include "ccopt/compressors.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace ccopt {

/// k -> min(cap, base * (k + offset)^(-power)). Covers constant steps,
/// 10/(k+2), 6/(k+3) and eta0 (k+1)^(-c2) capped at c1/L.
struct PowerSchedule {
  double base = 1.0;
  double offset = 1.0;
  double power = 0.0;
  double cap = std::numeric_limits<double>::infinity();

  static PowerSchedule constant(double value) { return {value, 1.0, 0.0}; }
  double at(long k) const;
};

/// min{c1/L, eta0 (t+1)^(-c2)}.
double lr_schedule(double c1, double L, double eta0, double c2, long t);
PowerSchedule lr_power_schedule(double c1, double L, double eta0, double c2);

struct NeolithicHyper {
  PowerSchedule eta;
  double p = 1.0;
  PowerSchedule gamma = PowerSchedule::constant(1.0);
  int R = 1;
  long K = 0;
  /// Terms the step size was the minimum of, when a builder produced it.
  std::vector<double> eta_terms;
  /// Human-readable notes, e.g. substitutions made by a builder.
  std::vector<std::string> notes;
};

/// Checks R >= 1, K >= 0, p > 0 and 0 < gamma_k <= p for all k < K.
void validate(const NeolithicHyper& hyper);

/// Constants a schedule builder may consume.
struct ScheduleInputs {
  double L = 1.0;
  double mu = 0.0;
  double sigma = 0.0;
  int n = 1;
  double G_star = 0.0;
  double Delta_x = 0.0;
  double Delta_f = 0.0;
  /// f(x0) - f* + (25/81) mu ||x0 - x*||^2, strongly convex builders only.
  double g0 = 0.0;
  /// Replaces sigma^2 inside the formulas when sigma = 0.
  double sigma_sq_floor = 1e-12;
};

/// sigma^2 to use inside schedule formulas; appends a note when the floor was
/// substituted.
double effective_sigma_sq(const ScheduleInputs& in, std::vector<std::string>* notes);

/// Contraction parameter used by the strongly convex builders: delta for a
/// contractive class, 1/(1+omega) for an unbiased-only class (to be paired
/// with scale_to_contractive on the compressor).
double contraction_parameter(const CompressorClass& cls);

/// Single-stage strongly convex schedule for a budget of T rounds per worker.
/// R is the smallest value with R >= R_formula(floor(T/R)).
NeolithicHyper schedule_sc_single(const ScheduleInputs& in, const CompressorClass& cls,
                                  long T_budget);

/// Generally convex schedule for K outer iterations. The class decides the
/// contractive or unbiased variant.
NeolithicHyper schedule_gc(const ScheduleInputs& in, long K, const CompressorClass& cls);

/// Non-convex schedule (gamma = p = 1) for a budget of T rounds per worker.
NeolithicHyper schedule_nc(const ScheduleInputs& in, long T_budget, const CompressorClass& cls);

struct StagePlan {
  int S = 0;
  std::vector<NeolithicHyper> stages;
  /// Per-stage target on f - f* and the bound on g at the stage start.
  std::vector<double> targets;
  std::vector<double> start_bounds;
  long total_rounds() const;
};

/// Multi-stage plan for precision eps: S = ceil(log2(L Delta_x / eps)),
/// stage s targets 2^-(s+1) g0, and each stage takes the smallest K whose
/// single-stage bound meets the target.
StagePlan plan_multistage(const ScheduleInputs& in, const CompressorClass& cls, double eps);

}  // namespace ccopt
