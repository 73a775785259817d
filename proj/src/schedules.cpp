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

#include "ccopt/msc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace ccopt {

double PowerSchedule::at(long k) const {
  const double v = power == 0.0 ? base : base * std::pow(static_cast<double>(k) + offset, -power);
  return std::min(cap, v);
}

double lr_schedule(double c1, double L, double eta0, double c2, long t) {
  return lr_power_schedule(c1, L, eta0, c2).at(t);
}

PowerSchedule lr_power_schedule(double c1, double L, double eta0, double c2) {
  if (!(c1 > 0.0) || !(eta0 > 0.0) || !(c2 >= 0.0) || !(L > 0.0)) {
    throw ValidationError("lr_schedule: need c1, eta0, L > 0 and c2 >= 0");
  }
  return {eta0, 1.0, c2, c1 / L};
}

void validate(const NeolithicHyper& h) {
  if (h.R < 1) throw ValidationError("NEOLITHIC: R must be >= 1");
  if (h.K < 0) throw ValidationError("NEOLITHIC: K must be >= 0");
  if (!(h.p > 0.0) || !std::isfinite(h.p)) throw ValidationError("NEOLITHIC: p must be > 0");
  for (const PowerSchedule* s : {&h.gamma, &h.eta}) {
    if (!(s->power >= 0.0) || !(s->offset > 0.0)) {
      throw ValidationError("NEOLITHIC: schedules need power >= 0 and offset > 0");
    }
  }
  // Both schedules are non-increasing in k, so k = 0 bounds every gamma_k.
  const double g0 = h.gamma.at(0);
  if (!(g0 > 0.0) || g0 > h.p) {
    throw ValidationError("NEOLITHIC: need 0 < gamma_k <= p (gamma_0 = " + std::to_string(g0) +
                          ", p = " + std::to_string(h.p) + ")");
  }
  if (h.K > 0 && !(h.gamma.at(h.K - 1) > 0.0)) throw ValidationError("NEOLITHIC: gamma_k <= 0");
  if (!(h.eta.at(0) > 0.0)) throw ValidationError("NEOLITHIC: eta must be > 0");
}

double effective_sigma_sq(const ScheduleInputs& in, std::vector<std::string>* notes) {
  if (in.sigma > 0.0) return in.sigma * in.sigma;
  if (!(in.sigma_sq_floor > 0.0)) throw ValidationError("schedule: sigma_sq_floor must be > 0");
  if (notes) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "sigma=0: sigma^2 replaced by floor %.3g in schedule formulas",
                  in.sigma_sq_floor);
    notes->emplace_back(buf);
  }
  return in.sigma_sq_floor;
}

double contraction_parameter(const CompressorClass& cls) {
  if (cls.contractive()) return *cls.delta;
  if (cls.unbiased()) return 1.0 / (1.0 + *cls.omega);
  throw ValidationError("schedule: compressor class has neither omega nor delta");
}

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string("schedule: ") + what + " must be positive and finite");
  }
}

int ceil_to_int(double v) {
  if (!std::isfinite(v) || v > 1e9) throw ValidationError("schedule: R overflow");
  return std::max(1, static_cast<int>(std::ceil(v)));
}

// R for the strongly convex single-stage schedule with K outer iterations.
int sc_rounds(const ScheduleInputs& in, double delta, double gamma, double sigma_sq, long K) {
  const double kk = static_cast<double>(K);
  const double lg = in.L * in.G_star;
  const double first = 4.0 / delta * std::log(4.0 / delta);
  const double second =
      std::log(4.0 * in.n * in.n * kk * kk * lg * lg / (sigma_sq * sigma_sq) + in.n * kk +
               96.0 / (gamma * gamma)) /
      delta;
  return ceil_to_int(std::max(first, second));
}

double sc_p(double gamma, double mu, int n, double g_start, double sigma_sq, long K, int R,
            std::vector<std::string>* notes) {
  const double T = static_cast<double>(K) * R;
  const double log_term = std::log(n * mu * g_start * T / sigma_sq);
  if (!(log_term > 0.0)) {
    if (notes) notes->emplace_back("p: log argument <= 1, using p = 5");
    return 5.0;
  }
  return std::max(5.0, gamma * T / (4.0 * R * log_term));
}

// Bound on E[f - f*] after a stage of K iterations started with g <= g_start.
double sc_bound(const ScheduleInputs& in, double gamma, double sigma_sq, double g_start, long K,
                int R) {
  const double T = static_cast<double>(K) * R;
  const double denom = in.mu * in.n * T;
  const double log_term = std::max(0.0, std::log(in.n * in.mu * g_start * T / sigma_sq));
  return std::exp(-gamma * static_cast<double>(K) / 20.0) * g_start + 77.0 * sigma_sq / denom +
         34.0 * sigma_sq * log_term / denom;
}

}  // namespace

NeolithicHyper schedule_sc_single(const ScheduleInputs& in, const CompressorClass& cls,
                                  long T_budget) {
  require_positive(in.L, "L");
  if (!(in.mu > 0.0)) throw ValidationError("schedule_sc_single: mu must be > 0");
  require_positive(in.g0, "g(x0)");
  NeolithicHyper h;
  const double delta = contraction_parameter(cls);
  if (!cls.contractive()) {
    h.notes.emplace_back("unbiased class treated as contractive with delta = 1/(1+omega)");
  }
  const double sigma_sq = effective_sigma_sq(in, &h.notes);
  const double gamma = std::sqrt(in.mu / in.L);
  int R = 1;
  for (;; ++R) {
    const long K = T_budget / R;
    if (K < 1) {
      throw ValidationError("schedule_sc_single: budget " + std::to_string(T_budget) +
                            " too small for the required R");
    }
    if (R >= sc_rounds(in, delta, gamma, sigma_sq, K)) break;
  }
  h.R = R;
  h.K = T_budget / R;
  h.eta = PowerSchedule::constant(1.0 / in.L);
  h.gamma = PowerSchedule::constant(gamma);
  h.p = sc_p(gamma, in.mu, in.n, in.g0, sigma_sq, h.K, R, &h.notes);
  return h;
}

NeolithicHyper schedule_gc(const ScheduleInputs& in, long K, const CompressorClass& cls) {
  require_positive(in.L, "L");
  require_positive(in.Delta_x, "Delta_x");
  if (K < 1) throw ValidationError("schedule_gc: K must be >= 1");
  NeolithicHyper h;
  h.K = K;
  const double sigma_sq = effective_sigma_sq(in, &h.notes);
  const double kk = static_cast<double>(K);
  const double n = in.n;
  const double lg = in.L * in.G_star;
  if (uses_unbiased_branch(cls)) {
    const double w = *cls.omega;
    const double w1 = 1.0 + w;
    h.p = 2.0;
    h.gamma = {6.0, 3.0, 1.0};
    const double inner = w1 * (n + 2.0) + 4.0 * w1 * w1 * (n * lg) * (n * lg) / (sigma_sq * sigma_sq) +
                         729.0 * w1 * w1 * n * in.L * in.L * in.Delta_x / (8.0 * sigma_sq);
    h.R = ceil_to_int(w1 * std::max(4.0 * std::log(4.0 * w1), std::log(inner)));
    const double w_tilde = w1 * std::pow(w / w1, h.R);
    const double s_tilde = sigma_sq / h.R;
    const double root_dx = std::sqrt(in.Delta_x);
    const double eta = 27.0 * root_dx /
                       (2.0 * std::sqrt(2.0) * std::pow(kk + 2.0, 1.5) *
                            std::sqrt(4.0 * w_tilde * lg + (w_tilde + 1.0 / n) * s_tilde) +
                        27.0 * in.L * root_dx);
    h.eta = PowerSchedule::constant(eta);
    h.eta_terms = {eta};
  } else {
    const double delta = contraction_parameter(cls);
    h.p = 5.0;
    h.gamma = {10.0, 2.0, 1.0};
    const double k3 = kk * kk * kk;
    const double inner =
        24.0 * k3 + 100.0 * n * n * k3 * lg * lg / (sigma_sq * sigma_sq) + 5.0 * n * std::pow(kk, 1.5);
    h.R = ceil_to_int(
        std::max(4.0 / delta * std::log(4.0 / delta), std::log(inner) / delta));
    const double w_tilde = std::pow(1.0 - delta, h.R);
    const double s_tilde = sigma_sq / h.R;
    const double root = std::sqrt(2.0 * in.Delta_x);
    const double k15 = std::pow(kk, 1.5);
    const double eta =
        25.0 * root /
        (std::pow(kk + 1.0, 1.5) *
             std::sqrt(20.0 * k15 * w_tilde * lg + (1.0 / n + 5.0 * k15 * w_tilde) * s_tilde) +
         25.0 * in.L * root);
    h.eta = PowerSchedule::constant(eta);
    h.eta_terms = {eta};
  }
  return h;
}

NeolithicHyper schedule_nc(const ScheduleInputs& in, long T_budget, const CompressorClass& cls) {
  require_positive(in.L, "L");
  require_positive(in.Delta_f, "Delta_f");
  NeolithicHyper h;
  h.p = 1.0;
  h.gamma = PowerSchedule::constant(1.0);
  const double sigma_sq = effective_sigma_sq(in, &h.notes);
  const double n = in.n;
  const double T = static_cast<double>(T_budget);
  const double inf = std::numeric_limits<double>::infinity();
  if (uses_unbiased_branch(cls)) {
    const double w = *cls.omega;
    const double w1 = 1.0 + w;
    const double a = n * in.L * (in.G_star + in.Delta_f);
    h.R = ceil_to_int(w1 * std::max(std::log(a * a * w1 / (sigma_sq * sigma_sq)), std::log(w1 / n)));
    if (h.R > T_budget) throw ValidationError("schedule_nc: budget smaller than R");
    h.K = T_budget / h.R;
    const double kk = static_cast<double>(h.K);
    const double w_tilde = w1 * std::pow(w / w1, h.R);
    const double bracket = w_tilde * (in.L * in.G_star + sigma_sq / h.R) + sigma_sq / (h.R * n);
    const double second = bracket > 0.0 ? std::sqrt(in.Delta_f / ((kk + 1.0) * in.L * bracket)) : inf;
    const double third = w_tilde > 0.0 ? 1.0 / (std::sqrt(w_tilde * (kk + 1.0)) * in.L) : inf;
    h.eta_terms = {1.0 / in.L, second, third};
  } else {
    const double delta = contraction_parameter(cls);
    const double arg =
        (in.L * (in.G_star + in.Delta_f) + sigma_sq) * delta * T / (in.L * in.Delta_f);
    h.R = ceil_to_int(std::max(std::log(arg), 1.0) / delta);
    if (h.R > T_budget) throw ValidationError("schedule_nc: budget smaller than R");
    h.K = T_budget / h.R;
    const double kk = static_cast<double>(h.K);
    const double residual = std::pow(1.0 - delta, h.R);
    const double second = std::sqrt(h.R * n * in.Delta_f / ((kk + 1.0) * in.L * sigma_sq));
    const double third = residual > 0.0 ? 1.0 / (2.0 * residual * (kk + 1.0) * in.L) : inf;
    h.eta_terms = {1.0 / (4.0 * in.L), second, third};
  }
  h.eta = PowerSchedule::constant(*std::min_element(h.eta_terms.begin(), h.eta_terms.end()));
  return h;
}

long StagePlan::total_rounds() const {
  long total = 0;
  for (const auto& s : stages) total += s.K * s.R;
  return total;
}

StagePlan plan_multistage(const ScheduleInputs& in, const CompressorClass& cls, double eps) {
  require_positive(in.L, "L");
  require_positive(in.Delta_x, "Delta_x");
  require_positive(in.g0, "g(x0)");
  require_positive(eps, "eps");
  if (!(in.mu > 0.0)) throw ValidationError("plan_multistage: mu must be > 0");
  StagePlan plan;
  plan.S = std::max(1, static_cast<int>(std::ceil(std::log2(in.L * in.Delta_x / eps))));
  const double delta = contraction_parameter(cls);
  std::vector<std::string> notes;
  const double sigma_sq = effective_sigma_sq(in, &notes);
  if (!cls.contractive()) {
    notes.emplace_back("unbiased class treated as contractive with delta = 1/(1+omega)");
  }
  const double gamma = std::sqrt(in.mu / in.L);
  for (int s = 0; s < plan.S; ++s) {
    const double target = std::ldexp(in.g0, -(s + 1));
    const double start = s == 0 ? in.g0 : 131.0 / 81.0 * std::ldexp(in.g0, -s);
    auto meets = [&](long K) {
      return sc_bound(in, gamma, sigma_sq, start, K, sc_rounds(in, delta, gamma, sigma_sq, K)) <=
             target;
    };
    long hi = 1;
    while (!meets(hi)) {
      if (hi > (1L << 40)) throw ValidationError("plan_multistage: stage target unreachable");
      hi *= 2;
    }
    long lo = hi / 2;  // fails (or 0)
    while (hi - lo > 1) {
      const long mid = lo + (hi - lo) / 2;
      if (meets(mid)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    NeolithicHyper h;
    h.K = hi;
    h.R = sc_rounds(in, delta, gamma, sigma_sq, hi);
    h.eta = PowerSchedule::constant(1.0 / in.L);
    h.gamma = PowerSchedule::constant(gamma);
    h.notes = notes;
    h.p = sc_p(gamma, in.mu, in.n, start, sigma_sq, h.K, h.R, &h.notes);
    plan.stages.push_back(std::move(h));
    plan.targets.push_back(target);
    plan.start_bounds.push_back(start);
  }
  return plan;
}

}  // namespace ccopt
