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


#include "ccopt/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ccopt {

void CommLedger::charge_message(int worker, const CompressedMessage& msg) {
  ++messages[worker];
  scalar_cost += msg.scalar_cost;
  bit_cost += msg.bit_cost;
}

bool CommLedger::balanced(std::int64_t rounds) const {
  return std::all_of(messages.begin(), messages.end(), [&](auto m) { return m == rounds; }) &&
         std::all_of(oracle_queries.begin(), oracle_queries.end(),
                     [&](auto q) { return q == rounds; });
}

Metric default_metric(const ProblemInstance& problem) {
  return problem.convex ? Metric::kFGap : Metric::kGradNormSq;
}

std::string_view metric_name(Metric metric) {
  return metric == Metric::kFGap ? "f_gap" : "grad_norm_sq";
}

double evaluate_metric(const ProblemInstance& problem, Metric metric, const DenseVector& x) {
  if (metric == Metric::kFGap) return problem.gap(x);
  return problem.gradient(x).squaredNorm();
}

void RunContext::validate() const {
  if (problem == nullptr) throw ValidationError("run context has no problem");
  if (specs.empty()) throw ValidationError("run context has no compressor");
  if (specs.size() != 1 && static_cast<int>(specs.size()) != problem->n) {
    throw ValidationError("expected 1 or " + std::to_string(problem->n) +
                          " compressor specs, got " + std::to_string(specs.size()));
  }
  if (!(oracle.sigma >= 0.0) || !std::isfinite(oracle.sigma)) {
    throw ValidationError("oracle sigma must be finite and non-negative");
  }
  for (const auto& s : specs) ccopt::validate(s, problem->d);
}

namespace {

RandomStream oracle_stream(const RunContext& ctx, int worker, long round) {
  return derive_stream(ctx.master_seed, {ctx.scope, ctx.trial, static_cast<std::uint64_t>(worker),
                                         static_cast<std::uint64_t>(round), "oracle"});
}

RandomStream compress_stream(const RunContext& ctx, int worker, long round) {
  const bool shared = randomness(ctx.spec(worker)) == Randomness::kSharedPerRound;
  return derive_stream(ctx.master_seed,
                       {ctx.scope, ctx.trial, static_cast<std::uint64_t>(worker),
                        static_cast<std::uint64_t>(round), shared ? kSharedTag : "compress"});
}

// Appends (t, value) for the rounds in [first, last] that pass the sampling
// filter. `final_round` is always kept.
class Recorder {
 public:
  Recorder(const RunOptions& options, Trajectory& traj, long final_round)
      : options_(options), traj_(traj), final_(final_round) {}

  void emit(long first, long last, double value) {
    if (!options_.record) return;
    const long every = std::max(1L, options_.record_every);
    for (long t = first; t <= last; ++t) {
      if (t == 0 || t == final_ || t % every == 0) traj_.records.emplace_back(t, value);
    }
  }

  /// The last round of a run, kept regardless of the filter.
  void emit_final(long t, double value) {
    if (options_.record) traj_.records.emplace_back(t, value);
  }

 private:
  const RunOptions& options_;
  Trajectory& traj_;
  long final_;
};

double checked_metric(const ProblemInstance& problem, Metric metric, const DenseVector& x,
                      long round) {
  const double v = evaluate_metric(problem, metric, x);
  if (!std::isfinite(v)) {
    throw NumericalError("metric is not finite at round " + std::to_string(round));
  }
  return v;
}

void mark_diverged(Trajectory& traj, const NumericalError& e) {
  traj.diverged = true;
  traj.diagnostic = e.what();
}

// Outer iterations [0, K) of one NEOLITHIC stage. Rounds are shifted by
// round_offset and random streams by stream_offset.
void neolithic_stage(const RunContext& ctx, const NeolithicHyper& hyper, NeolithicState& state,
                     const RunOptions& options, Trajectory& traj, Recorder& rec,
                     long round_offset, long stream_offset, long return_index,
                     DenseVector* returned) {
  const auto& problem = *ctx.problem;
  const long R = hyper.R;
  double value = checked_metric(problem, traj.metric, state.x, round_offset);
  if (return_index == 0 && returned != nullptr) *returned = state.x;
  for (long k = 0; k < hyper.K; ++k) {
    const long start = round_offset + k * R;
    rec.emit(start, start + R - 1, value);
    neolithic_round(state, ctx, hyper, k, stream_offset + k, traj.ledger, start, options.hooks);
    traj.rounds = start + R;
    value = checked_metric(problem, traj.metric, state.x, traj.rounds);
    if (k + 1 == return_index && returned != nullptr) *returned = state.x;
  }
  traj.x_final = state.x;
  if (hyper.K == 0) traj.rounds = round_offset;
}

}  // namespace

void neolithic_round(NeolithicState& state, const RunContext& ctx, const NeolithicHyper& hyper,
                     long k, long stream_round, CommLedger& ledger, long round_offset,
                     const RoundHooks* hooks) {
  const auto& problem = *ctx.problem;
  const double gamma = hyper.gamma.at(k);
  const double eta = hyper.eta.at(k);
  const double p = hyper.p;
  const double a = gamma / p;

  const DenseVector y = (1.0 - a) * state.x + a * state.z;

  std::vector<DenseVector> received(problem.n);
  DenseVector g(problem.d);
  for (int i = 0; i < problem.n; ++i) {
    if (hooks && hooks->on_query) hooks->on_query(round_offset + 1, i, y);
    RandomStream orng = oracle_stream(ctx, i, stream_round);
    oracle_average(problem, i, y, ctx.oracle, hyper.R, orng, g);
    ledger.charge_queries(i, hyper.R);

    RandomStream crng = compress_stream(ctx, i, stream_round);
    MscResult sent = msc_send(g, ctx.spec(i), hyper.R, crng);
    for (int r = 0; r < hyper.R; ++r) {
      const auto& msg = sent.transcript.messages[r];
      ledger.charge_message(i, msg);
      if (hooks && hooks->on_message) hooks->on_message(round_offset + r + 1, i, msg);
    }
    received[i] = msc_receive(sent.transcript, problem.d);
  }
  const DenseVector g_hat = pairwise_mean(received);

  DenseVector x_next = y - (eta / p) * g_hat;
  state.z = (1.0 / gamma) * x_next + (1.0 / p - 1.0 / gamma) * state.x + (1.0 - 1.0 / p) * state.z;
  state.x = std::move(x_next);
  if (!all_finite(state.x) || !all_finite(state.z)) {
    throw NumericalError("NEOLITHIC iterate is not finite after outer iteration " +
                         std::to_string(k));
  }
}

Trajectory run_neolithic(const RunContext& ctx, const NeolithicHyper& hyper,
                         const RunOptions& options) {
  ctx.validate();
  return run_neolithic_from(ctx, hyper, ctx.problem->x0, options);
}

Trajectory run_neolithic_from(const RunContext& ctx, const NeolithicHyper& hyper,
                              const DenseVector& x_start, const RunOptions& options) {
  ctx.validate();
  validate(hyper);
  const auto& problem = *ctx.problem;
  if (x_start.size() != problem.d) throw ValidationError("starting point has wrong dimension");

  Trajectory traj;
  traj.metric = default_metric(problem);
  traj.ledger = CommLedger(problem.n);
  traj.notes = hyper.notes;
  Recorder rec(options, traj, hyper.K * static_cast<long>(hyper.R));

  // Non-convex runs return a uniformly drawn iterate; the index is drawn up
  // front so only one extra vector is kept.
  long return_index = hyper.K;
  if (!problem.convex) {
    RandomStream rng = derive_stream(ctx.master_seed, {ctx.scope, ctx.trial, 0, 0, "return"});
    return_index = static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(hyper.K) + 1));
  }

  NeolithicState state{x_start, x_start};
  traj.x_final = x_start;
  traj.x_returned = x_start;
  try {
    neolithic_stage(ctx, hyper, state, options, traj, rec, 0, 0, return_index, &traj.x_returned);
    rec.emit_final(traj.rounds, checked_metric(problem, traj.metric, state.x, traj.rounds));
  } catch (const NumericalError& e) {
    mark_diverged(traj, e);
  }
  return traj;
}

MultistageResult run_multistage(const RunContext& ctx, const StagePlan& plan,
                                const RunOptions& options, long round_budget) {
  ctx.validate();
  const auto& problem = *ctx.problem;
  MultistageResult out;
  auto& traj = out.trajectory;
  traj.metric = default_metric(problem);
  traj.ledger = CommLedger(problem.n);

  long planned = 0;
  for (const auto& h : plan.stages) {
    validate(h);
    planned += h.K * static_cast<long>(h.R);
  }
  const long final_round = round_budget >= 0 ? std::min(planned, round_budget) : planned;
  Recorder rec(options, traj, final_round);

  NeolithicState state{problem.x0, problem.x0};
  traj.x_final = problem.x0;
  traj.x_returned = problem.x0;
  long offset = 0;
  long stream_offset = 0;
  try {
    out.stage_gaps.push_back(problem.gap(state.x));
    for (std::size_t s = 0; s < plan.stages.size(); ++s) {
      const auto& h = plan.stages[s];
      const long rounds = h.K * static_cast<long>(h.R);
      if (round_budget >= 0 && offset + rounds > round_budget) {
        out.budget_exhausted = true;
        traj.notes.push_back("round budget reached before stage " + std::to_string(s));
        break;
      }
      for (const auto& note : h.notes) traj.notes.push_back("stage " + std::to_string(s) + ": " + note);
      // Each stage restarts from its input with z = x.
      state.z = state.x;
      neolithic_stage(ctx, h, state, options, traj, rec, offset, stream_offset, -1, nullptr);
      offset += rounds;
      stream_offset += h.K;
      traj.rounds = offset;
      out.stage_gaps.push_back(problem.gap(state.x));
    }
    traj.x_final = state.x;
    traj.x_returned = state.x;
    rec.emit_final(offset, checked_metric(problem, traj.metric, state.x, offset));
  } catch (const NumericalError& e) {
    mark_diverged(traj, e);
  }
  return out;
}

BaselineKind parse_baseline(std::string_view name) {
  if (name == "QSGD") return BaselineKind::kQsgd;
  if (name == "MEM_SGD") return BaselineKind::kMemSgd;
  if (name == "DOUBLE_SQUEEZE") return BaselineKind::kDoubleSqueeze;
  if (name == "EF21_SGD") return BaselineKind::kEf21Sgd;
  throw ValidationError("unknown baseline '" + std::string(name) + "'");
}

std::string_view baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kQsgd: return "QSGD";
    case BaselineKind::kMemSgd: return "MEM_SGD";
    case BaselineKind::kDoubleSqueeze: return "DOUBLE_SQUEEZE";
    case BaselineKind::kEf21Sgd: return "EF21_SGD";
  }
  return "?";
}

BaselineState BaselineState::start(const ProblemInstance& problem, const DenseVector& x0) {
  return {x0, std::vector<DenseVector>(problem.n, DenseVector::Zero(problem.d))};
}

std::vector<DenseVector> baseline_round(BaselineKind kind, BaselineState& state,
                                        const RunContext& ctx, double eta, long t,
                                        CommLedger& ledger, const RoundHooks* hooks) {
  const auto& problem = *ctx.problem;
  const int d = problem.d;
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ValidationError("step size must be positive and finite at round " + std::to_string(t));
  }
  std::vector<DenseVector> decoded(problem.n);
  std::vector<DenseVector> sent(problem.n);
  DenseVector g(d);
  for (int i = 0; i < problem.n; ++i) {
    if (hooks && hooks->on_query) hooks->on_query(t + 1, i, state.x);
    RandomStream orng = oracle_stream(ctx, i, t);
    oracle_average(problem, i, state.x, ctx.oracle, 1, orng, g);
    ledger.charge_queries(i, 1);

    auto& memory = state.memory[i];
    DenseVector input;
    switch (kind) {
      case BaselineKind::kQsgd: input = g; break;
      case BaselineKind::kMemSgd: input = memory + eta * g; break;
      case BaselineKind::kDoubleSqueeze: input = memory + g; break;
      case BaselineKind::kEf21Sgd: input = g - memory; break;
    }
    RandomStream crng = compress_stream(ctx, i, t);
    const CompressedMessage msg = compress(ctx.spec(i), input, crng);
    ledger.charge_message(i, msg);
    if (hooks && hooks->on_message) hooks->on_message(t + 1, i, msg);
    decoded[i] = decompress(msg, d);

    switch (kind) {
      case BaselineKind::kQsgd: sent[i] = decoded[i]; break;
      case BaselineKind::kMemSgd:
      case BaselineKind::kDoubleSqueeze:
        memory = input - decoded[i];
        sent[i] = decoded[i];
        break;
      case BaselineKind::kEf21Sgd:
        memory += decoded[i];
        sent[i] = memory;
        break;
    }
  }
  const DenseVector avg = pairwise_mean(sent);
  // MEM-SGD folds the step size into the residual before compressing.
  if (kind == BaselineKind::kMemSgd) {
    state.x -= avg;
  } else {
    state.x -= eta * avg;
  }
  if (!all_finite(state.x)) {
    throw NumericalError(std::string(baseline_name(kind)) + " iterate is not finite after round " +
                         std::to_string(t + 1));
  }
  return decoded;
}

Trajectory run_baseline(BaselineKind kind, const RunContext& ctx, const PowerSchedule& lr, long T,
                        const RunOptions& options) {
  ctx.validate();
  if (T < 0) throw ValidationError("T must be non-negative");
  const auto& problem = *ctx.problem;

  Trajectory traj;
  traj.metric = default_metric(problem);
  traj.ledger = CommLedger(problem.n);
  Recorder rec(options, traj, T);

  BaselineState state = BaselineState::start(problem, problem.x0);
  traj.x_final = state.x;
  traj.x_returned = state.x;
  try {
    double value = checked_metric(problem, traj.metric, state.x, 0);
    for (long t = 0; t < T; ++t) {
      rec.emit(t, t, value);
      baseline_round(kind, state, ctx, lr.at(t), t, traj.ledger, options.hooks);
      traj.rounds = t + 1;
      traj.x_final = state.x;
      traj.x_returned = state.x;
      value = checked_metric(problem, traj.metric, state.x, t + 1);
    }
    rec.emit_final(T, value);
  } catch (const NumericalError& e) {
    mark_diverged(traj, e);
  }
  return traj;
}

}  // namespace ccopt
