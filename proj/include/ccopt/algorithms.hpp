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
#include "ccopt/msc.hpp"
#include "ccopt/problems.hpp"
#include "ccopt/schedules.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ccopt {

/// Exact per-worker accounting of compressed messages and oracle queries.
struct CommLedger {
  std::vector<std::int64_t> messages;
  std::vector<std::int64_t> oracle_queries;
  std::int64_t scalar_cost = 0;
  std::int64_t bit_cost = 0;

  CommLedger() = default;
  explicit CommLedger(int n) : messages(n, 0), oracle_queries(n, 0) {}

  void charge_message(int worker, const CompressedMessage& msg);
  void charge_queries(int worker, std::int64_t count) { oracle_queries[worker] += count; }
  /// True when every worker has sent `rounds` messages and made `rounds`
  /// oracle queries.
  bool balanced(std::int64_t rounds) const;
};

enum class Metric { kFGap, kGradNormSq };

/// f - f* for convex problems, ||grad f||^2 otherwise.
Metric default_metric(const ProblemInstance& problem);
std::string_view metric_name(Metric metric);
double evaluate_metric(const ProblemInstance& problem, Metric metric, const DenseVector& x);

/// Everything a run needs besides its hyperparameters.
struct RunContext {
  const ProblemInstance* problem = nullptr;
  OracleConfig oracle;
  /// One spec for all workers, or one per worker.
  std::vector<CompressorSpec> specs{CompressorSpec::identity()};
  std::uint64_t master_seed = 0;
  std::string scope = "run";  // embedded in every stream path
  std::uint64_t trial = 0;

  const CompressorSpec& spec(int worker) const {
    return specs.size() == 1 ? specs.front() : specs.at(worker);
  }
  void validate() const;
};

/// Read-only instrumentation. Rounds are 1-based communication rounds.
struct RoundHooks {
  std::function<void(long round, int worker, const DenseVector& query)> on_query;
  std::function<void(long round, int worker, const CompressedMessage& msg)> on_message;
};

struct RunOptions {
  bool record = true;
  /// Keep rounds that are multiples of this; round 0 and the last round are
  /// always kept.
  long record_every = 1;
  const RoundHooks* hooks = nullptr;
};

struct Trajectory {
  Metric metric = Metric::kFGap;
  std::vector<std::pair<long, double>> records;  // (comm_round, value)
  DenseVector x_final;
  DenseVector x_returned;
  CommLedger ledger;
  long rounds = 0;
  bool diverged = false;
  std::string diagnostic;
  std::vector<std::string> notes;
};

struct NeolithicState {
  DenseVector x;
  DenseVector z;
};

/// One outer iteration k. `stream_round` addresses the random streams and must
/// be unique within a run; `round_offset` is the number of communication
/// rounds already completed (used only for hooks). Throws NumericalError when
/// the new iterate is not finite.
void neolithic_round(NeolithicState& state, const RunContext& ctx, const NeolithicHyper& hyper,
                     long k, long stream_round, CommLedger& ledger, long round_offset = 0,
                     const RoundHooks* hooks = nullptr);

/// K outer iterations from problem.x0. Convex problems return x^K, others a
/// uniformly sampled iterate from {x^0, ..., x^K}.
Trajectory run_neolithic(const RunContext& ctx, const NeolithicHyper& hyper,
                         const RunOptions& options = {});

/// Same, starting from x_start.
Trajectory run_neolithic_from(const RunContext& ctx, const NeolithicHyper& hyper,
                              const DenseVector& x_start, const RunOptions& options = {});

struct MultistageResult {
  Trajectory trajectory;
  /// f - f* at x^[0], ..., x^[S] (stages actually run).
  std::vector<double> stage_gaps;
  bool budget_exhausted = false;
};

/// Restarted NEOLITHIC: stage s starts from the output of stage s-1. A
/// non-negative `round_budget` stops before a stage that would exceed it and sets
/// budget_exhausted.
MultistageResult run_multistage(const RunContext& ctx, const StagePlan& plan,
                                const RunOptions& options = {}, long round_budget = -1);

enum class BaselineKind { kQsgd, kMemSgd, kDoubleSqueeze, kEf21Sgd };

BaselineKind parse_baseline(std::string_view name);
std::string_view baseline_name(BaselineKind kind);

struct BaselineState {
  DenseVector x;
  /// Error-feedback residuals (MEM-SGD, Double-Squeeze) or gradient trackers
  /// (EF21), zero-initialized.
  std::vector<DenseVector> memory;

  static BaselineState start(const ProblemInstance& problem, const DenseVector& x0);
};

/// Round t (0-based) of a baseline with step size eta. Returns the decoded
/// per-worker messages. Throws NumericalError on a non-finite iterate.
std::vector<DenseVector> baseline_round(BaselineKind kind, BaselineState& state,
                                        const RunContext& ctx, double eta, long t,
                                        CommLedger& ledger, const RoundHooks* hooks = nullptr);

/// T rounds of a single-message-per-round compressed SGD baseline with step
/// size lr.at(t) at round t.
Trajectory run_baseline(BaselineKind kind, const RunContext& ctx, const PowerSchedule& lr, long T,
                        const RunOptions& options = {});

}  // namespace ccopt
