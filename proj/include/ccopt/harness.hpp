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

#include "ccopt/algorithms.hpp"
#include "ccopt/compressors.hpp"
#include "ccopt/problems.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ccopt {

/// Problem generator settings. `type` selects least_squares, logistic,
/// chain_sc, chain_gc or chain_nc; keys that do not apply are ignored.
struct ProblemConfig {
  std::string type = "least_squares";
  int n = 30;
  int M = 100;
  int d = 10;
  double cond = 1.0;
  double het_scale = 0.1;
  double noise_b = 0.1;
  std::uint64_t seed = 0;
  double tol = 1e-10;
  double L = 1.0;
  double mu = 0.0;
  double Delta_x = 1.0;
  double Delta_f = 1.0;
};

ProblemInstance build_problem(const ProblemConfig& cfg);

/// Step sizes and momentum parameters of the hand-tuned schedules:
/// eta_k = min{c1/L, eta0 (k+1)^-c2}, gamma_k = gamma0 (k+1)^-c2.
struct TunedHyper {
  int R = 1;
  double p = 1.0;
  double c1 = 1.0;
  double eta0 = 1.0;
  double c2 = 0.0;
  double gamma0 = 1.0;
};

enum class AlgorithmKind {
  kNeolithic,
  kNeolithicMultistage,
  kQsgd,
  kMemSgd,
  kDoubleSqueeze,
  kEf21Sgd,
};

struct AlgorithmConfig {
  AlgorithmKind kind = AlgorithmKind::kNeolithic;
  std::string label;  // CSV algorithm column and stream scope
  CompressorSpec compressor;
  /// NEOLITHIC: "tuned" or "theory"; ignored by the others.
  std::string schedule = "tuned";
  TunedHyper hyper;
  /// Multi-stage precision relative to f(x0) - f*.
  double eps_rel = 1e-6;
};

struct ExperimentConfig {
  std::string id = "experiment";
  ProblemConfig problem;
  OracleConfig oracle;
  long budget_T = 0;
  int trials = 1;
  std::uint64_t master_seed = 0;
  long record_every = 1;
  std::vector<AlgorithmConfig> algorithms;
  std::string output;  // CSV file name, relative to the output directory
};

/// Applies repeatable `key=value` overrides (dotted paths, array indices as
/// numbers, values parsed as JSON when possible) to a JSON document.
std::string apply_overrides(const std::string& json_text, const std::vector<std::string>& sets);

/// Strict parse: unknown keys, wrong types and infeasible budgets raise
/// ValidationError.
ExperimentConfig parse_experiment(const std::string& json_text);

struct MetricsRow {
  std::string algorithm;
  int trial = 0;
  long comm_round = 0;
  Metric metric = Metric::kFGap;
  double value = 0.0;
};

struct CellSummary {
  std::string algorithm;
  int trial = 0;
  long rounds = 0;
  bool diverged = false;
  std::string diagnostic;
  CommLedger ledger;
  std::vector<std::string> notes;
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;  // sorted by (algorithm, trial, comm_round)
  std::vector<CellSummary> cells;
};

/// Runs every (algorithm, trial) cell on up to `jobs` threads. A diverged
/// trial keeps its records and gets one +inf sentinel row. Throws
/// std::logic_error when a ledger does not match the rounds run.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1);

inline constexpr const char* kMetricsHeader = "algorithm,trial,comm_round,metric,value";

std::string format_real(double v);
std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> parse_metrics_csv(const std::string& text);

/// Human-readable run log: overrides, per-cell ledgers, notes and
/// divergences. Contains nothing run-dependent besides the results.
std::string run_log(const ExperimentConfig& cfg, const ExperimentResult& result,
                    const std::vector<std::string>& overrides);

enum class Statistic { kMean, kMedian };

struct Series {
  std::vector<long> rounds;
  std::vector<double> values;
  int trials_used = 0;
  int diverged = 0;
};

/// Per-algorithm statistic across trials at each round. Trials containing a
/// non-finite value are excluded and counted in `diverged`.
std::map<std::string, Series> aggregate(const std::vector<MetricsRow>& rows, Statistic statistic);

/// 10 log10(value), floored at -160 dB.
double to_db(double value);

// R sweep -------------------------------------------------------------------

struct NamedCompressor {
  std::string label;
  CompressorSpec spec;
};

struct SweepConfig {
  std::string id = "sweep_r";
  ProblemConfig problem;                    // het_scale is overridden per setting
  std::map<std::string, double> heterogeneity;  // label -> het_scale
  std::map<std::string, double> noise;          // label -> per-coordinate scale
  std::vector<NamedCompressor> compressors;
  std::vector<int> R_values;
  TunedHyper hyper;  // R comes from R_values
  long budget_T = 10000;
  int trials = 1;
  std::uint64_t master_seed = 0;
  std::string output;
};

SweepConfig parse_sweep(const std::string& json_text);

struct SweepRow {
  int R = 1;
  std::string compressor;
  std::string heterogeneity;
  std::string noise;
  int trial = 0;
  double best = 0.0;  // min f - f* over the rounds reached
  bool diverged = false;
};

inline constexpr const char* kSweepHeader = "R,compressor,heterogeneity,noise,trial,best_f_gap,diverged";

std::vector<SweepRow> sweep_R(const SweepConfig& cfg, int jobs = 1);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Manifest ------------------------------------------------------------------

struct ManifestEntry {
  std::string id;
  std::string path;
  long rows = 0;
};

/// Index of every *.csv in `dir` (sorted by file name), written as
/// tab-separated `id path rows` lines to dir/manifest.tsv.
std::vector<ManifestEntry> write_manifest(const std::filesystem::path& dir);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& file);

std::string read_text(const std::filesystem::path& file);
void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace ccopt
