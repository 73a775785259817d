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


// Command-line driver: experiments, R sweeps, compressor validation,
// hard-instance traces and the CSV manifest.

#include "ccopt/hard_instances.hpp"
#include "ccopt/harness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace ccopt;

namespace {

constexpr int kExitUsage = 64;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::vector<std::string> sets;
  std::string out = ".";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment config (JSON)");
  cmd->add_option("--seed", args.seed, "master seed override");
  cmd->add_option("--jobs", args.jobs, "concurrent (algorithm x trial) cells")->check(CLI::PositiveNumber);
  cmd->add_option("--set", args.sets, "key=value override, dotted path (repeatable)");
  cmd->add_option("--out", args.out, "output directory");
}

// Reads the config and applies --set, then --seed.
std::string load_config(const CommonArgs& args, std::vector<std::string>& applied) {
  applied = args.sets;
  if (args.seed) applied.push_back("master_seed=" + std::to_string(*args.seed));
  return apply_overrides(read_text(args.config), applied);
}

int cmd_run(const CommonArgs& args) {
  std::vector<std::string> applied;
  const auto cfg = parse_experiment(load_config(args, applied));
  const auto result = run_experiment(cfg, args.jobs);
  const fs::path csv = fs::path(args.out) / cfg.output;
  write_text(csv, metrics_csv(result.rows));
  write_text(fs::path(args.out) / (cfg.id + ".log"), run_log(cfg, result, applied));
  int diverged = 0;
  for (const auto& c : result.cells) diverged += c.diverged;
  std::cout << "wrote " << csv.string() << " (" << result.rows.size() << " rows";
  if (diverged) std::cout << ", " << diverged << " diverged trials";
  std::cout << ")\n";
  for (const auto& [alg, s] : aggregate(result.rows, Statistic::kMean)) {
    if (s.values.empty()) continue;
    std::printf("  %-24s final mean %-12.6g %8.2f dB\n", alg.c_str(), s.values.back(),
                to_db(s.values.back()));
  }
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  std::vector<std::string> applied;
  const auto cfg = parse_sweep(load_config(args, applied));
  const auto rows = sweep_R(cfg, args.jobs);
  const fs::path csv = fs::path(args.out) / cfg.output;
  write_text(csv, sweep_csv(rows));
  std::ostringstream log;
  log << "sweep " << cfg.id << "\n";
  for (const auto& o : applied) log << "override " << o << "\n";
  write_text(fs::path(args.out) / (cfg.id + ".log"), log.str());
  std::cout << "wrote " << csv.string() << " (" << rows.size() << " rows)\n";
  return 0;
}

int cmd_validate_compressors(std::uint64_t seed, int trials, int vectors) {
  struct Entry {
    int d;
    CompressorSpec spec;
  };
  std::vector<Entry> entries;
  for (int d : {2, 10, 50}) {
    const int k = std::max(1, d / 5);
    for (const auto& spec :
         {CompressorSpec::identity(), CompressorSpec::top_k(k), CompressorSpec::rand_k(k),
          CompressorSpec::urand_k(k), scale_to_contractive(CompressorSpec::urand_k(k)),
          CompressorSpec::random_quant(1), CompressorSpec::random_quant(4),
          CompressorSpec::shared_sparsifier(4.0), CompressorSpec::shared_sparsifier(4.0, false)}) {
      entries.push_back({d, spec});
    }
  }
  int failures = 0;
  std::printf("%-40s %4s %10s %10s %10s %10s  %s\n", "compressor", "d", "omega", "delta",
              "rel_err", "3SE", "result");
  std::uint64_t index = 0;
  for (const auto& e : entries) {
    RandomStream rng = derive_stream(seed, {"validate-compressors", index++, 0, 0, "draws"});
    const auto est = estimate_class(e.spec, trials, e.d, rng, vectors);
    const auto cls = claimed_class(e.spec, e.d);
    const bool ok = consistent_with(est, cls);
    failures += !ok;
    auto fmt = [](const std::optional<double>& v) {
      char buf[32];
      if (v) std::snprintf(buf, sizeof buf, "%.4g", *v); else std::snprintf(buf, sizeof buf, "-");
      return std::string(buf);
    };
    std::printf("%-40s %4d %10s %10s %10.4g %10.2g  %s\n", describe(e.spec).c_str(), e.d,
                fmt(cls.omega).c_str(), fmt(cls.delta).c_str(), est.rel_error,
                3.0 * est.rel_error_se, ok ? "PASS" : "FAIL");
  }
  std::printf("%zu claims, %d failed\n", entries.size(), failures);
  return failures ? 1 : 0;
}

struct HardArgs {
  std::string chain = "gc";
  std::string algorithm = "gd";
  double omega = 4.0;
  long T = 100;
  int runs = 1;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_hard_instance(const HardArgs& a) {
  ChainParams cp;
  cp.n = 2;
  cp.L = 1.0;
  if (a.chain == "gc") {
    cp.kind = ChainKind::kNesterov;
    cp.d = static_cast<int>(a.T) + 1;
  } else if (a.chain == "sc") {
    cp.kind = ChainKind::kStronglyConvex;
    cp.mu = 0.01;
  } else if (a.chain == "nc") {
    cp.kind = ChainKind::kPsiPhi;
    cp.d = static_cast<int>(a.T) + 1;
  } else {
    throw ValidationError("--chain must be gc, sc or nc");
  }
  const auto chain = build_chain(cp);
  const double eta = 1.0 / chain.problem.L;
  const TracedAlgorithm alg = a.algorithm == "gd" ? TracedAlgorithm::gradient_descent(eta)
                                                  : TracedAlgorithm::from_baseline(parse_baseline(a.algorithm), eta);
  const auto spec = adversarial_sparsifier(a.omega);
  const ProgTrace trace = traced_run(alg, chain.problem, spec, a.T, a.seed);
  std::string csv = "round,B_t,bound_ept\n";
  const double rate = std::exp(1.0) / (1.0 + a.omega);
  for (long t = 0; t <= trace.T(); ++t) {
    csv += std::to_string(t) + ',' + std::to_string(trace.B[t]) + ',' +
           format_real(trace.B[0] + rate * static_cast<double>(t)) + '\n';
  }
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_text(fs::path(a.out) / ("hard_instance_" + a.chain + ".csv"), csv);
  }
  if (a.runs > 1) {
    const auto tail = progress_tail(alg, chain.problem, a.omega, a.T, a.runs, a.seed);
    std::fprintf(stderr, "runs %d: P(B_T > %.4g) = %.4f (bound %.4f), mean B_T %.3f, increment violations %d\n",
                 tail.runs, tail.threshold, tail.frequency, std::exp(-1.0), tail.mean_final,
                 tail.increment_violations);
  }
  return trace.increment_violations().empty() ? 0 : 1;
}

int cmd_render_manifest(const std::string& dir) {
  const auto entries = write_manifest(dir);
  std::cout << "wrote " << (fs::path(dir) / "manifest.tsv").string() << " (" << entries.size()
            << " experiments)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ccopt: compressed distributed optimization experiments"};
  app.require_subcommand(1);

  CommonArgs run_args;
  auto* run = app.add_subcommand("run", "run an experiment config and write its metrics CSV");
  add_common(run, run_args);

  CommonArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep-r", "best precision of NEOLITHIC across MSC rounds R");
  add_common(sweep, sweep_args);

  std::uint64_t val_seed = 0;
  int val_trials = 10000;
  int val_vectors = 64;
  auto* val = app.add_subcommand("validate-compressors", "Monte-Carlo check of every claimed class");
  val->add_option("--seed", val_seed, "master seed");
  val->add_option("--trials", val_trials, "draws per direction")->check(CLI::PositiveNumber);
  val->add_option("--vectors", val_vectors, "random directions per compressor")->check(CLI::PositiveNumber);

  HardArgs hard_args;
  auto* hard = app.add_subcommand("hard-instance", "progress trace on a zero-chain instance");
  hard->add_option("--chain", hard_args.chain, "gc, sc or nc");
  hard->add_option("--algorithm", hard_args.algorithm, "gd, QSGD, MEM_SGD, DOUBLE_SQUEEZE or EF21_SGD");
  hard->add_option("--omega", hard_args.omega, "sparsifier omega")->check(CLI::NonNegativeNumber);
  hard->add_option("--T", hard_args.T, "communication rounds")->check(CLI::NonNegativeNumber);
  hard->add_option("--runs", hard_args.runs, "independent runs for the tail estimate")->check(CLI::PositiveNumber);
  hard->add_option("--seed", hard_args.seed, "master seed");
  hard->add_option("--out", hard_args.out, "output directory (stdout when omitted)");

  std::string manifest_dir = ".";
  auto* manifest = app.add_subcommand("render-manifest", "index the CSVs of a directory for plotting");
  manifest->add_option("--out", manifest_dir, "directory holding the CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed() || sweep->parsed()) {
      auto* cmd = run->parsed() ? run : sweep;
      const auto& args = run->parsed() ? run_args : sweep_args;
      if (args.config.empty()) {
        std::cerr << "error: --config is required\n\n" << cmd->help();
        return kExitUsage;
      }
      return run->parsed() ? cmd_run(args) : cmd_sweep(args);
    }
    if (val->parsed()) return cmd_validate_compressors(val_seed, val_trials, val_vectors);
    if (hard->parsed()) return cmd_hard_instance(hard_args);
    if (manifest->parsed()) return cmd_render_manifest(manifest_dir);
  } catch (const ValidationError& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
