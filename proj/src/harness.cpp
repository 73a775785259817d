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


#include "ccopt/harness.hpp"

#include "ccopt/hard_instances.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace ccopt {

using nlohmann::json;

namespace {

// Strict JSON reading ---------------------------------------------------------

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ValidationError(where + ": unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ValidationError("");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_integer() && !it->is_number_unsigned()) throw ValidationError("");
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_integer() && it->template get<long long>() < 0) throw ValidationError("");
      }
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ValidationError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ValidationError("");
    }
    out = it->template get<T>();
  } catch (const std::exception&) {
    throw ValidationError(where + "." + key + ": wrong type");
  }
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
}

ProblemConfig parse_problem(const json& obj) {
  const std::string w = "problem";
  require_keys(obj, w,
               {"type", "n", "M", "d", "cond", "het_scale", "noise_b", "seed", "tol", "L", "mu",
                "Delta_x", "Delta_f"});
  ProblemConfig p;
  read(obj, "type", w, p.type);
  read(obj, "n", w, p.n);
  read(obj, "M", w, p.M);
  read(obj, "d", w, p.d);
  read(obj, "cond", w, p.cond);
  read(obj, "het_scale", w, p.het_scale);
  read(obj, "noise_b", w, p.noise_b);
  read(obj, "seed", w, p.seed);
  read(obj, "tol", w, p.tol);
  read(obj, "L", w, p.L);
  read(obj, "mu", w, p.mu);
  read(obj, "Delta_x", w, p.Delta_x);
  read(obj, "Delta_f", w, p.Delta_f);
  static const std::set<std::string> types = {"least_squares", "logistic", "chain_sc", "chain_gc",
                                              "chain_nc"};
  if (!types.count(p.type)) throw ValidationError("problem.type: unknown '" + p.type + "'");
  return p;
}

CompressorSpec parse_compressor(const json& obj, const std::string& w) {
  require_keys(obj, w, {"kind", "k", "s", "omega", "rescale", "scaled"});
  std::string kind;
  int k = 0;
  int s = 0;
  double omega = 0.0;
  bool rescale = true;
  bool scaled = false;
  read(obj, "kind", w, kind);
  read(obj, "k", w, k);
  read(obj, "s", w, s);
  read(obj, "omega", w, omega);
  read(obj, "rescale", w, rescale);
  read(obj, "scaled", w, scaled);
  CompressorSpec spec;
  if (kind == "TopK") {
    spec = CompressorSpec::top_k(k);
  } else if (kind == "RandK") {
    spec = CompressorSpec::rand_k(k);
  } else if (kind == "URandK") {
    spec = CompressorSpec::urand_k(k);
  } else if (kind == "RandomQuant") {
    spec = CompressorSpec::random_quant(s);
  } else if (kind == "Identity") {
    spec = CompressorSpec::identity();
  } else if (kind == "SharedRandSparsifier") {
    spec = CompressorSpec::shared_sparsifier(omega, rescale);
  } else {
    throw ValidationError(w + ".kind: unknown compressor '" + kind + "'");
  }
  return scaled ? scale_to_contractive(spec) : spec;
}

AlgorithmKind parse_kind(const std::string& name) {
  if (name == "NEOLITHIC") return AlgorithmKind::kNeolithic;
  if (name == "NEOLITHIC_MULTISTAGE") return AlgorithmKind::kNeolithicMultistage;
  if (name == "QSGD") return AlgorithmKind::kQsgd;
  if (name == "MEM_SGD") return AlgorithmKind::kMemSgd;
  if (name == "DOUBLE_SQUEEZE") return AlgorithmKind::kDoubleSqueeze;
  if (name == "EF21_SGD") return AlgorithmKind::kEf21Sgd;
  throw ValidationError("unknown algorithm '" + name + "'");
}

BaselineKind to_baseline(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::kQsgd: return BaselineKind::kQsgd;
    case AlgorithmKind::kMemSgd: return BaselineKind::kMemSgd;
    case AlgorithmKind::kDoubleSqueeze: return BaselineKind::kDoubleSqueeze;
    case AlgorithmKind::kEf21Sgd: return BaselineKind::kEf21Sgd;
    default: break;
  }
  throw std::logic_error("not a baseline");
}

TunedHyper parse_hyper(const json& obj, const std::string& w, AlgorithmConfig* alg) {
  require_keys(obj, w, {"schedule", "R", "p", "c1", "eta0", "c2", "gamma0", "eps_rel"});
  TunedHyper h;
  read(obj, "R", w, h.R);
  read(obj, "p", w, h.p);
  read(obj, "c1", w, h.c1);
  read(obj, "eta0", w, h.eta0);
  read(obj, "c2", w, h.c2);
  read(obj, "gamma0", w, h.gamma0);
  if (alg) {
    read(obj, "schedule", w, alg->schedule);
    read(obj, "eps_rel", w, alg->eps_rel);
  } else if (obj.contains("schedule") || obj.contains("eps_rel") || obj.contains("R")) {
    throw ValidationError(w + ": R, schedule and eps_rel are not sweep parameters");
  }
  if (h.R < 1) throw ValidationError(w + ".R must be >= 1");
  if (!(h.p > 0.0)) throw ValidationError(w + ".p must be > 0");
  if (!(h.c1 > 0.0) || !(h.eta0 > 0.0)) throw ValidationError(w + ": c1 and eta0 must be > 0");
  if (!(h.c2 >= 0.0)) throw ValidationError(w + ".c2 must be >= 0");
  if (!(h.gamma0 > 0.0) || h.gamma0 > h.p) throw ValidationError(w + ": need 0 < gamma0 <= p");
  return h;
}

OracleConfig parse_oracle(const json& obj, int d) {
  require_keys(obj, "oracle", {"sigma", "scale"});
  if (obj.contains("sigma") && obj.contains("scale")) {
    throw ValidationError("oracle: give sigma or scale, not both");
  }
  OracleConfig oc;
  if (obj.contains("scale")) {
    double scale = 0.0;
    read(obj, "scale", "oracle", scale);
    oc = OracleConfig::from_scale(scale, d);
  } else {
    read(obj, "sigma", "oracle", oc.sigma);
  }
  if (!(oc.sigma >= 0.0)) throw ValidationError("oracle: sigma must be >= 0");
  return oc;
}

// Dimension the oracle scale refers to before the problem is built.
int nominal_dim(const ProblemConfig& p) { return p.d > 0 ? p.d : 1; }

}  // namespace

ProblemInstance build_problem(const ProblemConfig& cfg) {
  if (cfg.type == "least_squares") {
    return gen_least_squares({cfg.n, cfg.M, cfg.d, cfg.cond, cfg.het_scale, cfg.noise_b, cfg.seed});
  }
  if (cfg.type == "logistic") {
    return gen_logistic({cfg.n, cfg.M, cfg.d, cfg.cond, cfg.het_scale, cfg.seed, cfg.tol});
  }
  ChainParams cp;
  cp.L = cfg.L;
  cp.mu = cfg.mu;
  cp.n = cfg.n;
  cp.d = cfg.d;
  cp.Delta_x = cfg.Delta_x;
  cp.Delta_f = cfg.Delta_f;
  if (cfg.type == "chain_sc") {
    cp.kind = ChainKind::kStronglyConvex;
  } else if (cfg.type == "chain_gc") {
    cp.kind = ChainKind::kNesterov;
  } else if (cfg.type == "chain_nc") {
    cp.kind = ChainKind::kPsiPhi;
  } else {
    throw ValidationError("problem.type: unknown '" + cfg.type + "'");
  }
  return build_chain(cp).problem;
}

std::string apply_overrides(const std::string& json_text, const std::vector<std::string>& sets) {
  json doc = parse_json(json_text);
  for (const auto& item : sets) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("override '" + item + "' is not key=value");
    }
    const std::string path = item.substr(0, eq);
    const std::string raw = item.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::parse_error&) {
      value = raw;  // bare strings need no quotes
    }
    json* node = &doc;
    std::stringstream ss(path);
    std::string seg;
    std::vector<std::string> segs;
    while (std::getline(ss, seg, '.')) segs.push_back(seg);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto& s = segs[i];
      if (s.empty()) throw ValidationError("override '" + item + "': empty path segment");
      const bool last = i + 1 == segs.size();
      if (node->is_array()) {
        char* end = nullptr;
        const unsigned long idx = std::strtoul(s.c_str(), &end, 10);
        if (*end != '\0' || idx >= node->size()) {
          throw ValidationError("override '" + item + "': bad array index '" + s + "'");
        }
        node = &(*node)[idx];
      } else if (node->is_object()) {
        if (!last && !node->contains(s)) (*node)[s] = json::object();
        node = &(*node)[s];
      } else {
        throw ValidationError("override '" + item + "': '" + s + "' is not inside an object");
      }
    }
    *node = value;
  }
  return doc.dump();
}

ExperimentConfig parse_experiment(const std::string& json_text) {
  const json doc = parse_json(json_text);
  require_keys(doc, "config",
               {"id", "problem", "oracle", "budget_T", "trials", "master_seed", "record_every",
                "algorithms", "output"});
  for (const char* key : {"problem", "oracle", "budget_T", "algorithms"}) {
    if (!doc.contains(key)) throw ValidationError(std::string("config: missing '") + key + "'");
  }
  ExperimentConfig cfg;
  read(doc, "id", "config", cfg.id);
  cfg.problem = parse_problem(doc.at("problem"));
  cfg.oracle = parse_oracle(doc.at("oracle"), nominal_dim(cfg.problem));
  read(doc, "budget_T", "config", cfg.budget_T);
  read(doc, "trials", "config", cfg.trials);
  read(doc, "master_seed", "config", cfg.master_seed);
  read(doc, "record_every", "config", cfg.record_every);
  read(doc, "output", "config", cfg.output);
  if (cfg.output.empty()) cfg.output = cfg.id + ".csv";
  if (cfg.budget_T < 0) throw ValidationError("budget_T must be >= 0");
  if (cfg.trials < 1) throw ValidationError("trials must be >= 1");
  if (cfg.record_every < 1) throw ValidationError("record_every must be >= 1");

  const auto& algs = doc.at("algorithms");
  if (!algs.is_array() || algs.empty()) throw ValidationError("algorithms: expected a non-empty list");
  std::set<std::string> labels;
  for (std::size_t a = 0; a < algs.size(); ++a) {
    const std::string w = "algorithms." + std::to_string(a);
    const auto& obj = algs[a];
    require_keys(obj, w, {"name", "label", "compressor", "hyper"});
    AlgorithmConfig alg;
    std::string name;
    read(obj, "name", w, name);
    alg.kind = parse_kind(name);
    alg.label = name;
    read(obj, "label", w, alg.label);
    if (alg.label.empty() || alg.label.find_first_of(",\n\t\"") != std::string::npos) {
      throw ValidationError(w + ".label must be non-empty and CSV-safe");
    }
    if (!labels.insert(alg.label).second) {
      throw ValidationError(w + ": duplicate label '" + alg.label + "'");
    }
    alg.compressor = obj.contains("compressor") ? parse_compressor(obj.at("compressor"), w + ".compressor")
                                                : CompressorSpec::identity();
    alg.hyper = parse_hyper(obj.contains("hyper") ? obj.at("hyper") : json::object(), w + ".hyper", &alg);
    if (alg.kind == AlgorithmKind::kNeolithic) {
      if (alg.schedule != "tuned" && alg.schedule != "theory") {
        throw ValidationError(w + ".hyper.schedule must be 'tuned' or 'theory'");
      }
      if (alg.schedule == "tuned") {
        if (alg.hyper.R > cfg.budget_T && cfg.budget_T > 0) {
          throw ValidationError(w + ": R exceeds the round budget");
        }
        if (cfg.budget_T % alg.hyper.R != 0) {
          throw ValidationError(w + ": budget_T must be a multiple of R");
        }
      }
    }
    if (alg.kind == AlgorithmKind::kNeolithicMultistage && !(alg.eps_rel > 0.0 && alg.eps_rel < 1.0)) {
      throw ValidationError(w + ".hyper.eps_rel must lie in (0, 1)");
    }
    cfg.algorithms.push_back(std::move(alg));
  }
  return cfg;
}

// Running ------------------------------------------------------------------------

namespace {

ScheduleInputs schedule_inputs(const ProblemInstance& problem, const OracleConfig& oracle) {
  ScheduleInputs in;
  in.L = problem.L;
  in.mu = problem.mu;
  in.sigma = oracle.sigma;
  in.n = problem.n;
  in.G_star = problem.G_star;
  in.Delta_x = problem.Delta_x;
  in.Delta_f = problem.Delta_f;
  if (problem.has_reference()) {
    in.g0 = problem.gap(problem.x0) + 25.0 / 81.0 * problem.mu * problem.Delta_x;
  }
  return in;
}

// Largest K with K * R(K) <= T for the generally convex builder.
NeolithicHyper fit_gc_schedule(const ScheduleInputs& in, const CompressorClass& cls, long T) {
  auto fits = [&](long K) {
    const auto h = schedule_gc(in, K, cls);
    return K * static_cast<long>(h.R) <= T;
  };
  if (T < 1 || !fits(1)) throw ValidationError("theory schedule: budget too small for one iteration");
  long lo = 1;
  long hi = T;
  while (lo < hi) {
    const long mid = lo + (hi - lo + 1) / 2;
    if (fits(mid)) lo = mid; else hi = mid - 1;
  }
  return schedule_gc(in, lo, cls);
}

Trajectory run_cell(const ExperimentConfig& cfg, const AlgorithmConfig& alg,
                    const ProblemInstance& problem, int trial) {
  RunContext ctx;
  ctx.problem = &problem;
  ctx.oracle = cfg.oracle;
  ctx.specs = {alg.compressor};
  ctx.master_seed = cfg.master_seed;
  ctx.scope = alg.label;
  ctx.trial = static_cast<std::uint64_t>(trial);
  RunOptions opts;
  opts.record_every = cfg.record_every;
  const long T = cfg.budget_T;
  const CompressorClass cls = claimed_class(alg.compressor, problem.d);
  // The strongly convex builders need a contractive operator.
  auto contractive_ctx = [&]() {
    RunContext c = ctx;
    if (!cls.contractive()) c.specs = {scale_to_contractive(alg.compressor)};
    return c;
  };

  switch (alg.kind) {
    case AlgorithmKind::kNeolithic: {
      if (alg.schedule == "tuned") {
        NeolithicHyper h;
        h.R = alg.hyper.R;
        h.K = T / alg.hyper.R;
        h.p = alg.hyper.p;
        h.eta = lr_power_schedule(alg.hyper.c1, problem.L, alg.hyper.eta0, alg.hyper.c2);
        h.gamma = {alg.hyper.gamma0, 1.0, alg.hyper.c2};
        return run_neolithic(ctx, h, opts);
      }
      const ScheduleInputs in = schedule_inputs(problem, cfg.oracle);
      if (T == 0) {
        NeolithicHyper h;
        return run_neolithic(ctx, h, opts);
      }
      if (problem.convex && problem.mu > 0.0) {
        return run_neolithic(contractive_ctx(), schedule_sc_single(in, cls, T), opts);
      }
      if (problem.convex) return run_neolithic(ctx, fit_gc_schedule(in, cls, T), opts);
      return run_neolithic(ctx, schedule_nc(in, T, cls), opts);
    }
    case AlgorithmKind::kNeolithicMultistage: {
      if (!(problem.convex && problem.mu > 0.0) || !problem.has_reference()) {
        throw ValidationError(alg.label + ": multi-stage runs need a strongly convex problem");
      }
      const ScheduleInputs in = schedule_inputs(problem, cfg.oracle);
      const double eps = alg.eps_rel * problem.gap(problem.x0);
      const StagePlan plan = plan_multistage(in, cls, eps);
      return run_multistage(contractive_ctx(), plan, opts, T).trajectory;
    }
    default: {
      const auto lr = lr_power_schedule(alg.hyper.c1, problem.L, alg.hyper.eta0, alg.hyper.c2);
      return run_baseline(to_baseline(alg.kind), ctx, lr, T, opts);
    }
  }
}

// Runs task(i) for i in [0, count) on up to `jobs` threads. The first
// exception (lowest index) is rethrown after all threads finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(std::max(jobs, 1), count);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs) {
  if (cfg.algorithms.empty()) throw ValidationError("experiment has no algorithms");
  const ProblemInstance problem = build_problem(cfg.problem);
  for (const auto& alg : cfg.algorithms) validate(alg.compressor, problem.d);

  const std::size_t n_alg = cfg.algorithms.size();
  const std::size_t cells = n_alg * static_cast<std::size_t>(cfg.trials);
  std::vector<Trajectory> trajectories(cells);
  parallel_for(cells, jobs, [&](std::size_t c) {
    const auto& alg = cfg.algorithms[c / cfg.trials];
    const int trial = static_cast<int>(c % cfg.trials);
    trajectories[c] = run_cell(cfg, alg, problem, trial);
  });

  ExperimentResult result;
  for (std::size_t c = 0; c < cells; ++c) {
    const auto& alg = cfg.algorithms[c / cfg.trials];
    const int trial = static_cast<int>(c % cfg.trials);
    auto& traj = trajectories[c];
    if (!traj.diverged && !traj.ledger.balanced(traj.rounds)) {
      throw std::logic_error("ledger mismatch for " + alg.label + " trial " + std::to_string(trial));
    }
    if (traj.rounds > cfg.budget_T) {
      throw std::logic_error(alg.label + " exceeded the round budget");
    }
    for (const auto& [round, value] : traj.records) {
      result.rows.push_back({alg.label, trial, round, traj.metric, value});
    }
    if (traj.diverged) {
      const long last = traj.records.empty() ? 0 : traj.records.back().first;
      result.rows.push_back({alg.label, trial, last + 1, traj.metric,
                             std::numeric_limits<double>::infinity()});
    }
    result.cells.push_back({alg.label, trial, traj.rounds, traj.diverged, traj.diagnostic,
                            traj.ledger, traj.notes});
  }
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.algorithm, a.trial, a.comm_round) < std::tie(b.algorithm, b.trial, b.comm_round);
  });
  return result;
}

// CSV ------------------------------------------------------------------------------

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : rows) {
    out += r.algorithm;
    out += ',' + std::to_string(r.trial) + ',' + std::to_string(r.comm_round) + ',';
    out += metric_name(r.metric);
    out += ',' + format_real(r.value) + '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, sep)) parts.push_back(cur);
  if (!line.empty() && line.back() == sep) parts.emplace_back();
  return parts;
}

double parse_real(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw ValidationError("not a number: '" + s + "'");
  return v;
}

long parse_long(const std::string& s) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw ValidationError("not an integer: '" + s + "'");
  return v;
}

}  // namespace

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line) || line != kMetricsHeader) {
    throw ValidationError("metrics CSV: header must be exactly '" + std::string(kMetricsHeader) + "'");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 5) throw ValidationError("metrics CSV: expected 5 fields in '" + line + "'");
    MetricsRow r;
    r.algorithm = f[0];
    r.trial = static_cast<int>(parse_long(f[1]));
    r.comm_round = parse_long(f[2]);
    if (f[3] == metric_name(Metric::kFGap)) {
      r.metric = Metric::kFGap;
    } else if (f[3] == metric_name(Metric::kGradNormSq)) {
      r.metric = Metric::kGradNormSq;
    } else {
      throw ValidationError("metrics CSV: unknown metric '" + f[3] + "'");
    }
    r.value = parse_real(f[4]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string run_log(const ExperimentConfig& cfg, const ExperimentResult& result,
                    const std::vector<std::string>& overrides) {
  std::ostringstream os;
  os << "experiment " << cfg.id << "\n";
  os << "problem " << cfg.problem.type << " seed " << cfg.problem.seed << "\n";
  os << "budget_T " << cfg.budget_T << " trials " << cfg.trials << " master_seed "
     << cfg.master_seed << "\n";
  for (const auto& o : overrides) os << "override " << o << "\n";
  for (const auto& alg : cfg.algorithms) {
    os << "algorithm " << alg.label << " compressor " << describe(alg.compressor) << "\n";
  }
  for (const auto& c : result.cells) {
    os << "cell " << c.algorithm << " trial " << c.trial << " rounds " << c.rounds;
    os << " scalar_cost " << c.ledger.scalar_cost << " bit_cost " << c.ledger.bit_cost;
    if (c.diverged) os << " DIVERGED " << c.diagnostic;
    os << "\n";
    if (c.trial == 0) {
      for (const auto& note : c.notes) os << "  note " << note << "\n";
    }
  }
  return os.str();
}

// Aggregation ---------------------------------------------------------------------------

std::map<std::string, Series> aggregate(const std::vector<MetricsRow>& rows, Statistic statistic) {
  // algorithm -> trial -> rows
  std::map<std::string, std::map<int, std::vector<const MetricsRow*>>> grouped;
  for (const auto& r : rows) grouped[r.algorithm][r.trial].push_back(&r);

  std::map<std::string, Series> out;
  for (const auto& [alg, trials] : grouped) {
    Series s;
    std::map<long, std::vector<double>> by_round;
    for (const auto& [trial, trial_rows] : trials) {
      const bool bad = std::any_of(trial_rows.begin(), trial_rows.end(),
                                   [](const MetricsRow* r) { return !std::isfinite(r->value); });
      if (bad) {
        ++s.diverged;
        continue;
      }
      ++s.trials_used;
      for (const auto* r : trial_rows) by_round[r->comm_round].push_back(r->value);
    }
    for (auto& [round, values] : by_round) {
      // Sorting makes both statistics independent of trial order.
      std::sort(values.begin(), values.end());
      double v;
      if (statistic == Statistic::kMean) {
        v = pairwise_mean(std::span<const double>(values));
      } else {
        const std::size_t m = values.size();
        v = m % 2 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
      }
      s.rounds.push_back(round);
      s.values.push_back(v);
    }
    out.emplace(alg, std::move(s));
  }
  return out;
}

double to_db(double value) {
  constexpr double kFloor = -160.0;
  if (!(value > 0.0)) return kFloor;
  return std::max(kFloor, 10.0 * std::log10(value));
}

// R sweep -------------------------------------------------------------------------------

SweepConfig parse_sweep(const std::string& json_text) {
  const json doc = parse_json(json_text);
  require_keys(doc, "sweep",
               {"id", "problem", "heterogeneity", "noise", "compressors", "R_values", "hyper",
                "budget_T", "trials", "master_seed", "output"});
  for (const char* key : {"problem", "heterogeneity", "noise", "compressors", "R_values", "hyper"}) {
    if (!doc.contains(key)) throw ValidationError(std::string("sweep: missing '") + key + "'");
  }
  SweepConfig cfg;
  read(doc, "id", "sweep", cfg.id);
  cfg.problem = parse_problem(doc.at("problem"));
  if (cfg.problem.type != "least_squares" && cfg.problem.type != "logistic") {
    throw ValidationError("sweep: problem must be least_squares or logistic");
  }
  auto read_levels = [&](const char* key, std::map<std::string, double>& out) {
    const auto& obj = doc.at(key);
    if (!obj.is_object() || obj.empty()) throw ValidationError(std::string("sweep.") + key + ": expected a non-empty object");
    for (const auto& item : obj.items()) {
      if (!item.value().is_number() || !(item.value().get<double>() >= 0.0)) {
        throw ValidationError(std::string("sweep.") + key + "." + item.key() + ": expected a number >= 0");
      }
      out[item.key()] = item.value().get<double>();
    }
  };
  read_levels("heterogeneity", cfg.heterogeneity);
  read_levels("noise", cfg.noise);
  const auto& comps = doc.at("compressors");
  if (!comps.is_array() || comps.empty()) throw ValidationError("sweep.compressors: expected a non-empty list");
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const std::string w = "sweep.compressors." + std::to_string(c);
    json spec = comps[c];
    if (!spec.is_object()) throw ValidationError(w + ": expected an object");
    std::string label;
    read(spec, "label", w, label);
    spec.erase("label");
    NamedCompressor nc{label, parse_compressor(spec, w)};
    if (nc.label.empty()) nc.label = describe(nc.spec);
    if (nc.label.find_first_of(",\n\t\"") != std::string::npos) throw ValidationError(w + ".label must be CSV-safe");
    cfg.compressors.push_back(std::move(nc));
  }
  const auto& rs = doc.at("R_values");
  if (!rs.is_array() || rs.empty()) throw ValidationError("sweep.R_values: expected a non-empty list");
  for (const auto& r : rs) {
    if (!r.is_number_integer() || r.get<long>() < 1) throw ValidationError("sweep.R_values: entries must be integers >= 1");
    cfg.R_values.push_back(r.get<int>());
  }
  cfg.hyper = parse_hyper(doc.at("hyper"), "sweep.hyper", nullptr);
  read(doc, "budget_T", "sweep", cfg.budget_T);
  read(doc, "trials", "sweep", cfg.trials);
  read(doc, "master_seed", "sweep", cfg.master_seed);
  read(doc, "output", "sweep", cfg.output);
  if (cfg.output.empty()) cfg.output = cfg.id + ".csv";
  if (cfg.budget_T < 1) throw ValidationError("sweep.budget_T must be >= 1");
  if (cfg.trials < 1) throw ValidationError("sweep.trials must be >= 1");
  for (int R : cfg.R_values) {
    if (R > cfg.budget_T) throw ValidationError("sweep: R=" + std::to_string(R) + " exceeds the round budget");
    if (cfg.budget_T % R != 0) throw ValidationError("sweep: budget_T must be a multiple of every R");
  }
  return cfg;
}

std::vector<SweepRow> sweep_R(const SweepConfig& cfg, int jobs) {
  struct Cell {
    std::string het;
    std::string noise;
    std::size_t comp;
    int R;
    int trial;
  };
  std::map<std::string, ProblemInstance> problems;
  for (const auto& [label, scale] : cfg.heterogeneity) {
    ProblemConfig pc = cfg.problem;
    pc.het_scale = scale;
    problems.emplace(label, build_problem(pc));
  }
  const int d = problems.begin()->second.d;
  for (const auto& c : cfg.compressors) validate(c.spec, d);

  std::vector<Cell> cells;
  for (const auto& [het, unused_h] : cfg.heterogeneity) {
    for (const auto& [noise, unused_n] : cfg.noise) {
      for (std::size_t c = 0; c < cfg.compressors.size(); ++c) {
        for (int R : cfg.R_values) {
          for (int t = 0; t < cfg.trials; ++t) cells.push_back({het, noise, c, R, t});
        }
      }
    }
  }
  std::vector<SweepRow> rows(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const Cell& cell = cells[i];
    const auto& problem = problems.at(cell.het);
    const auto& comp = cfg.compressors[cell.comp];
    RunContext ctx;
    ctx.problem = &problem;
    ctx.oracle = OracleConfig::from_scale(cfg.noise.at(cell.noise), problem.d);
    ctx.specs = {comp.spec};
    ctx.master_seed = cfg.master_seed;
    // Every setting gets its own streams.
    ctx.scope = "NEOLITHIC/" + comp.label + "/R=" + std::to_string(cell.R) + "/" + cell.het + "/" +
                cell.noise;
    ctx.trial = static_cast<std::uint64_t>(cell.trial);
    NeolithicHyper h;
    h.R = cell.R;
    h.K = cfg.budget_T / cell.R;
    h.p = cfg.hyper.p;
    h.eta = lr_power_schedule(cfg.hyper.c1, problem.L, cfg.hyper.eta0, cfg.hyper.c2);
    h.gamma = {cfg.hyper.gamma0, 1.0, cfg.hyper.c2};
    const Trajectory traj = run_neolithic(ctx, h, {});
    if (!traj.diverged && !traj.ledger.balanced(traj.rounds)) {
      throw std::logic_error("ledger mismatch in sweep cell " + ctx.scope);
    }
    // Records stop before a divergence, so the best value is always finite.
    double best = std::numeric_limits<double>::infinity();
    for (const auto& rec : traj.records) best = std::min(best, rec.second);
    rows[i] = {cell.R, comp.label, cell.het, cell.noise, cell.trial, best, traj.diverged};
  });
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.R) + ',' + r.compressor + ',' + r.heterogeneity + ',' + r.noise + ',' +
           std::to_string(r.trial) + ',' + format_real(r.best) + ',' + (r.diverged ? "1" : "0") + '\n';
  }
  return out;
}

// Files and manifest -----------------------------------------------------------------------

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + file.string());
}

std::vector<ManifestEntry> write_manifest(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ManifestEntry> entries;
  std::string text;
  for (const auto& f : files) {
    const std::string body = read_text(f);
    const long lines = static_cast<long>(std::count(body.begin(), body.end(), '\n'));
    ManifestEntry e{f.stem().string(), f.filename().string(), std::max(0L, lines - 1)};
    text += e.id + '\t' + e.path + '\t' + std::to_string(e.rows) + '\n';
    entries.push_back(std::move(e));
  }
  write_text(dir / "manifest.tsv", text);
  return entries;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& file) {
  std::stringstream ss(read_text(file));
  std::string line;
  std::vector<ManifestEntry> entries;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 3) throw ValidationError("manifest: expected 3 tab-separated fields in '" + line + "'");
    entries.push_back({f[0], f[1], parse_long(f[2])});
  }
  return entries;
}

}  // namespace ccopt
