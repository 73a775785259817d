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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ccopt {

namespace {

constexpr double kSqrtE = 1.6487212707001282;  // sqrt(e)

// Quadratic chain split: the first group holds [x]_1^2 - 2 lambda [x]_1 and the
// pairs (2,3), (4,5), ...; the second group holds (1,2), (3,4), .... Both add
// mu/2 ||x||^2. Coordinate d+1 is pinned at zero, so the last pair degrades
// to a square.
class QuadraticChainObjectives final : public LocalObjectives {
 public:
  QuadraticChainObjectives(int n, int d, double mu, double c, double lambda)
      : n_(n), d_(d), mu_(mu), c_(c), lambda_(lambda) {}

  int workers() const override { return n_; }
  int dim() const override { return d_; }

  double value(int i, const DenseVector& x) const override {
    const bool first = i < n_ / 2;
    double chain = first ? x(0) * x(0) - 2.0 * lambda_ * x(0) : 0.0;
    for (int a = first ? 1 : 0; a < d_; a += 2) {
      const double diff = x(a) - (a + 1 < d_ ? x(a + 1) : 0.0);
      chain += diff * diff;
    }
    return 0.5 * mu_ * x.squaredNorm() + c_ * chain;
  }

  void gradient(int i, const DenseVector& x, DenseVector& out) const override {
    const bool first = i < n_ / 2;
    out = mu_ * x;
    if (first) out(0) += c_ * (2.0 * x(0) - 2.0 * lambda_);
    for (int a = first ? 1 : 0; a < d_; a += 2) {
      const double diff = 2.0 * c_ * (x(a) - (a + 1 < d_ ? x(a + 1) : 0.0));
      out(a) += diff;
      if (a + 1 < d_) out(a + 1) -= diff;
    }
  }

  // Hessian and linear coefficient of worker group `first`.
  std::pair<DenseMatrix, DenseVector> quadratic(bool first) const {
    DenseMatrix H = mu_ * DenseMatrix::Identity(d_, d_);
    DenseVector b = DenseVector::Zero(d_);
    if (first) {
      H(0, 0) += 2.0 * c_;
      b(0) = 2.0 * c_ * lambda_;
    }
    for (int a = first ? 1 : 0; a < d_; a += 2) {
      H(a, a) += 2.0 * c_;
      if (a + 1 < d_) {
        H(a + 1, a + 1) += 2.0 * c_;
        H(a, a + 1) -= 2.0 * c_;
        H(a + 1, a) -= 2.0 * c_;
      }
    }
    return {H, b};
  }

 private:
  int n_;
  int d_;
  double mu_;
  double c_;
  double lambda_;
};

class PsiPhiObjectives final : public LocalObjectives {
 public:
  PsiPhiObjectives(int n, int d, double L, double lambda)
      : n_(n), d_(d), L_(L), lambda_(lambda) {}

  int workers() const override { return n_; }
  int dim() const override { return d_; }

  double value(int i, const DenseVector& x) const override {
    return L_ * lambda_ * lambda_ / kChainSmoothness * chain_value(part(i), x / lambda_);
  }

  void gradient(int i, const DenseVector& x, DenseVector& out) const override {
    out = (L_ * lambda_ / kChainSmoothness) * chain_gradient(part(i), x / lambda_);
  }

 private:
  ChainPart part(int i) const { return i < n_ / 2 ? ChainPart::kFirst : ChainPart::kSecond; }

  int n_;
  int d_;
  double L_;
  double lambda_;
};

class BernoulliObjectives final : public LocalObjectives {
 public:
  BernoulliObjectives(int n, double v, double L, double Delta_x, double sigma_p)
      : n_(n), center_(v * std::sqrt(Delta_x)), L_(L), slope_(sigma_p) {}

  int workers() const override { return n_; }
  int dim() const override { return 1; }

  double value(int, const DenseVector& x) const override {
    const double s = x(0) - center_;
    const double knee = slope_ / L_;
    if (s > knee) return slope_ * s - slope_ * slope_ / (2.0 * L_);
    if (s < -knee) return -slope_ * s - slope_ * slope_ / (2.0 * L_);
    return 0.5 * L_ * s * s;
  }

  void gradient(int, const DenseVector& x, DenseVector& out) const override {
    const double s = x(0) - center_;
    const double knee = slope_ / L_;
    out.resize(1);
    out(0) = s > knee ? slope_ : (s < -knee ? -slope_ : L_ * s);
  }

  // +-sigma with P(+sigma) = 1/2 + g / (2 sigma).
  void sample(int, const DenseVector& exact_gradient, double sigma, RandomStream& rng,
              DenseVector& out) const override {
    const double g = exact_gradient(0);
    if (std::abs(g) > sigma) {
      throw ValidationError("Bernoulli oracle needs |gradient| <= sigma");
    }
    out.resize(1);
    out(0) = rng.uniform() < 0.5 + g / (2.0 * sigma) ? sigma : -sigma;
  }

 private:
  int n_;
  double center_;
  double L_;
  double slope_;
};

double quadratic_min(const DenseMatrix& H, const DenseVector& b) {
  const DenseVector x = H.completeOrthogonalDecomposition().solve(b);
  return 0.5 * x.dot(H * x) - b.dot(x);
}

void check_common(const ChainParams& p) {
  if (p.n < 2 || p.n % 2 != 0) throw ValidationError("chain: n must be even and >= 2");
  if (!(p.L > 0.0) || !std::isfinite(p.L)) throw ValidationError("chain: L must be > 0");
}

ChainInstance build_quadratic_chain(const ChainParams& params) {
  ChainInstance out;
  out.params = params;
  auto& prm = out.params;
  double mu = 0.0;
  if (prm.kind == ChainKind::kStronglyConvex) {
    mu = prm.mu;
    if (!(mu > 0.0) || !(prm.L / mu > 1.0)) {
      throw ValidationError("strongly convex chain needs kappa = L/mu > 1");
    }
    const double root = std::sqrt(prm.L / mu);
    out.q = (root - 1.0) / (root + 1.0);
    out.lambda = std::sqrt((1.0 - out.q * out.q) * prm.Delta_x / (out.q * out.q));
    if (prm.d == 0) prm.d = strongly_convex_chain_dim(prm.L / mu);
  } else {
    if (prm.d == 0) throw ValidationError("Nesterov chain needs an explicit d");
    out.lambda = std::sqrt(3.0 * prm.Delta_x / prm.d);
  }
  if (prm.d < 2) throw ValidationError("chain: d must be >= 2");
  if (!(prm.Delta_x > 0.0)) throw ValidationError("chain: Delta_x must be > 0");

  const int d = prm.d;
  const double c = (prm.L - mu) / 4.0;
  auto obj = std::make_shared<QuadraticChainObjectives>(prm.n, d, mu, c, out.lambda);

  ProblemInstance& p = out.problem;
  p.name = prm.kind == ChainKind::kStronglyConvex ? "chain_strongly_convex" : "chain_nesterov";
  p.objectives = obj;
  p.n = prm.n;
  p.d = d;
  p.L = prm.L;
  p.mu = mu;
  p.convex = true;
  p.x0 = DenseVector::Zero(d);

  // Global objective: mu/2 ||x||^2 + c/2 (x^T M x - 2 lambda [x]_1).
  DenseMatrix H = mu * DenseMatrix::Identity(d, d);
  for (int j = 0; j < d; ++j) {
    H(j, j) += 2.0 * c;
    if (j + 1 < d) {
      H(j, j + 1) -= c;
      H(j + 1, j) -= c;
    }
  }
  DenseVector b = DenseVector::Zero(d);
  b(0) = c * out.lambda;
  p.x_star = H.ldlt().solve(b);
  p.f_star = 0.5 * p.x_star.dot(H * p.x_star) - b.dot(p.x_star);
  p.hessian = H;

  const auto [H1, b1] = obj->quadratic(true);
  const auto [H2, b2] = obj->quadratic(false);
  const double f1 = quadratic_min(H1, b1);
  const double f2 = quadratic_min(H2, b2);
  p.f_i_star.assign(prm.n, f2);
  std::fill(p.f_i_star.begin(), p.f_i_star.begin() + prm.n / 2, f1);
  p.G_star = std::max(0.0, p.f_star - 0.5 * (f1 + f2));
  p.Delta_x = p.x_star.squaredNorm();
  p.Delta_f = p.gap(p.x0);
  return out;
}

}  // namespace

int strongly_convex_chain_dim(double kappa) {
  if (!(kappa > 1.0)) throw ValidationError("strongly convex chain needs kappa > 1");
  const double root = std::sqrt(kappa);
  const double q = (root - 1.0) / (root + 1.0);
  // lambda^2 q^{2(d+1)} / (1 - q^2) = q^{2d} Delta_x, so the tail condition is
  // q^{2d} < 1e-16.
  const double d = std::log(1e-16) / (2.0 * std::log(q));
  return std::max(2, static_cast<int>(std::floor(d)) + 1);
}

double nesterov_truncated_optimum(double L, double lambda, int k) {
  return -lambda * lambda * L * k / (8.0 * (k + 1));
}

ChainInstance build_chain(const ChainParams& params) {
  check_common(params);
  if (params.kind != ChainKind::kPsiPhi) return build_quadratic_chain(params);

  ChainInstance out;
  out.params = params;
  const int d = params.d;
  if (d < 2) throw ValidationError("chain: d must be >= 2");
  if (!(params.Delta_f > 0.0)) throw ValidationError("chain: Delta_f must be > 0");
  out.lambda = std::sqrt(kChainSmoothness * params.Delta_f / (params.L * kChainRange * d));

  ProblemInstance& p = out.problem;
  p.name = "chain_psi_phi";
  p.objectives = std::make_shared<PsiPhiObjectives>(params.n, d, params.L, out.lambda);
  p.n = params.n;
  p.d = d;
  p.L = params.L;
  p.mu = 0.0;
  p.convex = false;
  p.x0 = DenseVector::Zero(d);
  // No closed-form minimizer: f* and the local minima are unknown, G* is
  // reported as 0 and Delta_f is the construction's bound.
  p.f_star = std::numeric_limits<double>::quiet_NaN();
  p.G_star = 0.0;
  p.Delta_f = params.Delta_f;
  return out;
}

PsiPhi psi_phi(double z) {
  PsiPhi r;
  if (z > 0.5) {
    const double s = 2.0 * z - 1.0;
    r.psi = std::exp(1.0 - 1.0 / (s * s));
    r.dpsi = r.psi * 4.0 / (s * s * s);
  }
  r.phi = kSqrtE * std::sqrt(std::numbers::pi / 2.0) * std::erfc(-z / std::numbers::sqrt2);
  r.dphi = kSqrtE * std::exp(-0.5 * z * z);
  return r;
}

namespace {

double head_weight(ChainPart part) {
  return part == ChainPart::kFull ? 1.0 : (part == ChainPart::kFirst ? 2.0 : 0.0);
}

// Weight of the link between 0-based coordinates a and a+1.
double link_weight(ChainPart part, int a) {
  if (part == ChainPart::kFull) return 1.0;
  const bool odd_link = a % 2 == 0;  // 1-based index a+1 is odd
  return (part == ChainPart::kSecond) == odd_link ? 2.0 : 0.0;
}

}  // namespace

double chain_value(ChainPart part, const DenseVector& x) {
  const int d = static_cast<int>(x.size());
  const double psi_one = psi_phi(1.0).psi;
  double total = -head_weight(part) * psi_one * psi_phi(x(0)).phi;
  for (int a = 0; a + 1 < d; ++a) {
    const double w = link_weight(part, a);
    if (w == 0.0) continue;
    total += w * (psi_phi(-x(a)).psi * psi_phi(-x(a + 1)).phi -
                  psi_phi(x(a)).psi * psi_phi(x(a + 1)).phi);
  }
  return total;
}

DenseVector chain_gradient(ChainPart part, const DenseVector& x) {
  const int d = static_cast<int>(x.size());
  std::vector<PsiPhi> pos(d), neg(d);
  for (int j = 0; j < d; ++j) {
    pos[j] = psi_phi(x(j));
    neg[j] = psi_phi(-x(j));
  }
  DenseVector g = DenseVector::Zero(d);
  g(0) = -head_weight(part) * psi_phi(1.0).psi * pos[0].dphi;
  for (int a = 0; a + 1 < d; ++a) {
    const double w = link_weight(part, a);
    if (w == 0.0) continue;
    g(a) += w * (-neg[a].dpsi * neg[a + 1].phi - pos[a].dpsi * pos[a + 1].phi);
    g(a + 1) += w * (-neg[a].psi * neg[a + 1].dphi - pos[a].psi * pos[a + 1].dphi);
  }
  return g;
}

CompressorSpec adversarial_sparsifier(double omega, bool contractive) {
  if (!(omega >= 0.0) || !std::isfinite(omega)) {
    throw ValidationError("adversarial sparsifier needs omega >= 0");
  }
  return CompressorSpec::shared_sparsifier(omega, !contractive);
}

std::vector<long> ProgTrace::increment_violations() const {
  std::vector<long> out;
  for (std::size_t t = 1; t < B.size(); ++t) {
    if (B[t] > B[t - 1] + 1) out.push_back(static_cast<long>(t));
  }
  return out;
}

TracedAlgorithm TracedAlgorithm::gradient_descent(double eta) {
  TracedAlgorithm a;
  a.neolithic = true;
  a.hyper.eta = PowerSchedule::constant(eta);
  return a;
}

TracedAlgorithm TracedAlgorithm::from_baseline(BaselineKind kind, double eta) {
  TracedAlgorithm a;
  a.neolithic = false;
  a.baseline = kind;
  a.lr = PowerSchedule::constant(eta);
  return a;
}

ProgTrace traced_run(const TracedAlgorithm& algorithm, const ProblemInstance& problem,
                     const CompressorSpec& spec, long T, std::uint64_t seed, std::uint64_t trial,
                     double sigma) {
  if (T < 0) throw ValidationError("traced_run: T must be >= 0");
  RunContext ctx;
  ctx.problem = &problem;
  ctx.specs = {spec};
  ctx.oracle.sigma = sigma;
  ctx.master_seed = seed;
  ctx.scope = "traced";
  ctx.trial = trial;

  ProgTrace trace;
  trace.query_prog.resize(problem.n);
  std::vector<int> round_max(T + 1, 0);
  RoundHooks hooks;
  hooks.on_query = [&](long round, int worker, const DenseVector& q) {
    trace.query_prog[worker].emplace_back(round, prog(q));
  };
  hooks.on_message = [&](long round, int, const CompressedMessage& msg) {
    if (round <= T) round_max[round] = std::max(round_max[round], prog(decompress(msg, problem.d)));
  };
  RunOptions options;
  options.record = false;
  options.hooks = &hooks;

  Trajectory traj;
  if (algorithm.neolithic) {
    NeolithicHyper h = algorithm.hyper;
    h.K = T / h.R;
    traj = run_neolithic(ctx, h, options);
  } else {
    traj = run_baseline(algorithm.baseline, ctx, algorithm.lr, T, options);
  }
  trace.diverged = traj.diverged;
  trace.B.assign(T + 1, 0);
  for (long t = 1; t <= T; ++t) trace.B[t] = std::max(trace.B[t - 1], round_max[t]);
  return trace;
}

ProgressTail progress_tail(const TracedAlgorithm& algorithm, const ProblemInstance& problem,
                           double omega, long T, int runs, std::uint64_t seed) {
  const CompressorSpec spec = adversarial_sparsifier(omega);
  ProgressTail out;
  out.runs = runs;
  out.threshold = std::numbers::e * static_cast<double>(T) / (1.0 + omega);
  double total = 0.0;
  for (int r = 0; r < runs; ++r) {
    const ProgTrace trace =
        traced_run(algorithm, problem, spec, T, seed, static_cast<std::uint64_t>(r));
    const int final_b = trace.B.back();
    total += final_b;
    if (final_b > out.threshold) ++out.exceed;
    out.increment_violations += static_cast<int>(trace.increment_violations().size());
  }
  out.frequency = runs > 0 ? static_cast<double>(out.exceed) / runs : 0.0;
  out.mean_final = runs > 0 ? total / runs : 0.0;
  return out;
}

BernoulliPair build_bernoulli_pair(double L, double Delta_x, double sigma, double p, int n) {
  if (!(L > 0.0) || !(Delta_x > 0.0) || !(sigma > 0.0) || n < 1) {
    throw ValidationError("Bernoulli pair needs L, Delta_x, sigma > 0 and n >= 1");
  }
  const double p_max = std::min(0.8, L * std::sqrt(Delta_x) / (2.0 * sigma));
  if (!(p >= 0.0) || p > p_max) {
    throw ValidationError("Bernoulli pair: p must lie in [0, " + std::to_string(p_max) + "]");
  }
  BernoulliPair out;
  out.p = p;
  out.oracle.sigma = sigma;
  for (double v : {1.0, -1.0}) {
    ProblemInstance inst;
    inst.name = v > 0 ? "bernoulli_plus" : "bernoulli_minus";
    inst.objectives = std::make_shared<BernoulliObjectives>(n, v, L, Delta_x, sigma * p);
    inst.n = n;
    inst.d = 1;
    inst.L = L;
    inst.mu = 0.0;
    inst.convex = true;
    inst.x0 = DenseVector::Zero(1);
    inst.x_star = DenseVector::Constant(1, v * std::sqrt(Delta_x));
    inst.f_star = 0.0;
    inst.f_i_star.assign(n, 0.0);
    inst.G_star = 0.0;
    inst.Delta_x = Delta_x;
    inst.Delta_f = inst.value(inst.x0);
    (v > 0 ? out.plus : out.minus) = std::move(inst);
  }
  return out;
}

}  // namespace ccopt
