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
#include <utility>
#include <vector>

namespace ccopt {

/// Smoothness and range constants of the scalar chain function h.
inline constexpr double kChainSmoothness = 152.0;  // L0
inline constexpr double kChainRange = 12.0;        // Delta0, per coordinate

enum class ChainKind { kStronglyConvex, kNesterov, kPsiPhi };

/// Zero-chain families split over two worker groups: workers [0, n/2) hold
/// the first component, [n/2, n) the second.
struct ChainParams {
  ChainKind kind = ChainKind::kNesterov;
  double L = 1.0;
  double mu = 0.0;       // strongly convex chain only
  int n = 2;             // even
  int d = 0;             // 0 picks the truncation automatically (strongly convex chain)
  double Delta_x = 1.0;  // convex chains: ||x0 - x*||^2 target
  double Delta_f = 1.0;  // psi/phi chain: f(0) - inf f bound
};

struct ChainInstance {
  ProblemInstance problem;
  ChainParams params;  // with d resolved
  double lambda = 0.0;
  double q = 0.0;  // strongly convex chain ratio (sqrt(kappa)-1)/(sqrt(kappa)+1)
};

/// Throws ValidationError for odd n, d < 2 or kappa <= 1 (strongly convex).
/// Quadratic chains are the tridiagonal objective restricted to the first d
/// coordinates, i.e. coordinate d+1 is pinned at zero.
ChainInstance build_chain(const ChainParams& params);

/// min over {x : prog(x) <= k} of the Nesterov chain objective.
double nesterov_truncated_optimum(double L, double lambda, int k);

/// Smallest d with lambda^2 sum_{j>d} q^{2j} < 1e-16 Delta_x, at least 2.
int strongly_convex_chain_dim(double kappa);

struct PsiPhi {
  double psi = 0.0;
  double dpsi = 0.0;
  double phi = 0.0;
  double dphi = 0.0;
};

/// psi vanishes on (-inf, 1/2]; phi is sqrt(e) times the Gaussian integral,
/// evaluated through erfc.
PsiPhi psi_phi(double z);

enum class ChainPart { kFull, kFirst, kSecond };

/// h (kFull), h1 (kFirst) or h2 (kSecond) and their gradients.
double chain_value(ChainPart part, const DenseVector& x);
DenseVector chain_gradient(ChainPart part, const DenseVector& x);

/// Shared-randomness scaled sparsifier; the contractive variant skips the
/// (1+omega) scaling.
CompressorSpec adversarial_sparsifier(double omega, bool contractive = false);

struct ProgTrace {
  /// B[t] for t = 0..T: largest prog over all messages received by round t.
  std::vector<int> B;
  /// Per worker: (round, prog of the query point) in query order.
  std::vector<std::vector<std::pair<long, int>>> query_prog;
  bool diverged = false;

  long T() const { return static_cast<long>(B.size()) - 1; }
  /// Rounds t with B[t] > B[t-1] + 1.
  std::vector<long> increment_violations() const;
};

struct TracedAlgorithm {
  bool neolithic = true;
  NeolithicHyper hyper;  // K is set to floor(T / R)
  BaselineKind baseline = BaselineKind::kQsgd;
  PowerSchedule lr;

  /// Full-gradient descent expressed as NEOLITHIC with gamma = p = R = 1.
  static TracedAlgorithm gradient_descent(double eta);
  static TracedAlgorithm from_baseline(BaselineKind kind, double eta);
};

/// Runs `algorithm` for T rounds with the same compressor on every worker,
/// reading prog of every query point and compressed message. Instrumentation
/// never changes the arithmetic.
ProgTrace traced_run(const TracedAlgorithm& algorithm, const ProblemInstance& problem,
                     const CompressorSpec& spec, long T, std::uint64_t seed,
                     std::uint64_t trial = 0, double sigma = 0.0);

struct ProgressTail {
  int runs = 0;
  int exceed = 0;       // runs with B[T] > e T / (1 + omega)
  double frequency = 0.0;
  double threshold = 0.0;
  double mean_final = 0.0;
  int increment_violations = 0;
};

/// Repeats traced_run with the adversarial sparsifier over independent trials
/// and counts how often progress beats the e T / (1 + omega) tail bound.
ProgressTail progress_tail(const TracedAlgorithm& algorithm, const ProblemInstance& problem,
                           double omega, long T, int runs, std::uint64_t seed);

/// One-dimensional pair f^{+1}, f^{-1} with a +-sigma Bernoulli oracle whose
/// mean is the gradient.
struct BernoulliPair {
  ProblemInstance plus;
  ProblemInstance minus;
  OracleConfig oracle;
  double p = 0.0;
};

/// Throws ValidationError unless 0 <= p <= min(4/5, L sqrt(Delta_x) / (2 sigma)).
BernoulliPair build_bernoulli_pair(double L, double Delta_x, double sigma, double p, int n = 1);

}  // namespace ccopt
