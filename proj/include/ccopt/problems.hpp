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

#include "ccopt/core.hpp"
#include "ccopt/random.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ccopt {

/// The n local objectives of a distributed problem.
class LocalObjectives {
 public:
  virtual ~LocalObjectives() = default;

  virtual int workers() const = 0;
  virtual int dim() const = 0;
  virtual double value(int i, const DenseVector& x) const = 0;
  virtual void gradient(int i, const DenseVector& x, DenseVector& out) const = 0;

  /// One stochastic sample given the exact local gradient. The default is
  /// additive isotropic Gaussian noise with E||noise||^2 = sigma^2.
  virtual void sample(int i, const DenseVector& exact_gradient, double sigma, RandomStream& rng,
                      DenseVector& out) const;
};

/// Stochastic oracle settings. sigma^2 bounds the per-query variance; the
/// Gaussian oracle uses a per-coordinate scale of sigma / sqrt(d).
struct OracleConfig {
  double sigma = 0.0;

  static OracleConfig from_scale(double scale, int d) { return {scale * std::sqrt(double(d))}; }
  double scale(int d) const { return sigma / std::sqrt(double(d)); }
};

struct ProblemInstance {
  std::string name;
  std::shared_ptr<const LocalObjectives> objectives;
  int n = 0;
  int d = 0;
  double L = 0.0;
  double mu = 0.0;
  bool convex = true;
  DenseVector x0;
  DenseVector x_star;  // empty when no reference optimum exists
  double f_star = 0.0;
  std::vector<double> f_i_star;
  double G_star = 0.0;
  double Delta_x = 0.0;
  double Delta_f = 0.0;
  /// Hessian of the global objective when it is quadratic. Optimality gaps
  /// are then evaluated as a quadratic form in x - x_star.
  std::optional<DenseMatrix> hessian;

  double value(const DenseVector& x) const;
  DenseVector gradient(const DenseVector& x) const;
  double local_value(int i, const DenseVector& x) const { return objectives->value(i, x); }
  DenseVector local_gradient(int i, const DenseVector& x) const;
  /// f(x) - f_star.
  double gap(const DenseVector& x) const;
  bool has_reference() const { return x_star.size() == d; }
};

/// Least-squares design: A has i.i.d. normal entries, then its singular
/// values are replaced by a log-uniform spectrum with ratio sqrt(cond).
struct LeastSquaresParams {
  int n = 30;
  int M = 100;
  int d = 10;
  double cond = 1.0;
  double het_scale = 0.1;
  double noise_b = 0.1;
  std::uint64_t seed = 0;
};

/// Local objectives 0.5/n * ||A_i x - b_i||^2.
ProblemInstance gen_least_squares(const LeastSquaresParams& params);

/// Least squares from explicit blocks (A_i, b_i).
ProblemInstance least_squares_from_blocks(std::vector<DenseMatrix> A, std::vector<DenseVector> b,
                                          std::string name = "least_squares");

struct LogisticParams {
  int n = 30;
  int M = 100;
  int d = 10;
  double cond = 1.0;
  double het_scale = 0.1;
  std::uint64_t seed = 0;
  double tol = 1e-10;
};

/// Local objectives mean_m ln(1 + exp(-b_m a_m^T x)) with labels b_m in {-1,1}.
ProblemInstance gen_logistic(const LogisticParams& params);

/// Logistic problem from explicit blocks.
ProblemInstance logistic_from_blocks(std::vector<DenseMatrix> A, std::vector<DenseVector> labels,
                                     double tol = 1e-10, bool local_minima = true,
                                     std::string name = "logistic");

struct ReferenceSolution {
  DenseVector x_star;
  double f_star = 0.0;
  std::vector<double> f_i_star;
};

/// Recomputes the reference optimum of a least-squares or logistic instance.
/// Throws NumericalError when the tolerance is not met.
ReferenceSolution solve_reference(const ProblemInstance& problem, double tol = 1e-10);

/// grad f_i(x) plus one oracle perturbation drawn from `rng`.
DenseVector oracle_query(const ProblemInstance& problem, int i, const DenseVector& x,
                         const OracleConfig& cfg, RandomStream& rng);

/// Averages `queries` oracle samples of worker i at x into out. With
/// sigma = 0 the result is the exact gradient.
void oracle_average(const ProblemInstance& problem, int i, const DenseVector& x,
                    const OracleConfig& cfg, int queries, RandomStream& rng, DenseVector& out);

/// Central finite-difference gradient of a scalar function.
template <typename F>
DenseVector finite_difference_gradient(F&& f, const DenseVector& x, double h = 1e-6) {
  DenseVector g(x.size());
  DenseVector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double saved = probe(j);
    probe(j) = saved + h;
    const double up = f(probe);
    probe(j) = saved - h;
    const double down = f(probe);
    probe(j) = saved;
    g(j) = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace ccopt
