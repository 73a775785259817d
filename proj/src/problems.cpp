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


#include "ccopt/problems.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace ccopt {

void LocalObjectives::sample(int /*i*/, const DenseVector& exact_gradient, double sigma,
                             RandomStream& rng, DenseVector& out) const {
  out = exact_gradient;
  if (sigma == 0.0) return;
  const double scale = sigma / std::sqrt(static_cast<double>(exact_gradient.size()));
  for (Eigen::Index j = 0; j < out.size(); ++j) out(j) += scale * rng.normal();
}

double ProblemInstance::value(const DenseVector& x) const {
  std::vector<double> values(n);
  for (int i = 0; i < n; ++i) values[i] = objectives->value(i, x);
  return pairwise_mean(std::span<const double>(values));
}

DenseVector ProblemInstance::gradient(const DenseVector& x) const {
  std::vector<DenseVector> grads(n, DenseVector(d));
  for (int i = 0; i < n; ++i) objectives->gradient(i, x, grads[i]);
  return pairwise_mean(std::span<const DenseVector>(grads));
}

DenseVector ProblemInstance::local_gradient(int i, const DenseVector& x) const {
  DenseVector g(d);
  objectives->gradient(i, x, g);
  return g;
}

double ProblemInstance::gap(const DenseVector& x) const {
  if (hessian && has_reference()) {
    const DenseVector e = x - x_star;
    return 0.5 * e.dot(*hessian * e);
  }
  return value(x) - f_star;
}

namespace {

double max_eigenvalue(const DenseMatrix& sym) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double min_eigenvalue(const DenseMatrix& sym) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

class LeastSquaresObjectives final : public LocalObjectives {
 public:
  LeastSquaresObjectives(std::vector<DenseMatrix> A, std::vector<DenseVector> b)
      : A_(std::move(A)), b_(std::move(b)) {
    const double n = static_cast<double>(A_.size());
    for (std::size_t i = 0; i < A_.size(); ++i) {
      H_.push_back(A_[i].transpose() * A_[i] / n);
      c_.push_back(A_[i].transpose() * b_[i] / n);
    }
  }

  int workers() const override { return static_cast<int>(A_.size()); }
  int dim() const override { return static_cast<int>(A_.front().cols()); }

  double value(int i, const DenseVector& x) const override {
    return (A_[i] * x - b_[i]).squaredNorm() / (2.0 * workers());
  }

  void gradient(int i, const DenseVector& x, DenseVector& out) const override {
    out.noalias() = H_[i] * x;
    out -= c_[i];
  }

  const std::vector<DenseMatrix>& blocks() const { return A_; }
  const std::vector<DenseVector>& targets() const { return b_; }
  const std::vector<DenseMatrix>& hessians() const { return H_; }

 private:
  std::vector<DenseMatrix> A_;
  std::vector<DenseVector> b_;
  std::vector<DenseMatrix> H_;
  std::vector<DenseVector> c_;
};

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

class LogisticObjectives final : public LocalObjectives {
 public:
  LogisticObjectives(std::vector<DenseMatrix> A, std::vector<DenseVector> labels)
      : A_(std::move(A)), labels_(std::move(labels)) {}

  int workers() const override { return static_cast<int>(A_.size()); }
  int dim() const override { return static_cast<int>(A_.front().cols()); }

  double value(int i, const DenseVector& x) const override {
    const DenseVector margins = labels_[i].cwiseProduct(A_[i] * x);
    double sum = 0.0;
    for (Eigen::Index m = 0; m < margins.size(); ++m) sum += softplus(-margins(m));
    return sum / static_cast<double>(margins.size());
  }

  void gradient(int i, const DenseVector& x, DenseVector& out) const override {
    DenseVector weights = labels_[i].cwiseProduct(A_[i] * x);
    for (Eigen::Index m = 0; m < weights.size(); ++m) {
      weights(m) = -labels_[i](m) * sigmoid(-weights(m));
    }
    out.noalias() = A_[i].transpose() * weights;
    out /= static_cast<double>(weights.size());
  }

  DenseMatrix hessian(int i, const DenseVector& x) const {
    const DenseVector t = A_[i] * x;
    DenseVector w(t.size());
    for (Eigen::Index m = 0; m < t.size(); ++m) {
      const double s = sigmoid(t(m));
      w(m) = s * (1.0 - s);
    }
    return A_[i].transpose() * w.asDiagonal() * A_[i] / static_cast<double>(t.size());
  }

  const std::vector<DenseMatrix>& blocks() const { return A_; }

 private:
  std::vector<DenseMatrix> A_;
  std::vector<DenseVector> labels_;
};

// Damped Newton with Armijo backtracking. Throws if ||grad|| <= tol is not
// reached.
DenseVector newton_minimize(const std::function<double(const DenseVector&)>& f,
                            const std::function<DenseVector(const DenseVector&)>& grad,
                            const std::function<DenseMatrix(const DenseVector&)>& hess,
                            DenseVector x, double tol, const std::string& what) {
  constexpr int kMaxIterations = 200;
  for (int it = 0; it < kMaxIterations; ++it) {
    const DenseVector g = grad(x);
    if (!g.allFinite()) break;
    if (g.norm() <= tol) return x;
    const DenseMatrix H = hess(x);
    Eigen::LDLT<DenseMatrix> ldlt(H);
    DenseVector step = ldlt.solve(-g);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || step.dot(g) >= 0.0) step = -g;
    const double fx = f(x);
    double t = 1.0;
    const double slope = step.dot(g);
    const double gnorm = g.norm();
    bool accepted = false;
    while (t > 1e-12) {
      // Near the optimum the decrease in f drops below its rounding floor,
      // so a shrinking gradient also counts as progress.
      const DenseVector trial = x + t * step;
      const double ft = f(trial);
      if ((ft < fx && ft <= fx + 1e-4 * t * slope) || grad(trial).norm() < gnorm) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    x += t * step;
  }
  throw NumericalError(what + ": gradient tolerance " + std::to_string(tol) +
                       " not reached (data may be separable)");
}

// Replaces the singular values of A by a log-uniform spectrum from s_max down
// to s_max / sqrt(cond).
void impose_condition_number(DenseMatrix& A, double cond) {
  if (!(cond >= 1.0)) throw ValidationError("cond must be >= 1");
  Eigen::BDCSVD<DenseMatrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto d = A.cols();
  const double s_max = svd.singularValues()(0);
  DenseVector s(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double frac = d == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(d - 1);
    s(j) = s_max * std::pow(cond, -0.5 * frac);
  }
  if (!(s(d - 1) > 0.0)) throw NumericalError("condition surgery produced a singular design");
  A = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

DenseMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, RandomStream& rng) {
  DenseMatrix A(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) A(r, c) = rng.normal();
  }
  return A;
}

DenseVector gaussian_vector(Eigen::Index d, double scale, RandomStream& rng) {
  DenseVector v(d);
  for (Eigen::Index j = 0; j < d; ++j) v(j) = scale * rng.normal();
  return v;
}

// Conditioned design, shared by both generators, with per-worker optima
// x0* + e_i.
struct Design {
  std::vector<DenseMatrix> blocks;
  std::vector<DenseVector> local_optima;
};

Design make_design(int n, int M, int d, double cond, double het_scale, RandomStream& rng) {
  if (n < 1 || M < 1 || d < 1) throw ValidationError("generator: n, M, d must be positive");
  if (static_cast<long>(n) * M < d) throw ValidationError("generator: need n*M >= d");
  if (!(het_scale >= 0.0)) throw ValidationError("generator: het_scale must be >= 0");
  DenseMatrix A = gaussian_matrix(static_cast<Eigen::Index>(n) * M, d, rng);
  impose_condition_number(A, cond);
  Design design;
  const DenseVector center = gaussian_vector(d, 1.0, rng);
  for (int i = 0; i < n; ++i) {
    design.blocks.push_back(A.middleRows(static_cast<Eigen::Index>(i) * M, M));
    design.local_optima.push_back(center + gaussian_vector(d, het_scale, rng));
  }
  return design;
}

void finish_instance(ProblemInstance& p) {
  p.G_star = 0.0;
  if (!p.f_i_star.empty()) {
    p.G_star = std::max(0.0, p.f_star - pairwise_mean(std::span<const double>(p.f_i_star)));
  }
  p.x0 = DenseVector::Zero(p.d);
  if (p.has_reference()) p.Delta_x = (p.x0 - p.x_star).squaredNorm();
  p.Delta_f = p.gap(p.x0);
}

ReferenceSolution least_squares_reference(const LeastSquaresObjectives& obj) {
  const auto& A = obj.blocks();
  const auto& b = obj.targets();
  const int n = obj.workers();
  const int d = obj.dim();
  Eigen::Index rows = 0;
  for (const auto& Ai : A) rows += Ai.rows();
  DenseMatrix stacked(rows, d);
  DenseVector rhs(rows);
  Eigen::Index r = 0;
  for (int i = 0; i < n; ++i) {
    stacked.middleRows(r, A[i].rows()) = A[i];
    rhs.segment(r, A[i].rows()) = b[i];
    r += A[i].rows();
  }
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(stacked);
  if (qr.rank() < d) throw NumericalError("least squares: rank-deficient design");
  ReferenceSolution ref;
  ref.x_star = qr.solve(rhs);
  std::vector<double> values(n);
  for (int i = 0; i < n; ++i) {
    values[i] = obj.value(i, ref.x_star);
    const DenseVector xi = A[i].completeOrthogonalDecomposition().solve(b[i]);
    ref.f_i_star.push_back(obj.value(i, xi));
  }
  ref.f_star = pairwise_mean(std::span<const double>(values));
  return ref;
}

ReferenceSolution logistic_reference(const LogisticObjectives& obj, double tol, bool local) {
  const int n = obj.workers();
  const int d = obj.dim();
  auto f = [&](const DenseVector& x) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = obj.value(i, x);
    return pairwise_mean(std::span<const double>(v));
  };
  auto grad = [&](const DenseVector& x) {
    std::vector<DenseVector> g(n, DenseVector(d));
    for (int i = 0; i < n; ++i) obj.gradient(i, x, g[i]);
    return pairwise_mean(std::span<const DenseVector>(g));
  };
  auto hess = [&](const DenseVector& x) {
    DenseMatrix H = DenseMatrix::Zero(d, d);
    for (int i = 0; i < n; ++i) H += obj.hessian(i, x);
    return DenseMatrix(H / n);
  };
  ReferenceSolution ref;
  ref.x_star = newton_minimize(f, grad, hess, DenseVector::Zero(d), tol, "logistic reference");
  ref.f_star = f(ref.x_star);
  if (local) {
    for (int i = 0; i < n; ++i) {
      auto fi = [&](const DenseVector& x) { return obj.value(i, x); };
      auto gi = [&](const DenseVector& x) {
        DenseVector g(d);
        obj.gradient(i, x, g);
        return g;
      };
      auto hi = [&](const DenseVector& x) { return obj.hessian(i, x); };
      const DenseVector xi = newton_minimize(fi, gi, hi, DenseVector::Zero(d), tol,
                                             "logistic worker " + std::to_string(i));
      ref.f_i_star.push_back(obj.value(i, xi));
    }
  }
  return ref;
}

}  // namespace

ProblemInstance least_squares_from_blocks(std::vector<DenseMatrix> A, std::vector<DenseVector> b,
                                          std::string name) {
  if (A.empty() || A.size() != b.size()) throw ValidationError("least squares: block mismatch");
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i].rows() != b[i].size() || A[i].cols() != A[0].cols()) {
      throw ValidationError("least squares: block shapes disagree");
    }
  }
  auto obj = std::make_shared<LeastSquaresObjectives>(std::move(A), std::move(b));
  ProblemInstance p;
  p.name = std::move(name);
  p.n = obj->workers();
  p.d = obj->dim();
  p.L = 0.0;
  p.mu = HUGE_VAL;
  DenseMatrix H = DenseMatrix::Zero(p.d, p.d);
  for (const auto& Hi : obj->hessians()) {
    p.L = std::max(p.L, max_eigenvalue(Hi));
    p.mu = std::min(p.mu, std::max(0.0, min_eigenvalue(Hi)));
    H += Hi;
  }
  p.hessian = H / static_cast<double>(p.n);
  const ReferenceSolution ref = least_squares_reference(*obj);
  p.objectives = obj;
  p.x_star = ref.x_star;
  p.f_star = ref.f_star;
  p.f_i_star = ref.f_i_star;
  finish_instance(p);
  return p;
}

ProblemInstance gen_least_squares(const LeastSquaresParams& params) {
  if (!(params.noise_b >= 0.0)) throw ValidationError("least squares: noise_b must be >= 0");
  RandomStream rng = derive_stream(params.seed, {"problem/least_squares", 0, 0, 0, "generate"});
  Design design = make_design(params.n, params.M, params.d, params.cond, params.het_scale, rng);
  std::vector<DenseVector> b;
  for (int i = 0; i < params.n; ++i) {
    b.push_back(design.blocks[i] * design.local_optima[i] +
                gaussian_vector(params.M, params.noise_b, rng));
  }
  return least_squares_from_blocks(std::move(design.blocks), std::move(b));
}

ProblemInstance logistic_from_blocks(std::vector<DenseMatrix> A, std::vector<DenseVector> labels,
                                     double tol, bool local_minima, std::string name) {
  if (A.empty() || A.size() != labels.size()) throw ValidationError("logistic: block mismatch");
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (A[i].rows() != labels[i].size() || A[i].cols() != A[0].cols()) {
      throw ValidationError("logistic: block shapes disagree");
    }
    for (Eigen::Index m = 0; m < labels[i].size(); ++m) {
      if (labels[i](m) != 1.0 && labels[i](m) != -1.0) {
        throw ValidationError("logistic: labels must be +1 or -1");
      }
    }
  }
  auto obj = std::make_shared<LogisticObjectives>(std::move(A), std::move(labels));
  ProblemInstance p;
  p.name = std::move(name);
  p.n = obj->workers();
  p.d = obj->dim();
  p.mu = 0.0;
  for (const auto& Ai : obj->blocks()) {
    p.L = std::max(p.L, max_eigenvalue(Ai.transpose() * Ai) / (4.0 * Ai.rows()));
  }
  const ReferenceSolution ref = logistic_reference(*obj, tol, local_minima);
  p.objectives = obj;
  p.x_star = ref.x_star;
  p.f_star = ref.f_star;
  p.f_i_star = ref.f_i_star;
  finish_instance(p);
  return p;
}

ProblemInstance gen_logistic(const LogisticParams& params) {
  RandomStream rng = derive_stream(params.seed, {"problem/logistic", 0, 0, 0, "generate"});
  Design design = make_design(params.n, params.M, params.d, params.cond, params.het_scale, rng);
  std::vector<DenseVector> labels;
  for (int i = 0; i < params.n; ++i) {
    const DenseVector logits = design.blocks[i] * design.local_optima[i];
    DenseVector y(params.M);
    for (int m = 0; m < params.M; ++m) y(m) = rng.bernoulli(sigmoid(logits(m))) ? 1.0 : -1.0;
    labels.push_back(std::move(y));
  }
  return logistic_from_blocks(std::move(design.blocks), std::move(labels), params.tol);
}

ReferenceSolution solve_reference(const ProblemInstance& problem, double tol) {
  if (const auto* ls = dynamic_cast<const LeastSquaresObjectives*>(problem.objectives.get())) {
    return least_squares_reference(*ls);
  }
  if (const auto* lg = dynamic_cast<const LogisticObjectives*>(problem.objectives.get())) {
    return logistic_reference(*lg, tol, true);
  }
  throw ValidationError("solve_reference: " + problem.name + " is not a convex data problem");
}

DenseVector oracle_query(const ProblemInstance& problem, int i, const DenseVector& x,
                         const OracleConfig& cfg, RandomStream& rng) {
  DenseVector out;
  oracle_average(problem, i, x, cfg, 1, rng, out);
  return out;
}

void oracle_average(const ProblemInstance& problem, int i, const DenseVector& x,
                    const OracleConfig& cfg, int queries, RandomStream& rng, DenseVector& out) {
  if (queries < 1) throw ValidationError("oracle_average: queries must be >= 1");
  if (i < 0 || i >= problem.n) throw ValidationError("oracle: worker index out of range");
  DenseVector exact(problem.d);
  problem.objectives->gradient(i, x, exact);
  if (cfg.sigma == 0.0) {
    out = exact;
    return;
  }
  if (queries == 1) {
    problem.objectives->sample(i, exact, cfg.sigma, rng, out);
    return;
  }
  out = DenseVector::Zero(problem.d);
  DenseVector draw(problem.d);
  for (int r = 0; r < queries; ++r) {
    problem.objectives->sample(i, exact, cfg.sigma, rng, draw);
    out += draw;
  }
  out /= static_cast<double>(queries);
}

}  // namespace ccopt
