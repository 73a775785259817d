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

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ccopt {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Model, gradient and message carrier. All arithmetic in the library is
/// double precision.
using DenseVector = Vector<double>;
using DenseMatrix = Matrix<double>;

/// Raised for malformed configuration or contract violations detectable before
/// any numerical work starts.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when iterates or objective values stop being finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Index (1-based) of the last nonzero entry, 0 for the zero vector. The
/// nonzero test is exact.
template <typename Derived>
int prog(const Eigen::MatrixBase<Derived>& x) {
  for (Eigen::Index k = x.size(); k > 0; --k) {
    if (x(k - 1) != typename Derived::Scalar(0)) return static_cast<int>(k);
  }
  return 0;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x) {
  return x.allFinite();
}

void require_finite(const DenseVector& x, std::string_view what);

/// Sum of `terms` in a fixed pairwise tree over ascending indices. The
/// association order depends only on terms.size(), which keeps server-side
/// reductions bit-reproducible.
DenseVector pairwise_sum(std::span<const DenseVector> terms);
double pairwise_sum(std::span<const double> terms);

/// pairwise_sum(terms) / terms.size().
DenseVector pairwise_mean(std::span<const DenseVector> terms);
double pairwise_mean(std::span<const double> terms);

}  // namespace ccopt
