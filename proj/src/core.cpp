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

#include "ccopt/core.hpp"

namespace ccopt {

void require_finite(const DenseVector& x, std::string_view what) {
  if (!x.allFinite()) {
    throw NumericalError(std::string(what) + ": non-finite entry");
  }
}

namespace {

template <typename T, typename Add>
T pairwise_range(std::span<const T> terms, Add add) {
  if (terms.size() == 1) return terms[0];
  const std::size_t half = terms.size() / 2;
  return add(pairwise_range(terms.first(half), add),
             pairwise_range(terms.subspan(half), add));
}

}  // namespace

DenseVector pairwise_sum(std::span<const DenseVector> terms) {
  if (terms.empty()) throw ValidationError("pairwise_sum: empty input");
  return pairwise_range<DenseVector>(
      terms, [](const DenseVector& a, const DenseVector& b) -> DenseVector { return a + b; });
}

double pairwise_sum(std::span<const double> terms) {
  if (terms.empty()) return 0.0;
  return pairwise_range<double>(terms, [](double a, double b) { return a + b; });
}

DenseVector pairwise_mean(std::span<const DenseVector> terms) {
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

double pairwise_mean(std::span<const double> terms) {
  if (terms.empty()) throw ValidationError("pairwise_mean: empty input");
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

}  // namespace ccopt
