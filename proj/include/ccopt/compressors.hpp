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

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ccopt {

enum class CompressorKind {
  kTopK,
  kRandK,
  kURandK,
  kRandomQuant,
  kIdentity,
  kScaledWrapper,
  kSharedRandSparsifier,
};

enum class Randomness { kDeterministic, kPrivate, kSharedPerRound };

/// Claimed compressor class. Identity carries both parameters.
struct CompressorClass {
  std::optional<double> omega;  // E||C(x)-x||^2 <= omega ||x||^2, E C(x) = x
  std::optional<double> delta;  // E||C(x)-x||^2 <= (1-delta) ||x||^2

  bool unbiased() const { return omega.has_value(); }
  bool contractive() const { return delta.has_value(); }
};

struct CompressorSpec {
  CompressorKind kind = CompressorKind::kIdentity;
  int k = 0;           // kept coordinates (TopK, RandK, URandK)
  int s = 0;           // quantization levels (RandomQuant)
  double omega = 0.0;  // SharedRandSparsifier keep probability is 1/(1+omega)
  bool rescale = true; // SharedRandSparsifier: multiply kept entries by 1+omega
  std::shared_ptr<const CompressorSpec> inner;  // ScaledWrapper

  static CompressorSpec identity();
  static CompressorSpec top_k(int k);
  static CompressorSpec rand_k(int k);
  static CompressorSpec urand_k(int k);
  static CompressorSpec random_quant(int s);
  static CompressorSpec shared_sparsifier(double omega, bool rescale = true);
};

/// Throws ValidationError when `spec` cannot be applied in dimension d.
void validate(const CompressorSpec& spec, int d);

CompressorClass claimed_class(const CompressorSpec& spec, int d);
Randomness randomness(const CompressorSpec& spec);
std::string describe(const CompressorSpec& spec);

/// Index/value pairs with strictly increasing 0-based indices. Zero values are
/// never transmitted.
struct SparsePairs {
  std::vector<int> indices;
  std::vector<double> values;
};

/// QSGD-style payload: the reconstruction of coordinate j is
/// norm * sign[j] * level[j] / s.
struct QuantPayload {
  double norm = 0.0;
  int s = 1;
  std::vector<std::int8_t> signs;
  std::vector<std::uint16_t> levels;
};

struct CompressedMessage {
  std::variant<SparsePairs, QuantPayload> payload;
  std::int64_t scalar_cost = 0;
  std::int64_t bit_cost = 0;
};

/// Applies `spec` to x. `rng` is the stream the caller derived for this
/// application (worker-private or shared, see randomness()); deterministic
/// kinds never touch it.
CompressedMessage compress(const CompressorSpec& spec, const DenseVector& x, RandomStream& rng);

DenseVector decompress(const CompressedMessage& msg, int d);

/// out += decompress(msg, out.size()).
void accumulate(const CompressedMessage& msg, DenseVector& out);

/// Wraps an unbiased compressor so that decoded values are divided by 1+omega,
/// turning a U(omega) operator into a C(1/(1+omega)) operator.
CompressorSpec scale_to_contractive(const CompressorSpec& inner);

/// Monte-Carlo check of a claimed class on `vectors` random unit directions in
/// dimension d with `trials` draws per direction.
struct ClassEstimate {
  double rel_error = 0.0;     // max over directions of mean ||C(x)-x||^2
  double rel_error_se = 0.0;  // standard error at that direction
  double bias = 0.0;          // max over directions of ||mean C(x) - x||
  double bias_se = 0.0;       // sqrt(sum_j var_j / trials) at that direction
  double per_sample_max = 0.0;  // largest single-draw ||C(x)-x||^2
  int bias_violations = 0;    // directions with bias > z * bias_se
  double z = 3.0;             // per-direction multiplier, see familywise_z()
  double omega_hat = 0.0;
  double delta_hat = 0.0;
};

ClassEstimate estimate_class(const CompressorSpec& spec, int trials, int d, RandomStream& rng,
                             int vectors = 64);

/// Per-direction standard-error multiplier that keeps the chance of any false
/// alarm among `directions` tests at the one-sided three-sigma level.
double familywise_z(int directions);

/// True when `est` does not contradict `claim` by more than est.z standard
/// errors in its worst direction.
bool consistent_with(const ClassEstimate& est, const CompressorClass& claim);

}  // namespace ccopt
