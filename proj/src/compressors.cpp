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

#include "ccopt/compressors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ccopt {

CompressorSpec CompressorSpec::identity() { return {}; }

CompressorSpec CompressorSpec::top_k(int k) {
  CompressorSpec spec;
  spec.kind = CompressorKind::kTopK;
  spec.k = k;
  return spec;
}

CompressorSpec CompressorSpec::rand_k(int k) {
  CompressorSpec spec;
  spec.kind = CompressorKind::kRandK;
  spec.k = k;
  return spec;
}

CompressorSpec CompressorSpec::urand_k(int k) {
  CompressorSpec spec;
  spec.kind = CompressorKind::kURandK;
  spec.k = k;
  return spec;
}

CompressorSpec CompressorSpec::random_quant(int s) {
  CompressorSpec spec;
  spec.kind = CompressorKind::kRandomQuant;
  spec.s = s;
  return spec;
}

CompressorSpec CompressorSpec::shared_sparsifier(double omega, bool rescale) {
  CompressorSpec spec;
  spec.kind = CompressorKind::kSharedRandSparsifier;
  spec.omega = omega;
  spec.rescale = rescale;
  return spec;
}

void validate(const CompressorSpec& spec, int d) {
  if (d < 1) throw ValidationError("compressor: dimension must be positive");
  switch (spec.kind) {
    case CompressorKind::kTopK:
    case CompressorKind::kRandK:
    case CompressorKind::kURandK:
      if (spec.k < 1) throw ValidationError(describe(spec) + ": k must be >= 1");
      if (spec.k > d) {
        throw ValidationError(describe(spec) + ": k exceeds dimension " + std::to_string(d));
      }
      break;
    case CompressorKind::kRandomQuant:
      if (spec.s < 1 || spec.s > 65535) {
        throw ValidationError(describe(spec) + ": s must be in [1, 65535]");
      }
      break;
    case CompressorKind::kSharedRandSparsifier:
      if (!(spec.omega >= 0.0) || !std::isfinite(spec.omega)) {
        throw ValidationError(describe(spec) + ": omega must be finite and >= 0");
      }
      break;
    case CompressorKind::kScaledWrapper:
      if (!spec.inner) throw ValidationError("ScaledWrapper without inner compressor");
      validate(*spec.inner, d);
      if (!claimed_class(*spec.inner, d).unbiased()) {
        throw ValidationError("ScaledWrapper: inner compressor " + describe(*spec.inner) +
                              " is not unbiased");
      }
      break;
    case CompressorKind::kIdentity:
      break;
  }
}

CompressorClass claimed_class(const CompressorSpec& spec, int d) {
  const double dd = d;
  switch (spec.kind) {
    case CompressorKind::kTopK:
    case CompressorKind::kRandK:
      return {std::nullopt, spec.k / dd};
    case CompressorKind::kURandK:
      return {dd / spec.k - 1.0, std::nullopt};
    case CompressorKind::kRandomQuant:
      return {std::min(dd / (spec.s * spec.s), std::sqrt(dd) / spec.s), std::nullopt};
    case CompressorKind::kIdentity:
      return {0.0, 1.0};
    case CompressorKind::kScaledWrapper: {
      const auto inner = claimed_class(*spec.inner, d);
      if (!inner.unbiased()) return {};
      return {std::nullopt, 1.0 / (1.0 + *inner.omega)};
    }
    case CompressorKind::kSharedRandSparsifier:
      if (spec.rescale) return {spec.omega, std::nullopt};
      return {std::nullopt, 1.0 / (1.0 + spec.omega)};
  }
  return {};
}

Randomness randomness(const CompressorSpec& spec) {
  switch (spec.kind) {
    case CompressorKind::kTopK:
    case CompressorKind::kIdentity:
      return Randomness::kDeterministic;
    case CompressorKind::kSharedRandSparsifier:
      return Randomness::kSharedPerRound;
    case CompressorKind::kScaledWrapper:
      return randomness(*spec.inner);
    default:
      return Randomness::kPrivate;
  }
}

std::string describe(const CompressorSpec& spec) {
  std::ostringstream os;
  switch (spec.kind) {
    case CompressorKind::kTopK: os << "TopK(k=" << spec.k << ")"; break;
    case CompressorKind::kRandK: os << "RandK(k=" << spec.k << ")"; break;
    case CompressorKind::kURandK: os << "URandK(k=" << spec.k << ")"; break;
    case CompressorKind::kRandomQuant: os << "RandomQuant(s=" << spec.s << ")"; break;
    case CompressorKind::kIdentity: os << "Identity"; break;
    case CompressorKind::kScaledWrapper:
      os << "Scaled(" << (spec.inner ? describe(*spec.inner) : std::string("?")) << ")";
      break;
    case CompressorKind::kSharedRandSparsifier:
      os << "SharedRandSparsifier(omega=" << spec.omega << (spec.rescale ? "" : ",unscaled")
         << ")";
      break;
  }
  return os.str();
}

namespace {

std::int64_t index_bits(int d) {
  return d <= 1 ? 0 : std::bit_width(static_cast<unsigned>(d - 1));
}

// Builds a SparsePairs message from ascending candidate indices, dropping
// zero values.
CompressedMessage sparse_message(const DenseVector& x, const std::vector<int>& ascending,
                                 double scale) {
  SparsePairs pairs;
  pairs.indices.reserve(ascending.size());
  pairs.values.reserve(ascending.size());
  for (int j : ascending) {
    const double v = scale == 1.0 ? x(j) : x(j) * scale;
    if (v != 0.0) {
      pairs.indices.push_back(j);
      pairs.values.push_back(v);
    }
  }
  const auto count = static_cast<std::int64_t>(pairs.indices.size());
  CompressedMessage msg;
  msg.scalar_cost = 2 * count;
  msg.bit_cost = count * (64 + index_bits(static_cast<int>(x.size())));
  msg.payload = std::move(pairs);
  return msg;
}

std::vector<int> sample_subset(int d, int k, RandomStream& rng) {
  std::vector<int> chosen;
  chosen.reserve(k);
  if (4 * k <= d) {
    while (static_cast<int>(chosen.size()) < k) {
      const int j = static_cast<int>(rng.uniform_index(d));
      if (std::find(chosen.begin(), chosen.end(), j) == chosen.end()) chosen.push_back(j);
    }
  } else {
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(rng.uniform_index(d - i));
      std::swap(perm[i], perm[j]);
    }
    chosen.assign(perm.begin(), perm.begin() + k);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<int> top_indices(const DenseVector& x, int k) {
  std::vector<int> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto by_magnitude = [&x](int a, int b) {
    const double ma = std::abs(x(a));
    const double mb = std::abs(x(b));
    return ma > mb || (ma == mb && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), by_magnitude);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

CompressedMessage quantize(const DenseVector& x, int s, RandomStream& rng) {
  const auto d = static_cast<int>(x.size());
  QuantPayload q;
  q.norm = x.norm();
  q.s = s;
  q.signs.resize(d);
  q.levels.resize(d);
  for (int j = 0; j < d; ++j) {
    const double ratio = std::abs(x(j)) / q.norm * s;
    const double floor_level = std::floor(ratio);
    auto level = static_cast<std::uint16_t>(floor_level);
    if (rng.uniform() < ratio - floor_level) ++level;
    q.levels[j] = std::min<std::uint16_t>(level, static_cast<std::uint16_t>(s));
    q.signs[j] = x(j) < 0.0 ? std::int8_t{-1} : std::int8_t{1};
  }
  CompressedMessage msg;
  msg.bit_cost = static_cast<std::int64_t>(d) * (1 + index_bits(s + 1)) + 64;
  msg.scalar_cost = (msg.bit_cost + 63) / 64;
  msg.payload = std::move(q);
  return msg;
}

void scale_message(CompressedMessage& msg, double factor) {
  if (auto* pairs = std::get_if<SparsePairs>(&msg.payload)) {
    for (double& v : pairs->values) v *= factor;
  } else {
    std::get<QuantPayload>(msg.payload).norm *= factor;
  }
}

}  // namespace

CompressedMessage compress(const CompressorSpec& spec, const DenseVector& x, RandomStream& rng) {
  const auto d = static_cast<int>(x.size());
  validate(spec, d);
  if (!x.allFinite()) throw NumericalError("compress: non-finite input");

  if (spec.kind == CompressorKind::kScaledWrapper) {
    CompressedMessage msg = compress(*spec.inner, x, rng);
    const double omega = *claimed_class(*spec.inner, d).omega;
    if (omega != 0.0) scale_message(msg, 1.0 / (1.0 + omega));
    return msg;
  }
  if (spec.kind == CompressorKind::kSharedRandSparsifier) {
    // The mask is drawn even for a zero input so that every worker consumes
    // the shared stream identically.
    const double keep = 1.0 / (1.0 + spec.omega);
    std::vector<int> kept;
    for (int j = 0; j < d; ++j) {
      if (rng.uniform() < keep) kept.push_back(j);
    }
    return sparse_message(x, kept, spec.rescale ? 1.0 + spec.omega : 1.0);
  }
  if (x.isZero(0.0)) return CompressedMessage{SparsePairs{}, 0, 0};

  switch (spec.kind) {
    case CompressorKind::kIdentity: {
      std::vector<int> all(d);
      std::iota(all.begin(), all.end(), 0);
      return sparse_message(x, all, 1.0);
    }
    case CompressorKind::kTopK:
      return sparse_message(x, top_indices(x, spec.k), 1.0);
    case CompressorKind::kRandK:
      return sparse_message(x, sample_subset(d, spec.k, rng), 1.0);
    case CompressorKind::kURandK:
      return sparse_message(x, sample_subset(d, spec.k, rng), static_cast<double>(d) / spec.k);
    case CompressorKind::kRandomQuant:
      return quantize(x, spec.s, rng);
    default:
      break;
  }
  throw ValidationError("compress: unknown compressor kind");
}

void accumulate(const CompressedMessage& msg, DenseVector& out) {
  const auto d = static_cast<int>(out.size());
  if (const auto* pairs = std::get_if<SparsePairs>(&msg.payload)) {
    for (std::size_t t = 0; t < pairs->indices.size(); ++t) {
      const int j = pairs->indices[t];
      if (j < 0 || j >= d) {
        throw ValidationError("decompress: index " + std::to_string(j) + " out of range");
      }
      out(j) += pairs->values[t];
    }
    return;
  }
  const auto& q = std::get<QuantPayload>(msg.payload);
  if (static_cast<int>(q.levels.size()) != d) {
    throw ValidationError("decompress: quantized payload dimension mismatch");
  }
  for (int j = 0; j < d; ++j) {
    if (q.levels[j] != 0) out(j) += q.norm * q.signs[j] * q.levels[j] / q.s;
  }
}

DenseVector decompress(const CompressedMessage& msg, int d) {
  DenseVector out = DenseVector::Zero(d);
  accumulate(msg, out);
  return out;
}

CompressorSpec scale_to_contractive(const CompressorSpec& inner) {
  switch (inner.kind) {
    case CompressorKind::kURandK:
    case CompressorKind::kRandomQuant:
    case CompressorKind::kIdentity:
      break;
    case CompressorKind::kSharedRandSparsifier:
      if (inner.rescale) break;
      [[fallthrough]];
    default:
      throw ValidationError("scale_to_contractive: " + describe(inner) + " is not unbiased");
  }
  CompressorSpec spec;
  spec.kind = CompressorKind::kScaledWrapper;
  spec.inner = std::make_shared<const CompressorSpec>(inner);
  return spec;
}

// Absolute slack on unit-norm probes so that exact identities (Identity,
// URandK with k = d/2) are not failed by accumulated rounding.
constexpr double kRoundingSlack = 1e-12;

double familywise_z(int directions) {
  // Upper tail of a single three-sigma test, shared across the directions.
  const double tail = 0.5 * std::erfc(3.0 / std::sqrt(2.0)) / std::max(directions, 1);
  double lo = 0.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(mid / std::sqrt(2.0)) > tail) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

ClassEstimate estimate_class(const CompressorSpec& spec, int trials, int d, RandomStream& rng,
                             int vectors) {
  validate(spec, d);
  if (trials < 2 || vectors < 1) throw ValidationError("estimate_class: too few samples");
  const double z = familywise_z(vectors);
  ClassEstimate est;
  DenseVector x(d);
  DenseVector out(d);
  DenseVector sum(d);
  DenseVector sum_sq(d);
  double worst_error = -1.0;
  double worst_bias_ratio = -1.0;
  for (int v = 0; v < vectors; ++v) {
    for (int j = 0; j < d; ++j) x(j) = rng.normal();
    x /= x.norm();
    sum.setZero();
    sum_sq.setZero();
    double err_sum = 0.0;
    double err_sq_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
      out.setZero();
      accumulate(compress(spec, x, rng), out);
      const double err = (out - x).squaredNorm();
      err_sum += err;
      err_sq_sum += err * err;
      est.per_sample_max = std::max(est.per_sample_max, err);
      // Deviations from x, not raw outputs: the sums stay exact for lossless
      // outputs and the variance avoids cancellation.
      out -= x;
      sum += out;
      sum_sq += out.cwiseProduct(out);
    }
    const double n = trials;
    const double mean_err = err_sum / n;
    const double var_err = std::max(0.0, (err_sq_sum - n * mean_err * mean_err) / (n - 1.0));
    const double se_err = std::sqrt(var_err / n);
    if (mean_err > worst_error) {
      worst_error = mean_err;
      est.rel_error = mean_err;
      est.rel_error_se = se_err;
    }
    const DenseVector mean_dev = sum / n;
    const DenseVector var =
        ((sum_sq - n * mean_dev.cwiseProduct(mean_dev)) / (n - 1.0)).cwiseMax(0.0);
    const double bias = mean_dev.norm();
    const double bias_se = std::sqrt(var.sum() / n);
    if (bias > z * bias_se + kRoundingSlack) ++est.bias_violations;
    const double ratio = bias_se > 0.0 ? bias / bias_se : (bias > 0.0 ? HUGE_VAL : 0.0);
    if (ratio > worst_bias_ratio) {
      worst_bias_ratio = ratio;
      est.bias = bias;
      est.bias_se = bias_se;
    }
  }
  est.z = z;
  est.omega_hat = est.rel_error;
  est.delta_hat = 1.0 - est.rel_error;
  return est;
}

bool consistent_with(const ClassEstimate& est, const CompressorClass& claim) {
  const double margin = est.z * est.rel_error_se + kRoundingSlack;
  if (claim.contractive() && est.rel_error > 1.0 - *claim.delta + margin) return false;
  if (claim.unbiased()) {
    if (est.rel_error > *claim.omega + margin) return false;
    if (est.bias_violations > 0) return false;
  }
  return true;
}

}  // namespace ccopt
