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

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace ccopt {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Pure: maps (counter, key) to four 32-bit words.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Tag whose streams ignore the worker id: every worker sees the same draws
/// for a given (scope, trial, round).
inline constexpr std::string_view kSharedTag = "shared";

/// Address of a random substream. The string_views only need to live for the
/// duration of the derive_stream call.
struct StreamPath {
  std::string_view scope;  // algorithm label, "problem", "validate", ...
  std::uint64_t trial = 0;
  std::uint64_t worker = 0;
  std::uint64_t round = 0;
  std::string_view tag;  // "oracle", "compress", "shared", ...
};

/// Counter-mode Philox stream. Satisfies UniformRandomBitGenerator, but the
/// distribution helpers below are implemented here so that draws do not
/// depend on the standard library vendor.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream() = default;
  RandomStream(std::uint64_t key, std::uint64_t nonce) : key_(key), nonce_(nonce) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }
  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }
  /// Uniform integer on [0, n); exact (rejection on the 64-bit product).
  std::uint64_t uniform_index(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t nonce() const { return nonce_; }

 private:
  void refill();

  std::uint64_t key_ = 0;
  std::uint64_t nonce_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Pure function of (master_seed, path). Under kSharedTag the worker field is
/// ignored.
RandomStream derive_stream(std::uint64_t master_seed, const StreamPath& path);

}  // namespace ccopt
