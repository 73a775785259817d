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


#include "ccopt/msc.hpp"

#include <cmath>
#include <string>

namespace ccopt {

double unbiased_rescale(double omega, int rounds) {
  if (omega == 0.0) return 1.0;
  return 1.0 / (1.0 - std::pow(omega / (1.0 + omega), rounds));
}

MscResult msc_send(const DenseVector& x, const CompressorSpec& spec, int rounds,
                   RandomStream& rng) {
  if (rounds < 1) throw ValidationError("msc_send: rounds must be >= 1");
  const auto d = static_cast<int>(x.size());
  validate(spec, d);
  MscResult out;
  MscTranscript& tr = out.transcript;
  tr.class_used = claimed_class(spec, d);
  if (!tr.class_used.unbiased() && !tr.class_used.contractive()) {
    throw ValidationError("msc_send: " + describe(spec) + " has no class parameter");
  }
  tr.unbiased_branch = uses_unbiased_branch(tr.class_used);
  tr.rounds = rounds;
  tr.dim = d;
  tr.messages.reserve(rounds);

  const double damping = tr.unbiased_branch ? 1.0 / (1.0 + *tr.class_used.omega) : 1.0;
  DenseVector v = DenseVector::Zero(d);
  DenseVector decoded(d);
  for (int r = 0; r < rounds; ++r) {
    tr.messages.push_back(compress(spec, x - v, rng));
    if (r + 1 == rounds) break;
    decoded.setZero();
    accumulate(tr.messages.back(), decoded);
    if (tr.unbiased_branch) {
      v += damping * decoded;
    } else {
      v += decoded;
    }
  }
  out.value = msc_receive(tr, d);
  return out;
}

DenseVector msc_receive(const MscTranscript& transcript, int d) {
  if (transcript.dim != d) {
    throw ValidationError("msc_receive: transcript dimension " + std::to_string(transcript.dim) +
                          " does not match " + std::to_string(d));
  }
  if (static_cast<int>(transcript.messages.size()) != transcript.rounds) {
    throw ValidationError("msc_receive: malformed transcript");
  }
  DenseVector sum = DenseVector::Zero(d);
  for (const auto& msg : transcript.messages) accumulate(msg, sum);
  if (!transcript.unbiased_branch) return sum;
  const double omega = *transcript.class_used.omega;
  if (omega == 0.0) return sum;
  return (unbiased_rescale(omega, transcript.rounds) / (1.0 + omega)) * sum;
}

}  // namespace ccopt
