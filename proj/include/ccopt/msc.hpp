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

#include "ccopt/compressors.hpp"

#include <vector>

namespace ccopt {

/// Everything that crosses the simulated wire for one multi-step exchange.
struct MscTranscript {
  std::vector<CompressedMessage> messages;
  int rounds = 0;
  CompressorClass class_used;
  bool unbiased_branch = false;
  int dim = 0;
};

struct MscResult {
  MscTranscript transcript;
  DenseVector value;  // equals msc_receive(transcript) bitwise
};

/// True when multi-step compression with `cls` takes the unbiased branch,
/// i.e. the class only carries an omega.
inline bool uses_unbiased_branch(const CompressorClass& cls) {
  return cls.unbiased() && !cls.contractive();
}

/// Residual-shrinkage factor (omega/(1+omega))^rounds inverted into the
/// unbiased-branch rescaling 1/(1-(omega/(1+omega))^rounds). Returns 1 when
/// omega = 0.
double unbiased_rescale(double omega, int rounds);

/// Compresses x in `rounds` successive passes over the running residual.
/// All compressor draws come from `rng` in order.
MscResult msc_send(const DenseVector& x, const CompressorSpec& spec, int rounds,
                   RandomStream& rng);

/// Receiver-side reconstruction from the transcript alone.
DenseVector msc_receive(const MscTranscript& transcript, int d);

}  // namespace ccopt
