// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <torch/torch.h>

#include "objnerf/common.hpp"

namespace objnerf {

// Sinusoidal positional encoding with a coarse-to-fine schedule: frequency
// band k contributes sin(2^k pi x) / cos(2^k pi x) scaled by a per-band
// weight that ramps from 0 to 1 as training progresses, lowest bands first.
struct EncodingConfig {
  int num_frequencies = 10;
  bool include_raw_input = true;
  // Steps over which the band weights ramp; progress = clamp(step / this, 0, 1).
  int64_t anneal_duration = 1;

  void validate() const {
    if (num_frequencies < 0) throw ArgumentError("num_frequencies must be >= 0");
    if (anneal_duration < 1) throw ArgumentError("anneal_duration must be >= 1");
  }
  int output_dim(int input_dim) const {
    return input_dim * ((include_raw_input ? 1 : 0) + 2 * num_frequencies);
  }
};

// Weight of band k at the given progress in [0, 1]:
//   0                                for progress * L <= k
//   (1 - cos(pi (progress L - k)))/2 in between
//   1                                for progress * L >= k + 1
// Throws ArgumentError when k is outside [0, num_frequencies).
double anneal_weight(int frequency_index, double progress, int num_frequencies);

// Per-band weights as a tensor [L] for the given progress.
torch::Tensor anneal_weights(double progress, int num_frequencies, torch::Dtype dtype);

// Encodes x [..., D] to [..., D * (raw + 2L)], laid out as
//   [x, w_0 sin(pi x), w_0 cos(pi x), w_1 sin(2 pi x), w_1 cos(2 pi x), ...].
// Non-finite inputs throw NumericError.
torch::Tensor positional_encode(const torch::Tensor& x, const EncodingConfig& cfg,
                                double progress);

}  // namespace objnerf
