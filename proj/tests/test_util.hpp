// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/math/distributions/chi_squared.hpp>
#include <torch/torch.h>
#include <vector>

namespace objnerf::testutil {

// Pearson goodness-of-fit p-value for observed counts against expected
// probabilities.
inline double chi_square_p(const std::vector<double>& observed,
                           const std::vector<double>& expected_probs, double total) {
  double stat = 0.0;
  int dof = -1;
  for (size_t i = 0; i < observed.size(); ++i) {
    const double expected = expected_probs[i] * total;
    if (expected < 1e-9) continue;
    stat += (observed[i] - expected) * (observed[i] - expected) / expected;
    ++dof;
  }
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Relative error with an absolute floor, for finite-difference checks.
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace objnerf::testutil
