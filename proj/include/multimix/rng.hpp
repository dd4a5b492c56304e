// Copyright (c) 2026 The multimix authors.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MULTIMIX_RNG_HPP
#define MULTIMIX_RNG_HPP

#include <array>
#include <cstdint>
#include <vector>

namespace multimix {

/// Deterministic xoshiro256++ generator. The same seed produces the same
/// stream on every platform; std::random distributions are deliberately not
/// used anywhere so that all draws stay bit-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t next_below(std::uint64_t n);

  /// Standard normal via Box-Muller (pairs cached).
  double normal();

  /// Fisher-Yates shuffle of indices 0..n-1.
  std::vector<int> permutation(int n);

  /// Derive an independent generator for a logical substream. Pure: the
  /// parent stream is not advanced.
  Rng substream(std::uint64_t stream_id) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_ = 0;
  std::array<std::uint64_t, 4> state_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// One draw from Gamma(shape, 1), Marsaglia-Tsang; shape < 1 handled by the
/// standard power-of-uniform boost. shape must be positive.
double sample_gamma(Rng& rng, double shape);

/// One draw from Beta(alpha, alpha) as G1/(G1+G2). Result is strictly inside
/// (0, 1): exact boundary hits are nudged inward by machine epsilon.
double sample_beta(Rng& rng, double alpha);

/// K i.i.d. Beta(alpha, alpha) draws sorted ascending. Duplicates at float
/// resolution are perturbed upward by one ulp so the sequence is strictly
/// increasing.
std::vector<double> sample_ordered_weights(Rng& rng, double alpha, int k);

/// Finite distribution over mixing weights; stands in for Beta(alpha, alpha)
/// when expectations must be finite sums.
struct DiscreteWeightDist {
  std::vector<double> values;  // each strictly in (0,1)
  std::vector<double> probs;   // nonnegative, sum to 1 within 1e-12

  double mean() const;
};

/// Midpoint discretization of Beta(alpha, alpha) on (0,1): n equal-width
/// cells, atom at the cell midpoint, probability = exact cell mass of the
/// Beta density.
DiscreteWeightDist discretize_beta(double alpha, int n_atoms);

/// Density of Beta(alpha, alpha) at x in (0,1).
double beta_pdf(double alpha, double x);

/// Regularized incomplete beta I_x(a, b).
double beta_cdf(double a, double b, double x);

/// P(X = t) for X ~ Binomial(d, p).
double binomial_pmf(int d, int t, double p);

}  // namespace multimix

#endif  // MULTIMIX_RNG_HPP
