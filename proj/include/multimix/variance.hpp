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

#ifndef MULTIMIX_VARIANCE_HPP
#define MULTIMIX_VARIANCE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "multimix/mixers.hpp"
#include "multimix/net.hpp"

namespace multimix {

/// One realized stochastic gradient.
struct GradSample {
  std::string estimator;  // "multimix" | "largebatch"
  int k = 1;
  int b = 1;
  std::vector<double> grad;
  double sq_norm = 0.0;
  long eval_count = 0;  // per-sample gradient evaluations spent
};

struct VarianceReport {
  std::string estimator;
  int k = 1, b = 1;
  int replicates = 0;
  double variance = 0.0;  // unbiased estimate of E||g - E g||^2
  double ci_lo = 0.0, ci_hi = 0.0;
  double mean_sq_norm = 0.0;
  double msn_ci_lo = 0.0, msn_ci_hi = 0.0;
  bool has_exact = false;
  double exact = 0.0;
};

struct DecompositionReport {
  double var_g = 0.0;               // Var[g(pair, lambda)]
  double var_pair_g1 = 0.0;         // Var_pair[E_lambda g]
  double var_lambda_g2 = 0.0;       // Var_lambda[E_pair g]
  double e_pair_var_lambda = 0.0;   // E_pair Var_lambda[g]
  double e_lambda_var_pair = 0.0;   // E_lambda Var_pair[g]
  double residual_pair_identity = 0.0;    // var_g - (e_pair_var_lambda + var_pair_g1)
  double residual_lambda_identity = 0.0;  // var_g - (e_lambda_var_pair + var_lambda_g2)
};

/// Frozen tiny problem on which every expectation is a finite sum: ordered
/// pairs uniform with replacement over `data` (self-pairs included), mixing
/// weights from the discrete distribution.
struct ExactProblem {
  Mlp net;
  std::vector<Sample> data;
  DiscreteWeightDist weights;
  double l2 = 0.0;
};

/// All per-(pair, atom) gradients plus the moments the closed forms need.
/// Costs n^2 * atoms gradient evaluations.
struct ExactStats {
  int n = 0;
  int atoms = 0;
  int dim = 0;
  std::vector<double> mean_grad;  // = grad of the mixup loss
  DecompositionReport decomposition;
};

ExactStats compute_exact_stats(const ExactProblem& problem);

/// Closed-form Var[g~] for the multi-mix estimator: one lambda K-tuple per
/// batch shared by the B pairs, as in the variance derivation.
double closed_form_var_multimix(const ExactStats& stats, int k, int b);

/// Closed-form Var[g~'] for large-batch mixup (one shared lambda, K*B pairs).
double closed_form_var_largebatch(const ExactStats& stats, int k, int b);

/// Direct enumeration over the estimator's full outcome distribution
/// (atoms^K lambda tuples x (n^2)^B pair tuples). Guarded: throws when the
/// outcome count would exceed `max_outcomes`.
double enumerate_var_multimix(const ExactProblem& problem, int k, int b,
                              long long max_outcomes = 10'000'000);
double enumerate_var_largebatch(const ExactProblem& problem, int k, int b,
                                long long max_outcomes = 10'000'000);

/// E[g~] by enumeration; equals mean_grad for any K, B.
std::vector<double> enumerate_mean_multimix(const ExactProblem& problem, int k, int b,
                                            long long max_outcomes = 10'000'000);
std::vector<double> enumerate_mean_largebatch(const ExactProblem& problem, int k, int b,
                                              long long max_outcomes = 10'000'000);

/// Monte Carlo sampler configuration. `dataset` outlives the config.
struct SamplerConfig {
  const Mlp* net = nullptr;
  const std::vector<Sample>* dataset = nullptr;
  double alpha = 1.0;
  int k = 1;
  int b = 1;
  double l2 = 0.0;
  MixerKind mixer = MixerKind::Input;
  std::vector<int> mix_layers = {0};  // candidate s; one drawn per batch
  bool shared_seq_across_pairs = false;
  int puzzle_d = 4;                   // puzzle mixer only
  int grid_w = 4, grid_h = 4;
};

/// One realization of the multi-mix gradient (Eq. of the batch loss): B
/// uniformly drawn ordered pairs, a K-weight sequence per pair (or one
/// shared sequence when configured), gradient averaged over all K*B mixed
/// samples.
GradSample grad_multimix(const SamplerConfig& config, Rng& rng);

/// One realization of the large-batch mixup gradient: K*B pairs, one shared
/// lambda ~ Beta(alpha, alpha).
GradSample grad_largebatch_mixup(const SamplerConfig& config, Rng& rng);

using GradSampler = std::function<GradSample(Rng&)>;

/// R independent draws; unbiased variance estimate with percentile-bootstrap
/// 95% CIs (1000 resamples) for both the variance and the mean squared norm.
VarianceReport estimate_variance(const GradSampler& sampler, int replicates, Rng& rng);

struct Prop1Row {
  int k = 0;
  double variance = 0.0;
};

struct Prop1Report {
  std::vector<Prop1Row> rows;
  bool non_increasing = true;
  bool strictly_decreasing = true;
};

/// Exact Var[g~] across the K list; flags monotonicity violations.
Prop1Report check_proposition1(const ExactProblem& problem, const std::vector<int>& k_list,
                               int b);

struct Prop2Row {
  int b = 0;
  double var_multimix = 0.0;
  double var_largebatch = 0.0;
  bool multimix_no_worse = false;  // Var[g~] <= Var[g~']
  bool predicted_no_worse = false; // B >= B0
};

struct Prop2Report {
  double b0 = 0.0;          // Var_pair[g1] / Var_lambda[g2]
  bool threshold_defined = true;  // false when Var_lambda[g2] = 0
  std::vector<Prop2Row> rows;
  bool equivalence_holds = true;  // comparison matches the B0 prediction everywhere
};

Prop2Report check_proposition2(const ExactProblem& problem, int k,
                               const std::vector<int>& b_list, double tol = 1e-10);

/// Compensated (Kahan) summation helper used by the collectors.
struct KahanSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

}  // namespace multimix

#endif  // MULTIMIX_VARIANCE_HPP
