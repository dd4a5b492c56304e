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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "multimix/variance.hpp"

using namespace multimix;

namespace {

// Canonical tiny problem: 4 points in 2D, 2 classes, logistic model (linear
// softmax), 3 mixing-weight atoms.
ExactProblem canonical_problem() {
  ExactProblem problem;
  Rng rng(1001);
  problem.net = Mlp::init({2, 2}, rng);
  const double coords[4][2] = {{1.0, 0.4}, {-0.8, 0.9}, {0.2, -1.1}, {-0.5, -0.3}};
  for (int i = 0; i < 4; ++i) {
    Sample s;
    s.features = {coords[i][0], coords[i][1]};
    s.label = (i % 2 == 0) ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0};
    problem.data.push_back(s);
  }
  problem.weights = discretize_beta(1.0, 3);
  return problem;
}

ExactProblem random_tiny_problem(Rng& rng) {
  ExactProblem problem;
  const int n = 3 + static_cast<int>(rng.next_below(3));
  const int classes = 2 + static_cast<int>(rng.next_below(2));
  const bool hidden = rng.next_below(2) == 0;
  std::vector<int> widths =
      hidden ? std::vector<int>{2, 4, classes} : std::vector<int>{2, classes};
  problem.net = Mlp::init(widths, rng);
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.features = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
    s.label.assign(classes, 0.0);
    s.label[rng.next_below(classes)] = 1.0;
    problem.data.push_back(s);
  }
  problem.weights = discretize_beta(0.2 + 2.0 * rng.next_double(),
                                    3 + static_cast<int>(rng.next_below(3)));
  return problem;
}

}  // namespace

TEST_CASE("decoupling identities hold to 1e-10 on the canonical problem") {
  const ExactStats stats = compute_exact_stats(canonical_problem());
  const auto& d = stats.decomposition;
  CHECK(d.var_g >= 0.0);
  CHECK(d.var_pair_g1 >= 0.0);
  CHECK(d.var_lambda_g2 >= 0.0);
  CHECK(d.e_pair_var_lambda >= 0.0);
  CHECK(d.e_lambda_var_pair >= 0.0);
  CHECK(std::fabs(d.residual_pair_identity) < 1e-10);
  CHECK(std::fabs(d.residual_lambda_identity) < 1e-10);
}

TEST_CASE("closed form equals direct estimator enumeration within 1e-10") {
  const ExactProblem problem = canonical_problem();
  const ExactStats stats = compute_exact_stats(problem);
  for (const auto& [k, b] : std::vector<std::pair<int, int>>{{1, 1}, {2, 1}, {3, 1}, {2, 2}, {1, 2}}) {
    const double closed = closed_form_var_multimix(stats, k, b);
    const double direct = enumerate_var_multimix(problem, k, b);
    CHECK(std::fabs(closed - direct) < 1e-10);
  }
  for (const auto& [k, b] : std::vector<std::pair<int, int>>{{1, 1}, {2, 1}, {1, 2}, {2, 2}}) {
    const double closed = closed_form_var_largebatch(stats, k, b);
    const double direct = enumerate_var_largebatch(problem, k, b);
    CHECK(std::fabs(closed - direct) < 1e-10);
  }
}

TEST_CASE("K=1 reduction and the single-atom degenerate distribution") {
  const ExactProblem problem = canonical_problem();
  const ExactStats stats = compute_exact_stats(problem);
  const auto& d = stats.decomposition;
  for (int b : {1, 2, 5}) {
    const double expected = (1.0 / b) * d.var_g + (static_cast<double>(b - 1) / b) * d.var_lambda_g2;
    CHECK(closed_form_var_multimix(stats, 1, b) == doctest::Approx(expected).epsilon(1e-15));
  }

  ExactProblem degenerate = problem;
  degenerate.weights.values = {0.37};
  degenerate.weights.probs = {1.0};
  const ExactStats dstats = compute_exact_stats(degenerate);
  CHECK(dstats.decomposition.var_lambda_g2 < 1e-14);
  CHECK(dstats.decomposition.e_pair_var_lambda < 1e-14);
  for (int b : {1, 3}) {
    const double floor = dstats.decomposition.var_pair_g1 / b;
    for (int k : {1, 2, 8}) {
      CHECK(closed_form_var_multimix(dstats, k, b) == doctest::Approx(floor).epsilon(1e-10));
    }
  }
}

TEST_CASE("unbiasedness: estimator means equal the mixup-loss gradient") {
  const ExactProblem problem = canonical_problem();
  const ExactStats stats = compute_exact_stats(problem);
  for (const auto& [k, b] : std::vector<std::pair<int, int>>{{1, 1}, {2, 2}, {3, 1}}) {
    const auto mean = enumerate_mean_multimix(problem, k, b);
    REQUIRE(mean.size() == stats.mean_grad.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
      CHECK(std::fabs(mean[i] - stats.mean_grad[i]) < 1e-12);
    }
  }
  const auto mean_lb = enumerate_mean_largebatch(problem, 2, 2);
  for (std::size_t i = 0; i < mean_lb.size(); ++i) {
    CHECK(std::fabs(mean_lb[i] - stats.mean_grad[i]) < 1e-12);
  }
}

TEST_CASE("proposition 1: exact variance strictly decreases in K") {
  const Prop1Report report = check_proposition1(canonical_problem(), {1, 2, 4, 8}, 2);
  REQUIRE(report.rows.size() == 4);
  CHECK(report.non_increasing);
  CHECK(report.strictly_decreasing);
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    CHECK(report.rows[i].variance < report.rows[i - 1].variance - 1e-12);
  }
}

TEST_CASE("proposition 1: monotone on randomized tiny problems") {
  Rng rng(4242);
  for (int trial = 0; trial < 20; ++trial) {
    const ExactProblem problem = random_tiny_problem(rng);
    const Prop1Report report = check_proposition1(problem, {1, 2, 4, 8}, 1 + (trial % 3));
    CHECK(report.non_increasing);
  }
}

TEST_CASE("proposition 1: degenerate weight distribution keeps variance constant") {
  ExactProblem problem = canonical_problem();
  problem.weights.values = {0.5};
  problem.weights.probs = {1.0};
  const Prop1Report report = check_proposition1(problem, {1, 2, 4}, 2);
  CHECK(report.non_increasing);
  CHECK_FALSE(report.strictly_decreasing);
  CHECK(report.rows[0].variance == doctest::Approx(report.rows[2].variance).epsilon(1e-12));
}

TEST_CASE("proposition 2: threshold B0 separates the comparison") {
  const ExactProblem problem = canonical_problem();
  const ExactStats stats = compute_exact_stats(problem);
  const double b0 = stats.decomposition.var_pair_g1 / stats.decomposition.var_lambda_g2;
  const int above = static_cast<int>(std::ceil(b0)) + 1;
  const Prop2Report report = check_proposition2(problem, 4, {1, 2, above, 4 * above});
  CHECK(report.threshold_defined);
  CHECK(report.b0 == doctest::Approx(b0));
  CHECK(report.equivalence_holds);
  CHECK_FALSE(report.rows.front().multimix_no_worse);  // B = 1 sits below B0 here
  CHECK(report.rows[2].multimix_no_worse);             // just above B0
  CHECK(report.rows.back().multimix_no_worse);
}

TEST_CASE("proposition 2: engineered B0 > 1 reverses the comparison at B=1") {
  // widely separated data (large pair variance) with nearly degenerate
  // mixing weights (small lambda variance) forces B0 above 1
  ExactProblem problem = canonical_problem();
  for (int i = 0; i < 4; ++i) {
    for (auto& f : problem.data[i].features) f *= 3.0;
  }
  problem.weights.values = {0.48, 0.5, 0.52};
  problem.weights.probs = {0.25, 0.5, 0.25};
  const ExactStats stats = compute_exact_stats(problem);
  const double b0 = stats.decomposition.var_pair_g1 / stats.decomposition.var_lambda_g2;
  REQUIRE(b0 > 1.0);
  const int above = static_cast<int>(std::ceil(b0)) + 1;
  const Prop2Report report = check_proposition2(problem, 2, {1, 2, 4, above});
  CHECK(report.equivalence_holds);
  CHECK_FALSE(report.rows.front().multimix_no_worse);  // B=1: multi-mix is worse
  CHECK(report.rows.back().multimix_no_worse);         // and recovers above B0
}

TEST_CASE("proposition 2: equality at an engineered integer B0") {
  // B0 falls monotonically as the atom spread widens; bisect the spread so
  // that B0 lands exactly on an integer, then the two closed forms must agree
  // at that batch size
  ExactProblem problem = canonical_problem();
  const auto b0_for = [&](double spread) {
    problem.weights.values = {0.5 - spread, 0.5, 0.5 + spread};
    problem.weights.probs = {0.25, 0.5, 0.25};
    const ExactStats stats = compute_exact_stats(problem);
    return stats.decomposition.var_pair_g1 / stats.decomposition.var_lambda_g2;
  };
  const double target = 100.0;
  double lo = 0.30, hi = 0.49;  // b0(0.30) ~ 179, b0(0.49) ~ 28
  REQUIRE(b0_for(lo) > target);
  REQUIRE(b0_for(hi) < target);
  for (int iter = 0; iter < 100; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (b0_for(mid) > target ? lo : hi) = mid;
  }
  b0_for(0.5 * (lo + hi));
  const ExactStats stats = compute_exact_stats(problem);
  const double vm = closed_form_var_multimix(stats, 3, 100);
  const double vl = closed_form_var_largebatch(stats, 3, 100);
  CHECK(std::fabs(vm - vl) < 1e-10);
}

TEST_CASE("cost parity: both estimators spend exactly K*B gradient evaluations") {
  const ExactProblem problem = canonical_problem();
  SamplerConfig config;
  config.net = &problem.net;
  config.dataset = &problem.data;
  Rng rng(7);
  for (const auto& [k, b] : std::vector<std::pair<int, int>>{{1, 1}, {3, 2}, {5, 4}}) {
    config.k = k;
    config.b = b;
    CHECK(grad_multimix(config, rng).eval_count == static_cast<long>(k) * b);
    CHECK(grad_largebatch_mixup(config, rng).eval_count == static_cast<long>(k) * b);
  }
}

TEST_CASE("multi-mix gradient: K=1, B=1 equals the single mixed sample's gradient") {
  const ExactProblem problem = canonical_problem();
  SamplerConfig config;
  config.net = &problem.net;
  config.dataset = &problem.data;
  config.k = 1;
  config.b = 1;
  Rng rng(99);
  const GradSample g = grad_multimix(config, rng);
  CHECK(g.grad.size() == static_cast<std::size_t>(problem.net.num_params()));
  CHECK(g.sq_norm == doctest::Approx([&] {
          double s = 0.0;
          for (double v : g.grad) s += v * v;
          return s;
        }()).epsilon(1e-12));
}

TEST_CASE("self-pair contribution ignores lambda") {
  // pair (i, i): gradient equals the plain gradient on x_i for any lambda
  const ExactProblem problem = canonical_problem();
  std::vector<Sample> single{problem.data[0]};
  SamplerConfig config;
  config.net = &problem.net;
  config.dataset = &single;
  config.k = 4;
  config.b = 1;
  Rng rng1(5), rng2(6);
  const GradSample g1 = grad_multimix(config, rng1);
  const GradSample g2 = grad_multimix(config, rng2);
  for (std::size_t i = 0; i < g1.grad.size(); ++i) {
    CHECK(g1.grad[i] == doctest::Approx(g2.grad[i]).epsilon(1e-10));
  }
}

TEST_CASE("estimate_variance: deterministic sampler has zero variance") {
  const ExactProblem problem = canonical_problem();
  std::vector<Sample> single{problem.data[1]};
  SamplerConfig config;
  config.net = &problem.net;
  config.dataset = &single;
  config.k = 1;
  config.b = 1;
  Rng rng(11);
  const VarianceReport report = estimate_variance(
      [&](Rng& r) { return grad_multimix(config, r); }, 50, rng);
  CHECK(report.variance < 1e-20);
  CHECK(report.ci_lo <= report.variance);
  CHECK(report.variance <= report.ci_hi);
}

TEST_CASE("estimate_variance: CI separation between K=1 and K=8") {
  const ExactProblem problem = canonical_problem();
  SamplerConfig config;
  config.net = &problem.net;
  config.dataset = &problem.data;
  config.b = 2;
  Rng rng(123);
  config.k = 1;
  const VarianceReport v1 = estimate_variance(
      [&](Rng& r) { return grad_multimix(config, r); }, 2000, rng);
  config.k = 8;
  Rng rng2(456);
  const VarianceReport v8 = estimate_variance(
      [&](Rng& r) { return grad_multimix(config, r); }, 2000, rng2);
  CHECK(v8.variance < v1.variance);
  CHECK(v8.ci_hi < v1.ci_lo);  // non-overlapping 95% CIs
  CHECK(v1.ci_lo <= v1.variance);
  CHECK(v1.variance <= v1.ci_hi);
}

TEST_CASE("estimate_variance: large K approaches the pair-variance floor") {
  const ExactProblem base = canonical_problem();
  ExactProblem fine = base;
  fine.weights = discretize_beta(1.0, 200);  // proxy for the continuous Beta
  const ExactStats stats = compute_exact_stats(fine);
  const double floor = stats.decomposition.var_pair_g1;  // B = 1
  SamplerConfig config;
  config.net = &base.net;
  config.dataset = &base.data;
  config.k = 64;
  config.b = 1;
  config.alpha = 1.0;
  Rng rng(31337);
  const VarianceReport report = estimate_variance(
      [&](Rng& r) { return grad_multimix(config, r); }, 3000, rng);
  const double exact_k64 = closed_form_var_multimix(stats, 64, 1);
  CHECK(std::fabs(report.variance - exact_k64) < 0.15 * exact_k64);
  CHECK(report.variance < 1.3 * exact_k64);
  CHECK(report.variance > floor * 0.85);
}

TEST_CASE("doubling replicates roughly halves the CI width") {
  const ExactProblem problem = canonical_problem();
  SamplerConfig config;
  config.net = &problem.net;
  config.dataset = &problem.data;
  config.k = 2;
  config.b = 2;
  Rng rng(2025);
  const VarianceReport small = estimate_variance(
      [&](Rng& r) { return grad_multimix(config, r); }, 500, rng);
  Rng rng2(2026);
  const VarianceReport big = estimate_variance(
      [&](Rng& r) { return grad_multimix(config, r); }, 2000, rng2);
  const double w_small = small.ci_hi - small.ci_lo;
  const double w_big = big.ci_hi - big.ci_lo;
  CHECK(w_big < w_small);  // loose Monte Carlo scaling check
}

TEST_CASE("guards and parameter errors") {
  const ExactProblem problem = canonical_problem();
  CHECK_THROWS(enumerate_var_multimix(problem, 8, 8));
  CHECK_THROWS(check_proposition1(problem, {2, 2}, 1));
  CHECK_THROWS(check_proposition2(problem, 1, {1}));
  SamplerConfig config;
  config.net = &problem.net;
  config.dataset = &problem.data;
  Rng rng(1);
  CHECK_THROWS(estimate_variance([&](Rng& r) { return grad_multimix(config, r); }, 1, rng));
}
