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

#include "multimix/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace multimix {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t s = seed;
  for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

std::uint64_t Rng::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  // rejection to avoid modulo bias
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = next_double();
  while (u1 <= 0.0) u1 = next_double();
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

std::vector<int> Rng::permutation(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(p[i], p[j]);
  }
  return p;
}

Rng Rng::substream(std::uint64_t stream_id) const {
  std::uint64_t s = seed_;
  std::uint64_t h = splitmix64(s);
  s = h ^ (stream_id + 0x9e3779b97f4a7c15ULL);
  h = splitmix64(s);
  return Rng(h ^ stream_id);
}

double sample_gamma(Rng& rng, double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("sample_gamma: shape must be positive");
  if (shape < 1.0) {
    // boost: G(a) = G(a+1) * U^{1/a}
    double u = rng.next_double();
    while (u <= 0.0) u = rng.next_double();
    return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_beta(Rng& rng, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("sample_beta: alpha must be positive");
  const double g1 = sample_gamma(rng, alpha);
  const double g2 = sample_gamma(rng, alpha);
  double x = g1 / (g1 + g2);
  const double eps = std::numeric_limits<double>::epsilon();
  if (!(x > 0.0)) x = eps;
  if (!(x < 1.0)) x = 1.0 - eps;
  return x;
}

std::vector<double> sample_ordered_weights(Rng& rng, double alpha, int k) {
  if (k < 1) throw std::invalid_argument("sample_ordered_weights: k must be >= 1");
  std::vector<double> w(k);
  for (auto& v : w) v = sample_beta(rng, alpha);
  std::sort(w.begin(), w.end());
  for (int i = 1; i < k; ++i) {
    while (w[i] <= w[i - 1]) w[i] = std::nextafter(w[i - 1], 2.0);
  }
  return w;
}

double DiscreteWeightDist::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
  return m;
}

double beta_pdf(double alpha, double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double log_norm = std::lgamma(2.0 * alpha) - 2.0 * std::lgamma(alpha);
  return std::exp(log_norm + (alpha - 1.0) * (std::log(x) + std::log1p(-x)));
}

namespace {

// Continued fraction for the incomplete beta function (Lentz).
double betacf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h;
}

}  // namespace

double beta_cdf(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

DiscreteWeightDist discretize_beta(double alpha, int n_atoms) {
  if (!(alpha > 0.0)) throw std::invalid_argument("discretize_beta: alpha must be positive");
  if (n_atoms < 1) throw std::invalid_argument("discretize_beta: n_atoms must be >= 1");
  DiscreteWeightDist dist;
  dist.values.resize(n_atoms);
  dist.probs.resize(n_atoms);
  double total = 0.0;
  for (int i = 0; i < n_atoms; ++i) {
    const double lo = static_cast<double>(i) / n_atoms;
    const double hi = static_cast<double>(i + 1) / n_atoms;
    dist.values[i] = 0.5 * (lo + hi);
    dist.probs[i] = beta_cdf(alpha, alpha, hi) - beta_cdf(alpha, alpha, lo);
    total += dist.probs[i];
  }
  // masses are exact up to the cdf's own tolerance; renormalize the residual
  for (auto& p : dist.probs) p /= total;
  return dist;
}

double binomial_pmf(int d, int t, double p) {
  if (t < 0 || t > d) return 0.0;
  const double log_choose =
      std::lgamma(d + 1.0) - std::lgamma(t + 1.0) - std::lgamma(d - t + 1.0);
  double log_p = log_choose;
  if (t > 0) log_p += t * std::log(p);
  if (d - t > 0) log_p += (d - t) * std::log1p(-p);
  return std::exp(log_p);
}

}  // namespace multimix
