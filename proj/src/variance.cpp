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

#include "multimix/variance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace multimix {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  KahanSum s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s.add(d * d);
  }
  return s.sum;
}

double sq_norm_of(const std::vector<double>& a) {
  KahanSum s;
  for (double v : a) s.add(v * v);
  return s.sum;
}

Matrix rows_to_matrix(const std::vector<const std::vector<double>*>& rows) {
  if (rows.empty()) throw std::invalid_argument("empty batch");
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front()->size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i]->begin(), rows[i]->end(), m.row(static_cast<int>(i)));
  }
  return m;
}

// Gradient of the loss on one mixed sample (features already mixed).
std::vector<double> grad_of_mixed(const Mlp& net, const std::vector<double>& features,
                                  const std::vector<double>& label, double l2) {
  Matrix x(1, static_cast<int>(features.size()));
  std::copy(features.begin(), features.end(), x.row(0));
  Matrix y(1, static_cast<int>(label.size()));
  std::copy(label.begin(), label.end(), y.row(0));
  const ForwardTrace trace = forward(net, x);
  return backward(net, trace, y, l2);
}

// All per-(pair, atom) gradients: table[(i*n + j)*atoms + a].
std::vector<std::vector<double>> build_grad_table(const ExactProblem& problem) {
  const int n = static_cast<int>(problem.data.size());
  const int atoms = static_cast<int>(problem.weights.values.size());
  std::vector<std::vector<double>> table;
  table.reserve(static_cast<std::size_t>(n) * n * atoms);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int a = 0; a < atoms; ++a) {
        const double lam = problem.weights.values[a];
        const std::vector<double> xf =
            mix(problem.data[i].features, problem.data[j].features, lam);
        const std::vector<double> yl = mix(problem.data[i].label, problem.data[j].label, lam);
        table.push_back(grad_of_mixed(problem.net, xf, yl, problem.l2));
      }
    }
  }
  return table;
}

std::vector<double> weighted_mean(const std::vector<std::vector<double>>& vecs,
                                  const std::vector<double>& probs) {
  const std::size_t dim = vecs.front().size();
  std::vector<KahanSum> acc(dim);
  for (std::size_t v = 0; v < vecs.size(); ++v) {
    for (std::size_t i = 0; i < dim; ++i) acc[i].add(probs[v] * vecs[v][i]);
  }
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = acc[i].sum;
  return out;
}

long long ipow_guarded(long long base, int exp, long long limit) {
  long long r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > limit / base) return limit + 1;
    r *= base;
  }
  return r;
}

struct EnumContext {
  const ExactProblem* problem;
  std::vector<std::vector<double>> table;  // per (pair, atom)
  int n = 0, atoms = 0, dim = 0;
};

EnumContext make_context(const ExactProblem& problem) {
  EnumContext ctx;
  ctx.problem = &problem;
  ctx.table = build_grad_table(problem);
  ctx.n = static_cast<int>(problem.data.size());
  ctx.atoms = static_cast<int>(problem.weights.values.size());
  ctx.dim = static_cast<int>(ctx.table.front().size());
  return ctx;
}

// Walk the multi-mix estimator's full outcome distribution: one lambda
// K-tuple shared by the B pairs of a batch, pairs i.i.d. uniform over the n^2
// ordered pairs. Calls visit(prob, g_tilde) for every outcome.
template <typename Visit>
void enumerate_multimix(const EnumContext& ctx, int k, int b, long long max_outcomes,
                        Visit visit) {
  const int pairs = ctx.n * ctx.n;
  const long long lam_count = ipow_guarded(ctx.atoms, k, max_outcomes);
  const long long pair_count = ipow_guarded(pairs, b, max_outcomes);
  if (lam_count > max_outcomes || pair_count > max_outcomes ||
      lam_count > max_outcomes / pair_count) {
    throw std::runtime_error("enumeration guard exceeded: need " +
                             std::to_string(ctx.atoms) + "^" + std::to_string(k) + " * " +
                             std::to_string(pairs) + "^" + std::to_string(b) + " outcomes");
  }
  const double pair_prob = 1.0 / pairs;
  std::vector<int> lam_idx(k, 0);
  std::vector<double> q;  // per pair: (1/K) sum_k g(pair, lambda_k)
  std::vector<double> g_tilde(ctx.dim);
  for (long long li = 0; li < lam_count; ++li) {
    double lam_prob = 1.0;
    for (int t = 0; t < k; ++t) lam_prob *= ctx.problem->weights.probs[lam_idx[t]];
    // q(pair) for this lambda tuple
    q.assign(static_cast<std::size_t>(pairs) * ctx.dim, 0.0);
    for (int p = 0; p < pairs; ++p) {
      double* qp = q.data() + static_cast<std::size_t>(p) * ctx.dim;
      for (int t = 0; t < k; ++t) {
        const auto& g = ctx.table[static_cast<std::size_t>(p) * ctx.atoms + lam_idx[t]];
        for (int i = 0; i < ctx.dim; ++i) qp[i] += g[i];
      }
      for (int i = 0; i < ctx.dim; ++i) qp[i] /= k;
    }
    std::vector<int> pair_idx(b, 0);
    for (long long pi = 0; pi < pair_count; ++pi) {
      std::fill(g_tilde.begin(), g_tilde.end(), 0.0);
      for (int t = 0; t < b; ++t) {
        const double* qp = q.data() + static_cast<std::size_t>(pair_idx[t]) * ctx.dim;
        for (int i = 0; i < ctx.dim; ++i) g_tilde[i] += qp[i];
      }
      for (int i = 0; i < ctx.dim; ++i) g_tilde[i] /= b;
      double prob = lam_prob;
      for (int t = 0; t < b; ++t) prob *= pair_prob;
      visit(prob, g_tilde);
      // next pair tuple
      for (int t = 0; t < b; ++t) {
        if (++pair_idx[t] < pairs) break;
        pair_idx[t] = 0;
      }
    }
    for (int t = 0; t < k; ++t) {
      if (++lam_idx[t] < ctx.atoms) break;
      lam_idx[t] = 0;
    }
  }
}

// Large-batch mixup: one lambda atom, K*B i.i.d. pairs.
template <typename Visit>
void enumerate_largebatch(const EnumContext& ctx, int k, int b, long long max_outcomes,
                          Visit visit) {
  const int pairs = ctx.n * ctx.n;
  const int kb = k * b;
  const long long pair_count = ipow_guarded(pairs, kb, max_outcomes);
  if (pair_count > max_outcomes || pair_count > max_outcomes / ctx.atoms) {
    throw std::runtime_error("enumeration guard exceeded: need " +
                             std::to_string(ctx.atoms) + " * " + std::to_string(pairs) + "^" +
                             std::to_string(kb) + " outcomes");
  }
  const double pair_prob = 1.0 / pairs;
  std::vector<double> g_tilde(ctx.dim);
  for (int a = 0; a < ctx.atoms; ++a) {
    const double lam_prob = ctx.problem->weights.probs[a];
    std::vector<int> pair_idx(kb, 0);
    for (long long pi = 0; pi < pair_count; ++pi) {
      std::fill(g_tilde.begin(), g_tilde.end(), 0.0);
      for (int t = 0; t < kb; ++t) {
        const auto& g = ctx.table[static_cast<std::size_t>(pair_idx[t]) * ctx.atoms + a];
        for (int i = 0; i < ctx.dim; ++i) g_tilde[i] += g[i];
      }
      for (int i = 0; i < ctx.dim; ++i) g_tilde[i] /= kb;
      double prob = lam_prob;
      for (int t = 0; t < kb; ++t) prob *= pair_prob;
      visit(prob, g_tilde);
      for (int t = 0; t < kb; ++t) {
        if (++pair_idx[t] < pairs) break;
        pair_idx[t] = 0;
      }
    }
  }
}

}  // namespace

ExactStats compute_exact_stats(const ExactProblem& problem) {
  if (problem.data.empty()) throw std::invalid_argument("compute_exact_stats: empty dataset");
  const EnumContext ctx = make_context(problem);
  const int pairs = ctx.n * ctx.n;

  std::vector<double> probs(ctx.table.size());
  for (int p = 0; p < pairs; ++p) {
    for (int a = 0; a < ctx.atoms; ++a) {
      probs[static_cast<std::size_t>(p) * ctx.atoms + a] =
          problem.weights.probs[a] / pairs;
    }
  }
  ExactStats stats;
  stats.n = ctx.n;
  stats.atoms = ctx.atoms;
  stats.dim = ctx.dim;
  stats.mean_grad = weighted_mean(ctx.table, probs);

  DecompositionReport& dec = stats.decomposition;

  KahanSum var_g;
  for (std::size_t v = 0; v < ctx.table.size(); ++v) {
    var_g.add(probs[v] * sq_dist(ctx.table[v], stats.mean_grad));
  }
  dec.var_g = var_g.sum;

  // g1(pair) = E_lambda g; g2(lambda) = E_pair g
  KahanSum var_pair, e_pair_var_lam;
  for (int p = 0; p < pairs; ++p) {
    std::vector<KahanSum> g1(ctx.dim);
    for (int a = 0; a < ctx.atoms; ++a) {
      const auto& g = ctx.table[static_cast<std::size_t>(p) * ctx.atoms + a];
      for (int i = 0; i < ctx.dim; ++i) g1[i].add(problem.weights.probs[a] * g[i]);
    }
    std::vector<double> g1v(ctx.dim);
    for (int i = 0; i < ctx.dim; ++i) g1v[i] = g1[i].sum;
    var_pair.add(sq_dist(g1v, stats.mean_grad) / pairs);
    for (int a = 0; a < ctx.atoms; ++a) {
      const auto& g = ctx.table[static_cast<std::size_t>(p) * ctx.atoms + a];
      e_pair_var_lam.add(problem.weights.probs[a] * sq_dist(g, g1v) / pairs);
    }
  }
  dec.var_pair_g1 = var_pair.sum;
  dec.e_pair_var_lambda = e_pair_var_lam.sum;

  KahanSum var_lam, e_lam_var_pair;
  for (int a = 0; a < ctx.atoms; ++a) {
    std::vector<KahanSum> g2(ctx.dim);
    for (int p = 0; p < pairs; ++p) {
      const auto& g = ctx.table[static_cast<std::size_t>(p) * ctx.atoms + a];
      for (int i = 0; i < ctx.dim; ++i) g2[i].add(g[i] / pairs);
    }
    std::vector<double> g2v(ctx.dim);
    for (int i = 0; i < ctx.dim; ++i) g2v[i] = g2[i].sum;
    var_lam.add(problem.weights.probs[a] * sq_dist(g2v, stats.mean_grad));
    for (int p = 0; p < pairs; ++p) {
      const auto& g = ctx.table[static_cast<std::size_t>(p) * ctx.atoms + a];
      e_lam_var_pair.add(problem.weights.probs[a] * sq_dist(g, g2v) / pairs);
    }
  }
  dec.var_lambda_g2 = var_lam.sum;
  dec.e_lambda_var_pair = e_lam_var_pair.sum;

  dec.residual_pair_identity = dec.var_g - (dec.e_pair_var_lambda + dec.var_pair_g1);
  dec.residual_lambda_identity = dec.var_g - (dec.e_lambda_var_pair + dec.var_lambda_g2);
  return stats;
}

double closed_form_var_multimix(const ExactStats& stats, int k, int b) {
  if (k < 1 || b < 1) throw std::invalid_argument("closed_form_var_multimix: k, b must be >= 1");
  const auto& d = stats.decomposition;
  return (1.0 / k) * ((1.0 / b) * d.var_g + (static_cast<double>(b - 1) / b) * d.var_lambda_g2) +
         (1.0 - 1.0 / k) * (1.0 / b) * d.var_pair_g1;
}

double closed_form_var_largebatch(const ExactStats& stats, int k, int b) {
  if (k < 1 || b < 1) throw std::invalid_argument("closed_form_var_largebatch: k, b must be >= 1");
  const auto& d = stats.decomposition;
  const double kb = static_cast<double>(k) * b;
  return (1.0 / kb) * (d.var_g + (kb - 1.0) * d.var_lambda_g2);
}

double enumerate_var_multimix(const ExactProblem& problem, int k, int b,
                              long long max_outcomes) {
  const EnumContext ctx = make_context(problem);
  // mean first (equals the mixup-loss gradient; recomputed here to keep this
  // route fully independent of compute_exact_stats)
  std::vector<KahanSum> mean(ctx.dim);
  enumerate_multimix(ctx, k, b, max_outcomes, [&](double prob, const std::vector<double>& g) {
    for (int i = 0; i < ctx.dim; ++i) mean[i].add(prob * g[i]);
  });
  std::vector<double> mean_v(ctx.dim);
  for (int i = 0; i < ctx.dim; ++i) mean_v[i] = mean[i].sum;
  KahanSum var;
  enumerate_multimix(ctx, k, b, max_outcomes, [&](double prob, const std::vector<double>& g) {
    var.add(prob * sq_dist(g, mean_v));
  });
  return var.sum;
}

double enumerate_var_largebatch(const ExactProblem& problem, int k, int b,
                                long long max_outcomes) {
  const EnumContext ctx = make_context(problem);
  std::vector<KahanSum> mean(ctx.dim);
  enumerate_largebatch(ctx, k, b, max_outcomes, [&](double prob, const std::vector<double>& g) {
    for (int i = 0; i < ctx.dim; ++i) mean[i].add(prob * g[i]);
  });
  std::vector<double> mean_v(ctx.dim);
  for (int i = 0; i < ctx.dim; ++i) mean_v[i] = mean[i].sum;
  KahanSum var;
  enumerate_largebatch(ctx, k, b, max_outcomes, [&](double prob, const std::vector<double>& g) {
    var.add(prob * sq_dist(g, mean_v));
  });
  return var.sum;
}

std::vector<double> enumerate_mean_multimix(const ExactProblem& problem, int k, int b,
                                            long long max_outcomes) {
  const EnumContext ctx = make_context(problem);
  std::vector<KahanSum> mean(ctx.dim);
  enumerate_multimix(ctx, k, b, max_outcomes, [&](double prob, const std::vector<double>& g) {
    for (int i = 0; i < ctx.dim; ++i) mean[i].add(prob * g[i]);
  });
  std::vector<double> out(ctx.dim);
  for (int i = 0; i < ctx.dim; ++i) out[i] = mean[i].sum;
  return out;
}

std::vector<double> enumerate_mean_largebatch(const ExactProblem& problem, int k, int b,
                                              long long max_outcomes) {
  const EnumContext ctx = make_context(problem);
  std::vector<KahanSum> mean(ctx.dim);
  enumerate_largebatch(ctx, k, b, max_outcomes, [&](double prob, const std::vector<double>& g) {
    for (int i = 0; i < ctx.dim; ++i) mean[i].add(prob * g[i]);
  });
  std::vector<double> out(ctx.dim);
  for (int i = 0; i < ctx.dim; ++i) out[i] = mean[i].sum;
  return out;
}

namespace {

void check_sampler_config(const SamplerConfig& config) {
  if (!config.net || !config.dataset || config.dataset->empty()) {
    throw std::invalid_argument("sampler: net and a nonempty dataset are required");
  }
  if (config.k < 1 || config.b < 1) throw std::invalid_argument("sampler: k, b must be >= 1");
}

// Gradient over a batch of region-mixed samples (cutmix / puzzle).
GradSample grad_region_mixed(const SamplerConfig& config, Rng& rng,
                             const std::vector<std::pair<int, int>>& pair_ids,
                             const std::vector<std::vector<double>>& seqs) {
  const auto& data = *config.dataset;
  std::vector<MixedSample> all;
  for (std::size_t p = 0; p < pair_ids.size(); ++p) {
    const Sample& a = data[pair_ids[p].first];
    const Sample& b = data[pair_ids[p].second];
    std::vector<MixedSample> mixed;
    if (config.mixer == MixerKind::Cutmix) {
      mixed = cut_multimix(a, b, seqs[p], rng, nullptr, pair_ids[p].first, pair_ids[p].second);
    } else {
      mixed = puzzle_multimix(a, b, seqs[p], rng, config.puzzle_d, config.grid_w,
                              config.grid_h, nullptr, pair_ids[p].first, pair_ids[p].second);
    }
    for (auto& m : mixed) all.push_back(std::move(m));
  }
  std::vector<const std::vector<double>*> xrows, yrows;
  for (const auto& m : all) {
    xrows.push_back(&m.features);
    yrows.push_back(&m.label);
  }
  const Matrix x = rows_to_matrix(xrows);
  const Matrix y = rows_to_matrix(yrows);
  const ForwardTrace trace = forward(*config.net, x);
  GradSample out;
  out.grad = backward(*config.net, trace, y, config.l2);
  return out;
}

}  // namespace

GradSample grad_multimix(const SamplerConfig& config, Rng& rng) {
  check_sampler_config(config);
  const auto& data = *config.dataset;
  const int n = static_cast<int>(data.size());
  const int k = config.k, b = config.b;

  std::vector<std::pair<int, int>> pair_ids(b);
  for (auto& p : pair_ids) {
    p.first = static_cast<int>(rng.next_below(n));
    p.second = static_cast<int>(rng.next_below(n));
  }
  std::vector<std::vector<double>> seqs(b);
  if (config.shared_seq_across_pairs) {
    const std::vector<double> shared = sample_ordered_weights(rng, config.alpha, k);
    for (auto& s : seqs) s = shared;
  } else {
    for (auto& s : seqs) s = sample_ordered_weights(rng, config.alpha, k);
  }

  GradSample out;
  if (config.mixer == MixerKind::Cutmix || config.mixer == MixerKind::Puzzle) {
    out = grad_region_mixed(config, rng, pair_ids, seqs);
  } else {
    // linear mixing (input or manifold): one s per batch, all K*B rows at once
    int s = 0;
    if (config.mixer == MixerKind::Manifold && !config.mix_layers.empty()) {
      s = config.mix_layers[rng.next_below(config.mix_layers.size())];
    }
    std::vector<const std::vector<double>*> xa, xb;
    std::vector<double> lambdas;
    std::vector<std::vector<double>> labels;
    for (int p = 0; p < b; ++p) {
      const Sample& sa = data[pair_ids[p].first];
      const Sample& sb = data[pair_ids[p].second];
      for (int t = 0; t < k; ++t) {
        xa.push_back(&sa.features);
        xb.push_back(&sb.features);
        lambdas.push_back(seqs[p][t]);
        labels.push_back(mix(sa.label, sb.label, seqs[p][t]));
      }
    }
    const Matrix ma = rows_to_matrix(xa);
    const Matrix mb = rows_to_matrix(xb);
    std::vector<const std::vector<double>*> yrows;
    for (const auto& l : labels) yrows.push_back(&l);
    const Matrix y = rows_to_matrix(yrows);
    const ForwardTrace trace = forward_manifold_mix(*config.net, ma, mb, s, lambdas);
    out.grad = backward(*config.net, trace, y, config.l2);
  }
  out.estimator = "multimix";
  out.k = k;
  out.b = b;
  out.eval_count = static_cast<long>(k) * b;
  out.sq_norm = sq_norm_of(out.grad);
  return out;
}

GradSample grad_largebatch_mixup(const SamplerConfig& config, Rng& rng) {
  check_sampler_config(config);
  const auto& data = *config.dataset;
  const int n = static_cast<int>(data.size());
  const int kb = config.k * config.b;
  const double lambda = sample_beta(rng, config.alpha);

  std::vector<std::pair<int, int>> pair_ids(kb);
  for (auto& p : pair_ids) {
    p.first = static_cast<int>(rng.next_below(n));
    p.second = static_cast<int>(rng.next_below(n));
  }
  std::vector<std::vector<double>> seqs(kb, std::vector<double>{lambda});

  GradSample out;
  if (config.mixer == MixerKind::Cutmix || config.mixer == MixerKind::Puzzle) {
    out = grad_region_mixed(config, rng, pair_ids, seqs);
  } else {
    int s = 0;
    if (config.mixer == MixerKind::Manifold && !config.mix_layers.empty()) {
      s = config.mix_layers[rng.next_below(config.mix_layers.size())];
    }
    std::vector<const std::vector<double>*> xa, xb;
    std::vector<std::vector<double>> labels;
    for (const auto& p : pair_ids) {
      xa.push_back(&data[p.first].features);
      xb.push_back(&data[p.second].features);
      labels.push_back(mix(data[p.first].label, data[p.second].label, lambda));
    }
    const Matrix ma = rows_to_matrix(xa);
    const Matrix mb = rows_to_matrix(xb);
    std::vector<const std::vector<double>*> yrows;
    for (const auto& l : labels) yrows.push_back(&l);
    const Matrix y = rows_to_matrix(yrows);
    const ForwardTrace trace =
        forward_manifold_mix(*config.net, ma, mb, s, std::vector<double>(kb, lambda));
    out.grad = backward(*config.net, trace, y, config.l2);
  }
  out.estimator = "largebatch";
  out.k = config.k;
  out.b = config.b;
  out.eval_count = kb;
  out.sq_norm = sq_norm_of(out.grad);
  return out;
}

namespace {

std::pair<double, double> bootstrap_ci(const std::vector<double>& values, Rng& rng,
                                       int resamples = 1000) {
  const std::size_t n = values.size();
  std::vector<double> means(resamples);
  for (int r = 0; r < resamples; ++r) {
    KahanSum s;
    for (std::size_t i = 0; i < n; ++i) s.add(values[rng.next_below(n)]);
    means[r] = s.sum / n;
  }
  std::sort(means.begin(), means.end());
  const auto pick = [&](double q) {
    const int idx = std::clamp(static_cast<int>(q * resamples), 0, resamples - 1);
    return means[idx];
  };
  return {pick(0.025), pick(0.975)};
}

}  // namespace

VarianceReport estimate_variance(const GradSampler& sampler, int replicates, Rng& rng) {
  if (replicates < 2) throw std::invalid_argument("estimate_variance: need at least 2 replicates");
  std::vector<GradSample> draws;
  draws.reserve(replicates);
  for (int r = 0; r < replicates; ++r) {
    Rng sub = rng.substream(static_cast<std::uint64_t>(r) + 1);
    draws.push_back(sampler(sub));
  }
  const std::size_t dim = draws.front().grad.size();
  std::vector<KahanSum> mean(dim);
  for (const auto& d : draws) {
    for (std::size_t i = 0; i < dim; ++i) mean[i].add(d.grad[i] / replicates);
  }
  std::vector<double> mean_v(dim);
  for (std::size_t i = 0; i < dim; ++i) mean_v[i] = mean[i].sum;

  std::vector<double> sq_devs(replicates), sq_norms(replicates);
  for (int r = 0; r < replicates; ++r) {
    sq_devs[r] = sq_dist(draws[r].grad, mean_v);
    sq_norms[r] = draws[r].sq_norm;
  }
  VarianceReport report;
  report.estimator = draws.front().estimator;
  report.k = draws.front().k;
  report.b = draws.front().b;
  report.replicates = replicates;
  KahanSum dev_sum, norm_sum;
  for (int r = 0; r < replicates; ++r) {
    dev_sum.add(sq_devs[r]);
    norm_sum.add(sq_norms[r]);
  }
  report.variance = dev_sum.sum / (replicates - 1);  // R/(R-1) times the mean
  report.mean_sq_norm = norm_sum.sum / replicates;

  Rng boot = rng.substream(0xb007);
  const double correction = static_cast<double>(replicates) / (replicates - 1);
  auto [vlo, vhi] = bootstrap_ci(sq_devs, boot);
  report.ci_lo = correction * vlo;
  report.ci_hi = correction * vhi;
  auto [nlo, nhi] = bootstrap_ci(sq_norms, boot);
  report.msn_ci_lo = nlo;
  report.msn_ci_hi = nhi;
  return report;
}

Prop1Report check_proposition1(const ExactProblem& problem, const std::vector<int>& k_list,
                               int b) {
  if (k_list.empty()) throw std::invalid_argument("check_proposition1: empty K list");
  for (std::size_t i = 1; i < k_list.size(); ++i) {
    if (k_list[i] <= k_list[i - 1]) {
      throw std::invalid_argument("check_proposition1: K list must be strictly increasing");
    }
  }
  const ExactStats stats = compute_exact_stats(problem);
  Prop1Report report;
  for (int k : k_list) {
    report.rows.push_back({k, closed_form_var_multimix(stats, k, b)});
  }
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const double prev = report.rows[i - 1].variance;
    const double cur = report.rows[i].variance;
    if (cur > prev + 1e-12) report.non_increasing = false;
    if (!(prev - cur > 1e-12)) report.strictly_decreasing = false;
  }
  return report;
}

Prop2Report check_proposition2(const ExactProblem& problem, int k,
                               const std::vector<int>& b_list, double tol) {
  if (k <= 1) throw std::invalid_argument("check_proposition2: requires K > 1");
  const ExactStats stats = compute_exact_stats(problem);
  const auto& d = stats.decomposition;
  Prop2Report report;
  report.threshold_defined = d.var_lambda_g2 > tol;
  report.b0 = report.threshold_defined
                  ? d.var_pair_g1 / d.var_lambda_g2
                  : std::numeric_limits<double>::infinity();
  for (int b : b_list) {
    Prop2Row row;
    row.b = b;
    row.var_multimix = closed_form_var_multimix(stats, k, b);
    row.var_largebatch = closed_form_var_largebatch(stats, k, b);
    row.multimix_no_worse = row.var_multimix <= row.var_largebatch + tol;
    row.predicted_no_worse = d.var_pair_g1 <= b * d.var_lambda_g2 + tol;
    if (row.multimix_no_worse != row.predicted_no_worse) report.equivalence_holds = false;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace multimix
