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

#include "multimix/net.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace multimix {

namespace {

// z = x * W^T + b
Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
  if (x.cols != w.cols) throw std::invalid_argument("affine: dimension mismatch");
  Matrix z(x.rows, w.rows);
  for (int i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    double* zi = z.row(i);
    for (int o = 0; o < w.rows; ++o) {
      const double* wo = w.row(o);
      double acc = b[o];
      for (int j = 0; j < x.cols; ++j) acc += wo[j] * xi[j];
      zi[o] = acc;
    }
  }
  return z;
}

Matrix leaky(const Matrix& z, double slope) {
  Matrix a = z;
  for (auto& v : a.data) {
    if (v < 0.0) v *= slope;
  }
  return a;
}

void leaky_backward_inplace(Matrix& d, const Matrix& pre, double slope) {
  for (std::size_t i = 0; i < d.data.size(); ++i) {
    if (pre.data[i] < 0.0) d.data[i] *= slope;
  }
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    const double* zi = logits.row(i);
    double* pi = p.row(i);
    double zmax = zi[0];
    for (int c = 1; c < logits.cols; ++c) zmax = std::max(zmax, zi[c]);
    double sum = 0.0;
    for (int c = 0; c < logits.cols; ++c) {
      pi[c] = std::exp(zi[c] - zmax);
      sum += pi[c];
    }
    for (int c = 0; c < logits.cols; ++c) pi[c] /= sum;
  }
  return p;
}

// grad_w += d^T * x, grad_b += column sums of d
void accumulate_affine_grads(const Matrix& d, const Matrix& x, Matrix& grad_w,
                             std::vector<double>& grad_b) {
  for (int i = 0; i < d.rows; ++i) {
    const double* di = d.row(i);
    const double* xi = x.row(i);
    for (int o = 0; o < d.cols; ++o) {
      double* gw = grad_w.row(o);
      const double dio = di[o];
      grad_b[o] += dio;
      for (int j = 0; j < x.cols; ++j) gw[j] += dio * xi[j];
    }
  }
}

// d_prev = d * W
Matrix propagate_down(const Matrix& d, const Matrix& w) {
  Matrix out(d.rows, w.cols);
  for (int i = 0; i < d.rows; ++i) {
    const double* di = d.row(i);
    double* oi = out.row(i);
    for (int o = 0; o < d.cols; ++o) {
      const double* wo = w.row(o);
      const double dio = di[o];
      for (int j = 0; j < w.cols; ++j) oi[j] += dio * wo[j];
    }
  }
  return out;
}

Matrix blend_rows(const Matrix& a, const Matrix& b, const std::vector<double>& lambdas) {
  check_same_shape(a, b, "blend_rows");
  if (static_cast<int>(lambdas.size()) != a.rows) {
    throw std::invalid_argument("blend_rows: one lambda per row required");
  }
  Matrix out(a.rows, a.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double lam = lambdas[i];
    const double* ai = a.row(i);
    const double* bi = b.row(i);
    double* oi = out.row(i);
    for (int j = 0; j < a.cols; ++j) oi[j] = (1.0 - lam) * ai[j] + lam * bi[j];
  }
  return out;
}

Matrix scale_rows(const Matrix& d, const std::vector<double>& factors) {
  Matrix out = d;
  for (int i = 0; i < d.rows; ++i) {
    double* oi = out.row(i);
    for (int j = 0; j < d.cols; ++j) oi[j] *= factors[i];
  }
  return out;
}

// Forward through hidden layers [first_hidden, L] and the output layer,
// starting from activation h (= h^{first_hidden - 1}).
void run_upper(const Mlp& net, const Matrix& h, int first_hidden, ForwardTrace& trace) {
  const int num_hidden = net.num_hidden();
  const Matrix* cur = &h;
  for (int layer = first_hidden; layer <= num_hidden; ++layer) {
    trace.pre.push_back(affine(*cur, net.weights[layer - 1], net.biases[layer - 1]));
    trace.act.push_back(leaky(trace.pre.back(), net.leak));
    cur = &trace.act.back();
  }
  trace.logits = affine(*cur, net.weights[num_hidden], net.biases[num_hidden]);
  trace.probs = softmax_rows(trace.logits);
}

}  // namespace

Mlp Mlp::init(const std::vector<int>& widths, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp::init: need at least input and output widths");
  Mlp net;
  net.widths = widths;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Matrix w(widths[l + 1], widths[l]);
    const double scale = std::sqrt(2.0 / widths[l]);
    for (auto& v : w.data) v = scale * rng.normal();
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(widths[l + 1], 0.0);
  }
  return net;
}

int Mlp::num_params() const {
  int n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += weights[l].rows * weights[l].cols + static_cast<int>(biases[l].size());
  }
  return n;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> flat;
  flat.reserve(num_params());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].data.begin(), weights[l].data.end());
    flat.insert(flat.end(), biases[l].begin(), biases[l].end());
  }
  return flat;
}

void Mlp::unflatten(const std::vector<double>& flat) {
  if (static_cast<int>(flat.size()) != num_params()) {
    throw std::invalid_argument("Mlp::unflatten: length mismatch");
  }
  std::size_t pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy(flat.begin() + pos, flat.begin() + pos + weights[l].data.size(),
              weights[l].data.begin());
    pos += weights[l].data.size();
    std::copy(flat.begin() + pos, flat.begin() + pos + biases[l].size(), biases[l].begin());
    pos += biases[l].size();
  }
}

void Mlp::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("Mlp::save: cannot open " + path);
  out << "mlp " << widths.size();
  for (int w : widths) out << ' ' << w;
  out << ' ' << leak << '\n';
  const std::vector<double> flat = flatten();
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!out) throw std::runtime_error("Mlp::save: write failed for " + path);
}

Mlp Mlp::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("Mlp::load: cannot open " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  std::size_t n = 0;
  hs >> magic >> n;
  if (magic != "mlp" || n < 2) throw std::runtime_error("Mlp::load: bad header in " + path);
  std::vector<int> widths(n);
  for (auto& w : widths) hs >> w;
  double leak = 0.01;
  hs >> leak;
  Rng dummy(0);
  Mlp net = Mlp::init(widths, dummy);
  net.leak = leak;
  std::vector<double> flat(net.num_params());
  in.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!in) throw std::runtime_error("Mlp::load: truncated parameter block in " + path);
  net.unflatten(flat);
  return net;
}

ForwardTrace forward(const Mlp& net, const Matrix& x) {
  if (x.cols != net.widths.front()) throw std::invalid_argument("forward: input width mismatch");
  ForwardTrace trace;
  trace.input_a = x;
  trace.mixed_h = x;
  run_upper(net, trace.mixed_h, 1, trace);
  return trace;
}

ForwardTrace forward_manifold_mix(const Mlp& net, const Matrix& xa, const Matrix& xb,
                                  int s, const std::vector<double>& lambdas) {
  check_same_shape(xa, xb, "forward_manifold_mix");
  if (xa.cols != net.widths.front()) {
    throw std::invalid_argument("forward_manifold_mix: input width mismatch");
  }
  if (s < 0 || s > net.num_hidden()) {
    throw std::invalid_argument("forward_manifold_mix: invalid mix layer");
  }
  ForwardTrace trace;
  trace.mixed = true;
  trace.mix_layer = s;
  trace.lambdas = lambdas;
  trace.input_a = xa;
  trace.input_b = xb;

  const Matrix* ha = &trace.input_a;
  const Matrix* hb = &trace.input_b;
  for (int layer = 1; layer <= s; ++layer) {
    trace.pre_a.push_back(affine(*ha, net.weights[layer - 1], net.biases[layer - 1]));
    trace.act_a.push_back(leaky(trace.pre_a.back(), net.leak));
    ha = &trace.act_a.back();
    trace.pre_b.push_back(affine(*hb, net.weights[layer - 1], net.biases[layer - 1]));
    trace.act_b.push_back(leaky(trace.pre_b.back(), net.leak));
    hb = &trace.act_b.back();
  }
  trace.mixed_h = blend_rows(*ha, *hb, lambdas);
  run_upper(net, trace.mixed_h, s + 1, trace);
  return trace;
}

ForwardTrace forward_manifold_mix(const Mlp& net, const Matrix& xa, const Matrix& xb,
                                  int s, double lambda) {
  return forward_manifold_mix(net, xa, xb, s, std::vector<double>(xa.rows, lambda));
}

double loss_xent_soft(const Mlp& net, const ForwardTrace& trace, const Matrix& labels,
                      double l2) {
  check_same_shape(trace.logits, labels, "loss_xent_soft");
  double total = 0.0;
  for (int i = 0; i < trace.logits.rows; ++i) {
    const double* zi = trace.logits.row(i);
    const double* yi = labels.row(i);
    double zmax = zi[0];
    for (int c = 1; c < trace.logits.cols; ++c) zmax = std::max(zmax, zi[c]);
    double lse = 0.0;
    for (int c = 0; c < trace.logits.cols; ++c) lse += std::exp(zi[c] - zmax);
    lse = zmax + std::log(lse);
    for (int c = 0; c < trace.logits.cols; ++c) total += yi[c] * (lse - zi[c]);
  }
  double loss = total / trace.logits.rows;
  if (l2 > 0.0) {
    double sq = 0.0;
    for (const auto& w : net.weights) {
      for (double v : w.data) sq += v * v;
    }
    for (const auto& b : net.biases) {
      for (double v : b) sq += v * v;
    }
    loss += 0.5 * l2 * sq;
  }
  return loss;
}

std::vector<double> backward(const Mlp& net, const ForwardTrace& trace,
                             const Matrix& labels, double l2) {
  check_same_shape(trace.probs, labels, "backward");
  const int num_hidden = net.num_hidden();
  const int s = trace.mixed ? trace.mix_layer : 0;
  const int batch = trace.probs.rows;

  std::vector<Matrix> grad_w;
  std::vector<std::vector<double>> grad_b;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    grad_w.emplace_back(net.weights[l].rows, net.weights[l].cols);
    grad_b.emplace_back(net.biases[l].size(), 0.0);
  }

  Matrix d(batch, trace.probs.cols);
  for (std::size_t i = 0; i < d.data.size(); ++i) {
    d.data[i] = (trace.probs.data[i] - labels.data[i]) / batch;
  }

  // output layer
  const Matrix& top = trace.act.empty() ? trace.mixed_h : trace.act.back();
  accumulate_affine_grads(d, top, grad_w[num_hidden], grad_b[num_hidden]);
  d = propagate_down(d, net.weights[num_hidden]);

  // hidden layers above the blend point
  for (int layer = num_hidden; layer >= s + 1; --layer) {
    const int idx = layer - s - 1;
    leaky_backward_inplace(d, trace.pre[idx], net.leak);
    const Matrix& below = (idx > 0) ? trace.act[idx - 1] : trace.mixed_h;
    accumulate_affine_grads(d, below, grad_w[layer - 1], grad_b[layer - 1]);
    if (layer > s + 1 || (trace.mixed && s > 0)) {
      d = propagate_down(d, net.weights[layer - 1]);
    }
  }

  if (trace.mixed && s > 0) {
    // the blend splits the gradient between the two branches
    std::vector<double> one_minus(trace.lambdas.size());
    for (std::size_t i = 0; i < trace.lambdas.size(); ++i) one_minus[i] = 1.0 - trace.lambdas[i];
    for (int branch = 0; branch < 2; ++branch) {
      Matrix db = scale_rows(d, branch == 0 ? one_minus : trace.lambdas);
      const auto& pre = branch == 0 ? trace.pre_a : trace.pre_b;
      const auto& act = branch == 0 ? trace.act_a : trace.act_b;
      const Matrix& input = branch == 0 ? trace.input_a : trace.input_b;
      for (int layer = s; layer >= 1; --layer) {
        leaky_backward_inplace(db, pre[layer - 1], net.leak);
        const Matrix& below = (layer > 1) ? act[layer - 2] : input;
        accumulate_affine_grads(db, below, grad_w[layer - 1], grad_b[layer - 1]);
        if (layer > 1) db = propagate_down(db, net.weights[layer - 1]);
      }
    }
  }

  std::vector<double> flat;
  flat.reserve(net.num_params());
  for (std::size_t l = 0; l < grad_w.size(); ++l) {
    flat.insert(flat.end(), grad_w[l].data.begin(), grad_w[l].data.end());
    flat.insert(flat.end(), grad_b[l].begin(), grad_b[l].end());
  }
  if (l2 > 0.0) {
    const std::vector<double> params = net.flatten();
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += l2 * params[i];
  }
  return flat;
}

double OptimState::current_lr() const {
  double f = lr;
  for (const auto& [at, factor] : lr_decays) {
    if (step_count >= at) f *= factor;
  }
  return f;
}

void step(Mlp& net, const std::vector<double>& grad, OptimState& opt) {
  std::vector<double> params = net.flatten();
  if (params.size() != grad.size()) throw std::invalid_argument("step: gradient length mismatch");
  if (opt.m.size() != params.size()) opt.m.assign(params.size(), 0.0);
  ++opt.step_count;
  const double lr = opt.current_lr();
  if (opt.kind == OptimState::Kind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      opt.m[i] = opt.momentum * opt.m[i] + grad[i];
      params[i] -= lr * opt.m[i];
    }
  } else {
    if (opt.v.size() != params.size()) opt.v.assign(params.size(), 0.0);
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
      opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * grad[i];
      opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
      const double mhat = opt.m[i] / bc1;
      const double vhat = opt.v[i] / bc2;
      params[i] -= lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
  }
  net.unflatten(params);
}

}  // namespace multimix
