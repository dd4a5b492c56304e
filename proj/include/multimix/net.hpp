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

#ifndef MULTIMIX_NET_HPP
#define MULTIMIX_NET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "multimix/matrix.hpp"
#include "multimix/rng.hpp"

namespace multimix {

/// Fully-connected network: leaky-ReLU hidden layers, linear output.
/// widths = {input, hidden..., classes}. Backprop is hand-written and exact;
/// the gradient checker in the tests is the contract.
struct Mlp {
  std::vector<int> widths;
  std::vector<Matrix> weights;              // weights[l]: widths[l+1] x widths[l]
  std::vector<std::vector<double>> biases;  // biases[l]: widths[l+1]
  double leak = 0.01;

  /// He fan-in initialization from the given stream.
  static Mlp init(const std::vector<int>& widths, Rng& rng);

  int num_hidden() const { return static_cast<int>(weights.size()) - 1; }
  int num_params() const;

  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

  void save(const std::string& path) const;
  static Mlp load(const std::string& path);
};

/// Everything the backward pass needs. When `mixed` is set, layers up to
/// `mix_layer` were evaluated on two branches and blended row-wise with
/// `lambdas`; gradient flows into both branches weighted (1-lambda), lambda.
struct ForwardTrace {
  bool mixed = false;
  int mix_layer = 0;            // s; 0 = mixing at the input (or plain forward)
  std::vector<double> lambdas;  // per row of the batch; empty for plain forward

  Matrix input_a;               // branch inputs (input_b empty for plain forward)
  Matrix input_b;
  std::vector<Matrix> pre_a, act_a;  // hidden layers 1..s on each branch
  std::vector<Matrix> pre_b, act_b;
  Matrix mixed_h;                    // blended h^s (equals input_a when plain)
  std::vector<Matrix> pre, act;      // hidden layers s+1..L above the blend
  Matrix logits;
  Matrix probs;                      // row-wise softmax of logits
};

/// Plain forward pass on a batch (rows are samples).
ForwardTrace forward(const Mlp& net, const Matrix& x);

/// Runs both batches to layer s, blends row i with lambdas[i], and continues
/// from the blend. s must be in [0, num_hidden]; s=0 blends the raw inputs.
ForwardTrace forward_manifold_mix(const Mlp& net, const Matrix& xa, const Matrix& xb,
                                  int s, const std::vector<double>& lambdas);
ForwardTrace forward_manifold_mix(const Mlp& net, const Matrix& xa, const Matrix& xb,
                                  int s, double lambda);

/// Mean soft-label cross-entropy (log-sum-exp stabilized) plus
/// (l2/2)*||params||^2 when l2 > 0.
double loss_xent_soft(const Mlp& net, const ForwardTrace& trace, const Matrix& labels,
                      double l2 = 0.0);

/// Exact gradient of loss_xent_soft w.r.t. all parameters, flattened in
/// canonical order (per layer: weights row-major, then biases).
std::vector<double> backward(const Mlp& net, const ForwardTrace& trace,
                             const Matrix& labels, double l2 = 0.0);

struct OptimState {
  enum class Kind { Sgd, Adam };
  Kind kind = Kind::Adam;
  double lr = 0.01;
  double momentum = 0.0;       // SGD only
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;  // Adam only
  long step_count = 0;
  std::vector<double> m, v;    // moment buffers, lazily sized
  // piecewise-constant schedule: at step `first`, multiply lr by `second`
  std::vector<std::pair<long, double>> lr_decays;

  double current_lr() const;
};

/// One optimizer update in place.
void step(Mlp& net, const std::vector<double>& grad, OptimState& opt);

}  // namespace multimix

#endif  // MULTIMIX_NET_HPP
