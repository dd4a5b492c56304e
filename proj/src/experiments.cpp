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

#include "multimix/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "multimix/io.hpp"

namespace multimix {

SpiralDataset gen_spiral(Rng& rng, const SpiralParams& params) {
  if (params.n < params.classes) throw std::invalid_argument("gen_spiral: n < classes");
  if (params.flip_frac < 0.0 || params.flip_frac > 1.0 ||
      params.train_frac <= 0.0 || params.train_frac >= 1.0) {
    throw std::invalid_argument("gen_spiral: invalid fractions");
  }
  SpiralDataset data;
  data.classes = params.classes;
  data.points = Matrix(params.n, 2);
  data.clean_labels.resize(params.n);
  for (int i = 0; i < params.n; ++i) {
    const int c = i % params.classes;
    const double t = 1.0 - rng.next_double();  // uniform in (0, 1]
    const double r = params.r_max * t;
    const double theta = params.theta_max * t + c * M_PI;
    data.points(i, 0) = r * std::cos(theta) + params.noise_std * rng.normal();
    data.points(i, 1) = r * std::sin(theta) + params.noise_std * rng.normal();
    data.clean_labels[i] = c;
  }
  data.labels = data.clean_labels;

  const std::vector<int> perm = rng.permutation(params.n);
  const int n_train = static_cast<int>(std::lround(params.train_frac * params.n));
  data.train_idx.assign(perm.begin(), perm.begin() + n_train);
  data.test_idx.assign(perm.begin() + n_train, perm.end());

  data.flipped.assign(params.n, false);
  const int n_flip = static_cast<int>(std::lround(params.flip_frac * n_train));
  const std::vector<int> flip_order = rng.permutation(n_train);
  for (int f = 0; f < n_flip; ++f) {
    const int idx = data.train_idx[flip_order[f]];
    data.flipped[idx] = true;
    // move to a different class, uniformly among the others
    const int shift = 1 + static_cast<int>(rng.next_below(params.classes - 1));
    data.labels[idx] = (data.labels[idx] + shift) % params.classes;
  }
  return data;
}

Matrix gather_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<int>(idx.size()), m.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy(m.row(idx[i]), m.row(idx[i]) + m.cols, out.row(static_cast<int>(i)));
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<int>& idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
  return out;
}

namespace {

Matrix one_hot(const std::vector<int>& labels, int classes) {
  Matrix y(static_cast<int>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<int>(i), labels[i]) = 1.0;
  return y;
}

int argmax_row(const double* row, int n) {
  int best = 0;
  for (int c = 1; c < n; ++c) {
    if (row[c] > row[best]) best = c;  // ties keep the lower index
  }
  return best;
}

}  // namespace

TrainResult train(const SpiralDataset& data, const RunConfig& config) {
  if (config.epochs < 1 || config.batch < 1 || config.k < 1) {
    throw std::invalid_argument("train: invalid config");
  }
  Rng root(config.seed);
  Rng init_rng = root.substream(1);
  Rng shuffle_rng = root.substream(2);
  Rng mix_rng = root.substream(3);

  Mlp net = Mlp::init(config.widths, init_rng);
  OptimState opt;
  opt.kind = OptimState::Kind::Adam;
  opt.lr = config.lr;

  const Matrix x_train = gather_rows(data.points, data.train_idx);
  const std::vector<int> y_train = gather_labels(data.labels, data.train_idx);
  const Matrix y_train_1h = one_hot(y_train, data.classes);
  const Matrix x_test = gather_rows(data.points, data.test_idx);
  const std::vector<int> y_test = gather_labels(data.clean_labels, data.test_idx);
  const int n_train = x_train.rows;

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<int> order = shuffle_rng.permutation(n_train);
    double loss_sum = 0.0;
    double gradnorm_sum = 0.0;
    int batches = 0;
    for (int start = 0; start < n_train; start += config.batch) {
      const int bsz = std::min(config.batch, n_train - start);
      std::vector<int> a_idx(order.begin() + start, order.begin() + start + bsz);

      double loss;
      std::vector<double> grad;
      if (config.mode == MixMode::None) {
        const Matrix xb = gather_rows(x_train, a_idx);
        const Matrix yb = gather_rows(y_train_1h, a_idx);
        const ForwardTrace trace = forward(net, xb);
        loss = loss_xent_soft(net, trace, yb, config.l2);
        grad = backward(net, trace, yb, config.l2);
      } else {
        // pair the batch with a random permutation of itself
        const std::vector<int> pair_perm = shuffle_rng.permutation(bsz);
        std::vector<int> a_rows, b_rows;
        std::vector<double> lambdas;
        a_rows.reserve(static_cast<std::size_t>(bsz) * config.k);
        for (int i = 0; i < bsz; ++i) {
          const std::vector<double> seq = sample_ordered_weights(mix_rng, config.alpha, config.k);
          for (int t = 0; t < config.k; ++t) {
            a_rows.push_back(a_idx[i]);
            b_rows.push_back(a_idx[pair_perm[i]]);
            lambdas.push_back(seq[t]);
          }
        }
        const int s = config.mix_layers.empty()
                          ? 0
                          : config.mix_layers[mix_rng.next_below(config.mix_layers.size())];
        const Matrix xa = gather_rows(x_train, a_rows);
        const Matrix xb = gather_rows(x_train, b_rows);
        const Matrix ya = gather_rows(y_train_1h, a_rows);
        const Matrix yb = gather_rows(y_train_1h, b_rows);
        Matrix y(ya.rows, ya.cols);
        for (int i = 0; i < y.rows; ++i) {
          for (int c = 0; c < y.cols; ++c) {
            y(i, c) = (1.0 - lambdas[i]) * ya(i, c) + lambdas[i] * yb(i, c);
          }
        }
        const ForwardTrace trace = forward_manifold_mix(net, xa, xb, s, lambdas);
        loss = loss_xent_soft(net, trace, y, config.l2);
        grad = backward(net, trace, y, config.l2);
      }
      if (!std::isfinite(loss)) {
        throw std::runtime_error("train: diverged (non-finite loss) at epoch " +
                                 std::to_string(epoch));
      }
      loss_sum += loss;
      if (config.track_gradnorm) {
        double sq = 0.0;
        for (double g : grad) sq += g * g;
        gradnorm_sum += sq;
      }
      step(net, grad, opt);
      ++batches;
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_loss = loss_sum / batches;
    metrics.mean_sq_gradnorm = config.track_gradnorm ? gradnorm_sum / batches : 0.0;
    const bool last = epoch + 1 == config.epochs;
    if (last || (config.eval_every > 0 && (epoch + 1) % config.eval_every == 0)) {
      metrics.test_error = top1_error(net, x_test, y_test);
    }
    result.history.push_back(metrics);
  }
  result.final_test_error = result.history.back().test_error;
  result.net = std::move(net);
  return result;
}

double top1_error(const Mlp& net, const Matrix& x, const std::vector<int>& labels) {
  if (x.rows == 0) throw std::invalid_argument("top1_error: empty split");
  const ForwardTrace trace = forward(net, x);
  int wrong = 0;
  for (int i = 0; i < x.rows; ++i) {
    if (argmax_row(trace.logits.row(i), trace.logits.cols) != labels[i]) ++wrong;
  }
  return 100.0 * wrong / x.rows;
}

EceReport ece_from_scores(const std::vector<double>& scores,
                          const std::vector<bool>& correct, int m) {
  if (m < 1) throw std::invalid_argument("ece_from_scores: m must be >= 1");
  if (scores.empty() || scores.size() != correct.size()) {
    throw std::invalid_argument("ece_from_scores: empty or mismatched inputs");
  }
  EceReport report;
  report.m = m;
  report.n = static_cast<int>(scores.size());
  std::vector<int> counts(m, 0);
  std::vector<double> acc_sum(m, 0.0), conf_sum(m, 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    // bin index for the interval ((b-1)/M, b/M]
    int b = static_cast<int>(std::ceil(scores[i] * m));
    b = std::clamp(b, 1, m);
    ++counts[b - 1];
    acc_sum[b - 1] += correct[i] ? 1.0 : 0.0;
    conf_sum[b - 1] += scores[i];
  }
  double ece = 0.0;
  for (int b = 0; b < m; ++b) {
    EceBin bin;
    bin.count = counts[b];
    if (counts[b] > 0) {
      bin.acc = acc_sum[b] / counts[b];
      bin.conf = conf_sum[b] / counts[b];
      ece += (static_cast<double>(counts[b]) / report.n) * std::fabs(bin.acc - bin.conf);
    }
    report.bins.push_back(bin);
  }
  report.ece = ece;
  return report;
}

EceReport ece(const Mlp& net, const Matrix& x, const std::vector<int>& labels, int m) {
  if (x.rows == 0) throw std::invalid_argument("ece: empty split");
  const ForwardTrace trace = forward(net, x);
  std::vector<double> scores(x.rows);
  std::vector<bool> correct(x.rows);
  for (int i = 0; i < x.rows; ++i) {
    const int pred = argmax_row(trace.probs.row(i), trace.probs.cols);
    scores[i] = trace.probs(i, pred);
    correct[i] = pred == labels[i];
  }
  return ece_from_scores(scores, correct, m);
}

BoundaryRaster eval_boundary(const Mlp& net, const SpiralDataset& data, int resolution) {
  if (data.points.cols != 2) throw std::invalid_argument("eval_boundary: dataset must be 2D");
  if (resolution < 2) throw std::invalid_argument("eval_boundary: resolution too small");
  BoundaryRaster raster;
  raster.resolution = resolution;
  double x_min = data.points(0, 0), x_max = x_min;
  double y_min = data.points(0, 1), y_max = y_min;
  for (int i = 0; i < data.points.rows; ++i) {
    x_min = std::min(x_min, data.points(i, 0));
    x_max = std::max(x_max, data.points(i, 0));
    y_min = std::min(y_min, data.points(i, 1));
    y_max = std::max(y_max, data.points(i, 1));
  }
  const double mx = 0.1 * (x_max - x_min), my = 0.1 * (y_max - y_min);
  raster.x_min = x_min - mx;
  raster.x_max = x_max + mx;
  raster.y_min = y_min - my;
  raster.y_max = y_max + my;

  Matrix grid(resolution * resolution, 2);
  for (int iy = 0; iy < resolution; ++iy) {
    const double y = raster.y_max - (iy + 0.5) * (raster.y_max - raster.y_min) / resolution;
    for (int ix = 0; ix < resolution; ++ix) {
      const double x = raster.x_min + (ix + 0.5) * (raster.x_max - raster.x_min) / resolution;
      grid(iy * resolution + ix, 0) = x;
      grid(iy * resolution + ix, 1) = y;
    }
  }
  const ForwardTrace trace = forward(net, grid);
  raster.cell_class.resize(grid.rows);
  raster.cell_conf.resize(grid.rows);
  for (int i = 0; i < grid.rows; ++i) {
    const int pred = argmax_row(trace.probs.row(i), trace.probs.cols);
    raster.cell_class[i] = pred;
    raster.cell_conf[i] = trace.probs(i, pred);
  }
  return raster;
}

void export_boundary(const BoundaryRaster& raster, const SpiralDataset& data,
                     const std::string& csv_path, const std::string& ppm_path) {
  const int res = raster.resolution;
  {
    CsvWriter csv(csv_path);
    csv.row({"x", "y", "class", "confidence"});
    for (int iy = 0; iy < res; ++iy) {
      const double y = raster.y_max - (iy + 0.5) * (raster.y_max - raster.y_min) / res;
      for (int ix = 0; ix < res; ++ix) {
        const double x = raster.x_min + (ix + 0.5) * (raster.x_max - raster.x_min) / res;
        const int i = iy * res + ix;
        csv.row({fmt_g17(x), fmt_g17(y), std::to_string(raster.cell_class[i]),
                 fmt_g17(raster.cell_conf[i])});
      }
    }
  }

  // light class tint scaled by confidence, data points in saturated colors
  static const std::uint8_t tint[4][3] = {
      {255, 120, 120}, {120, 120, 255}, {120, 255, 120}, {255, 220, 120}};
  static const std::uint8_t dot[4][3] = {
      {160, 0, 0}, {0, 0, 160}, {0, 120, 0}, {150, 110, 0}};
  PpmImage image;
  image.width = res;
  image.height = res;
  image.channels = 3;
  image.pixels.resize(static_cast<std::size_t>(res) * res * 3);
  for (int i = 0; i < res * res; ++i) {
    const int cls = raster.cell_class[i] & 3;
    const double shade = 0.55 + 0.45 * raster.cell_conf[i];
    for (int c = 0; c < 3; ++c) {
      image.pixels[static_cast<std::size_t>(i) * 3 + c] =
          static_cast<std::uint8_t>(std::min(255.0, 255.0 - shade * (255.0 - tint[cls][c])));
    }
  }
  for (int p = 0; p < data.points.rows; ++p) {
    const int ix = static_cast<int>((data.points(p, 0) - raster.x_min) /
                                    (raster.x_max - raster.x_min) * res);
    const int iy = static_cast<int>((raster.y_max - data.points(p, 1)) /
                                    (raster.y_max - raster.y_min) * res);
    const int cls = data.labels[p] & 3;
    for (int dy = 0; dy <= 1; ++dy) {
      for (int dx = 0; dx <= 1; ++dx) {
        const int x = std::clamp(ix + dx, 0, res - 1);
        const int y = std::clamp(iy + dy, 0, res - 1);
        for (int c = 0; c < 3; ++c) {
          image.pixels[(static_cast<std::size_t>(y) * res + x) * 3 + c] = dot[cls][c];
        }
      }
    }
  }
  write_ppm(ppm_path, image);
}

}  // namespace multimix
