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

#ifndef MULTIMIX_EXPERIMENTS_HPP
#define MULTIMIX_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "multimix/mixers.hpp"
#include "multimix/net.hpp"

namespace multimix {

/// Two interleaved noisy Archimedean arms with a fixed train/test split and
/// a recorded label-flip mask on the training part.
struct SpiralDataset {
  Matrix points;              // n x 2
  std::vector<int> labels;    // current labels (train flips applied)
  std::vector<int> clean_labels;
  std::vector<int> train_idx;
  std::vector<int> test_idx;
  std::vector<bool> flipped;  // per point; true only on flipped train points
  int classes = 2;
};

struct SpiralParams {
  int n = 1000;
  int classes = 2;
  double r_max = 2.0;
  double theta_max = 1.5 * 3.14159265358979323846;
  double noise_std = 0.08;
  double flip_frac = 0.2;
  double train_frac = 0.4;
};

SpiralDataset gen_spiral(Rng& rng, const SpiralParams& params);

enum class MixMode { None, Manifold };

struct RunConfig {
  MixMode mode = MixMode::None;
  int k = 1;
  double alpha = 1.0;
  std::vector<int> mix_layers = {1, 2};  // s drawn uniformly per batch
  int epochs = 3000;
  int batch = 256;
  double lr = 0.01;
  double l2 = 1e-4;
  std::uint64_t seed = 1;
  std::vector<int> widths = {2, 6, 6, 6, 6, 6, 6, 6, 6, 2};
  bool track_gradnorm = false;
  int eval_every = 50;  // test-error cadence (0 = final only)
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double test_error = -1.0;        // percent; negative when not evaluated
  double mean_sq_gradnorm = 0.0;   // per-epoch mean of ||g~||^2
};

struct TrainResult {
  Mlp net;
  std::vector<EpochMetrics> history;
  double final_test_error = 0.0;   // percent
};

/// Mini-batch training per the run config. Mixed batches pair the batch with
/// a random permutation of itself; each pair contributes K interpolations and
/// the batch loss averages all K*B mixed samples. Throws on divergence.
TrainResult train(const SpiralDataset& data, const RunConfig& config);

/// Percent top-1 error via argmax of logits (ties break to the lower class).
double top1_error(const Mlp& net, const Matrix& x, const std::vector<int>& labels);

struct EceBin {
  int count = 0;
  double acc = 0.0;
  double conf = 0.0;
};

struct EceReport {
  int m = 10;
  std::vector<EceBin> bins;
  double ece = 0.0;
  int n = 0;
};

/// ECE over explicit confidence scores and correctness flags; bins are
/// I_m = ((m-1)/M, m/M] on the max softmax score.
EceReport ece_from_scores(const std::vector<double>& scores,
                          const std::vector<bool>& correct, int m);

EceReport ece(const Mlp& net, const Matrix& x, const std::vector<int>& labels, int m);

struct BoundaryRaster {
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  int resolution = 0;
  std::vector<int> cell_class;       // resolution x resolution, row-major, top row first
  std::vector<double> cell_conf;     // max softmax per cell
};

/// Evaluate the net over the dataset's bounding box with a 10% margin.
BoundaryRaster eval_boundary(const Mlp& net, const SpiralDataset& data, int resolution);

/// Write the raster as CSV (x, y, class, confidence) and a class-colored PPM
/// with the data points overplotted.
void export_boundary(const BoundaryRaster& raster, const SpiralDataset& data,
                     const std::string& csv_path, const std::string& ppm_path);

/// Matrix of the feature rows selected by idx.
Matrix gather_rows(const Matrix& m, const std::vector<int>& idx);
std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<int>& idx);

}  // namespace multimix

#endif  // MULTIMIX_EXPERIMENTS_HPP
