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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "multimix/experiments.hpp"
#include "multimix/io.hpp"

using namespace multimix;

namespace {

// class-0-iff-x>0 halfplane classifier: logits (x, -x)
Mlp halfplane_net() {
  Mlp net;
  net.widths = {2, 2};
  Matrix w(2, 2);
  w(0, 0) = 1.0;
  w(1, 0) = -1.0;
  net.weights = {w};
  net.biases = {{0.0, 0.0}};
  return net;
}

}  // namespace

TEST_CASE("gen_spiral: split sizes, exact flip count, flips confined to train") {
  Rng rng(42);
  const SpiralParams params;  // defaults: n=1000, train_frac=0.4, flip_frac=0.2
  const SpiralDataset data = gen_spiral(rng, params);
  CHECK(data.train_idx.size() == 400);
  CHECK(data.test_idx.size() == 600);
  CHECK(data.points.rows == 1000);
  CHECK(data.points.cols == 2);

  int flips = 0;
  for (int i = 0; i < 1000; ++i) {
    if (data.flipped[i]) {
      ++flips;
      CHECK(data.labels[i] != data.clean_labels[i]);
      CHECK(std::find(data.train_idx.begin(), data.train_idx.end(), i) != data.train_idx.end());
    } else {
      CHECK(data.labels[i] == data.clean_labels[i]);
    }
  }
  CHECK(flips == 80);  // lround(0.2 * 400)

  // train and test indices partition [0, n)
  std::vector<bool> seen(1000, false);
  for (int i : data.train_idx) seen[i] = true;
  for (int i : data.test_idx) {
    CHECK_FALSE(seen[i]);
    seen[i] = true;
  }
  CHECK(std::count(seen.begin(), seen.end(), true) == 1000);
}

TEST_CASE("gen_spiral: flip_frac=0 leaves labels clean; same seed reproduces") {
  SpiralParams params;
  params.flip_frac = 0.0;
  Rng rng(7);
  const SpiralDataset clean = gen_spiral(rng, params);
  CHECK(clean.labels == clean.clean_labels);
  for (bool f : clean.flipped) CHECK_FALSE(f);

  Rng r1(99), r2(99);
  const SpiralDataset a = gen_spiral(r1, params);
  const SpiralDataset b = gen_spiral(r2, params);
  CHECK(a.points.data == b.points.data);
  CHECK(a.train_idx == b.train_idx);
  CHECK(a.labels == b.labels);
}

TEST_CASE("gen_spiral: noiseless points sit exactly on the arms") {
  SpiralParams params;
  params.noise_std = 0.0;
  params.flip_frac = 0.0;
  params.n = 200;
  Rng rng(3);
  const SpiralDataset data = gen_spiral(rng, params);
  for (int i = 0; i < params.n; ++i) {
    const double x = data.points(i, 0), y = data.points(i, 1);
    const double r = std::hypot(x, y);
    CHECK(r <= params.r_max + 1e-12);
    const double t = r / params.r_max;
    const double theta = params.theta_max * t + data.clean_labels[i] * M_PI;
    CHECK(std::fabs(x - r * std::cos(theta)) < 1e-9);
    CHECK(std::fabs(y - r * std::sin(theta)) < 1e-9);
  }
}

TEST_CASE("gen_spiral: parameter validation") {
  Rng rng(1);
  SpiralParams bad;
  bad.n = 1;
  CHECK_THROWS(gen_spiral(rng, bad));
  SpiralParams bad2;
  bad2.train_frac = 1.0;
  CHECK_THROWS(gen_spiral(rng, bad2));
  SpiralParams bad3;
  bad3.flip_frac = 1.5;
  CHECK_THROWS(gen_spiral(rng, bad3));
}

TEST_CASE("top1_error: halfplane net, tie breaks to the lower class") {
  const Mlp net = halfplane_net();
  Matrix x(4, 2);
  x(0, 0) = 1.0;  x(0, 1) = 0.0;   // class 0
  x(1, 0) = -2.0; x(1, 1) = 1.0;   // class 1
  x(2, 0) = 0.0;  x(2, 1) = 5.0;   // tie -> class 0
  x(3, 0) = 3.0;  x(3, 1) = -1.0;  // class 0
  CHECK(top1_error(net, x, {0, 1, 0, 0}) == 0.0);
  CHECK(top1_error(net, x, {1, 1, 0, 0}) == 25.0);
  CHECK(top1_error(net, x, {0, 1, 1, 0}) == 25.0);  // the tie went to class 0
  CHECK(top1_error(net, x, {1, 0, 1, 1}) == 100.0);
}

TEST_CASE("ece_from_scores: two-bin hand example gives 0.175") {
  const EceReport report =
      ece_from_scores({0.9, 0.8, 0.6, 0.4}, {true, true, false, false}, 2);
  // bin (0.5, 1]: conf mean (0.9+0.8+0.6)/3, acc 2/3; bin (0, 0.5]: conf 0.4, acc 0
  CHECK(report.ece == doctest::Approx(0.175).epsilon(1e-12));
  REQUIRE(report.bins.size() == 2);
  CHECK(report.bins[0].count == 1);
  CHECK(report.bins[1].count == 3);
  CHECK(report.bins[1].acc == doctest::Approx(2.0 / 3.0));
  CHECK(report.bins[1].conf == doctest::Approx((0.9 + 0.8 + 0.6) / 3.0));
}

TEST_CASE("ece_from_scores: edge cases and validation") {
  // a score exactly on a bin edge belongs to the lower bin: 0.5 -> (0, 0.5]
  const EceReport edge = ece_from_scores({0.5}, {true}, 2);
  CHECK(edge.bins[0].count == 1);
  CHECK(edge.bins[1].count == 0);

  // empty bins contribute nothing; one bin reduces to |acc - mean conf|
  const EceReport one = ece_from_scores({0.7, 0.9}, {true, false}, 1);
  CHECK(one.ece == doctest::Approx(std::fabs(0.5 - 0.8)));

  // perfectly calibrated scores give zero
  const EceReport zero = ece_from_scores({1.0, 1.0}, {true, true}, 10);
  CHECK(zero.ece == doctest::Approx(0.0));

  CHECK_THROWS(ece_from_scores({}, {}, 10));
  CHECK_THROWS(ece_from_scores({0.5}, {true, false}, 10));
  CHECK_THROWS(ece_from_scores({0.5}, {true}, 0));
}

TEST_CASE("ece: bin accuracies recombine to 1 - top1_error/100") {
  Rng rng(5);
  const Mlp net = Mlp::init({2, 8, 3}, rng);
  Matrix x(40, 2);
  std::vector<int> labels(40);
  for (int i = 0; i < 40; ++i) {
    x(i, 0) = rng.uniform(-2, 2);
    x(i, 1) = rng.uniform(-2, 2);
    labels[i] = static_cast<int>(rng.next_below(3));
  }
  const EceReport report = ece(net, x, labels, 10);
  double acc = 0.0;
  int total = 0;
  for (const auto& bin : report.bins) {
    acc += bin.acc * bin.count;
    total += bin.count;
    if (bin.count > 0) CHECK(bin.conf > 1.0 / 3.0 - 1e-12);  // max softmax >= 1/C
  }
  CHECK(total == 40);
  CHECK(acc / 40.0 == doctest::Approx(1.0 - top1_error(net, x, labels) / 100.0));
  CHECK(report.ece >= 0.0);
  CHECK(report.ece <= 1.0);
}

TEST_CASE("eval_boundary: margins, orientation, halfplane classes") {
  SpiralDataset data;
  data.points = Matrix(2, 2);
  data.points(0, 0) = -1.0;
  data.points(0, 1) = -1.0;
  data.points(1, 0) = 1.0;
  data.points(1, 1) = 1.0;
  data.labels = {1, 0};
  data.clean_labels = data.labels;

  const Mlp net = halfplane_net();
  const BoundaryRaster raster = eval_boundary(net, data, 4);
  CHECK(raster.x_min == doctest::Approx(-1.2));
  CHECK(raster.x_max == doctest::Approx(1.2));
  CHECK(raster.y_min == doctest::Approx(-1.2));
  CHECK(raster.y_max == doctest::Approx(1.2));
  REQUIRE(raster.cell_class.size() == 16);
  for (int iy = 0; iy < 4; ++iy) {
    for (int ix = 0; ix < 4; ++ix) {
      // cell centers: x = -1.2 + (ix + 0.5)*0.6; left half -> class 1
      const int expected = ix < 2 ? 1 : 0;
      CHECK(raster.cell_class[iy * 4 + ix] == expected);
      CHECK(raster.cell_conf[iy * 4 + ix] > 0.5);
      CHECK(raster.cell_conf[iy * 4 + ix] <= 1.0);
    }
  }
  CHECK_THROWS(eval_boundary(net, data, 1));
}

TEST_CASE("export_boundary: CSV row count and PPM round trip") {
  Rng rng(11);
  SpiralParams params;
  params.n = 60;
  const SpiralDataset data = gen_spiral(rng, params);
  Rng rng2(12);
  const Mlp net = Mlp::init({2, 4, 2}, rng2);
  const BoundaryRaster raster = eval_boundary(net, data, 16);
  const std::string csv_path = "test_boundary.csv";
  const std::string ppm_path = "test_boundary.ppm";
  export_boundary(raster, data, csv_path, ppm_path);

  const PpmImage image = read_ppm(ppm_path);
  CHECK(image.width == 16);
  CHECK(image.height == 16);
  CHECK(image.channels == 3);

  std::FILE* f = std::fopen(csv_path.c_str(), "rb");
  REQUIRE(f != nullptr);
  int lines = 0, ch;
  while ((ch = std::fgetc(f)) != EOF) {
    if (ch == '\n') ++lines;
  }
  std::fclose(f);
  CHECK(lines == 16 * 16 + 1);  // header + one row per cell
  std::remove(csv_path.c_str());
  std::remove(ppm_path.c_str());
}

TEST_CASE("gather_rows / gather_labels") {
  Matrix m(3, 2);
  for (int i = 0; i < 3; ++i) {
    m(i, 0) = i;
    m(i, 1) = 10 + i;
  }
  const Matrix g = gather_rows(m, {2, 0});
  CHECK(g.rows == 2);
  CHECK(g(0, 0) == 2.0);
  CHECK(g(0, 1) == 12.0);
  CHECK(g(1, 0) == 0.0);
  CHECK(gather_labels({5, 6, 7}, {2, 0}) == std::vector<int>{7, 5});
}

TEST_CASE("train: smoke run learns, loss trend decreases, reruns are identical") {
  Rng rng(2024);
  SpiralParams params;
  params.n = 240;
  const SpiralDataset data = gen_spiral(rng, params);

  RunConfig config;
  config.mode = MixMode::None;
  config.epochs = 60;
  config.batch = 48;
  config.widths = {2, 8, 8, 2};
  config.eval_every = 0;
  config.seed = 5;
  const TrainResult run = train(data, config);
  REQUIRE(run.history.size() == 60);
  CHECK(run.final_test_error >= 0.0);
  CHECK(run.final_test_error < 50.0);  // better than chance

  // 5-epoch moving average of the training loss should not increase over the run
  const auto avg = [&](int lo) {
    double s = 0.0;
    for (int e = lo; e < lo + 5; ++e) s += run.history[e].train_loss;
    return s / 5.0;
  };
  CHECK(avg(55) < avg(0));
  CHECK(run.history.back().train_loss < run.history.front().train_loss);

  const TrainResult rerun = train(data, config);
  CHECK(rerun.final_test_error == run.final_test_error);
  for (std::size_t e = 0; e < run.history.size(); ++e) {
    CHECK(rerun.history[e].train_loss == run.history[e].train_loss);
  }
}

TEST_CASE("train: manifold multi-mix smoke run is finite and deterministic") {
  Rng rng(77);
  SpiralParams params;
  params.n = 160;
  const SpiralDataset data = gen_spiral(rng, params);

  RunConfig config;
  config.mode = MixMode::Manifold;
  config.k = 3;
  config.epochs = 30;
  config.batch = 32;
  config.widths = {2, 8, 8, 2};
  config.eval_every = 10;
  config.seed = 9;
  config.track_gradnorm = true;
  const TrainResult run = train(data, config);
  REQUIRE(run.history.size() == 30);
  for (const auto& h : run.history) {
    CHECK(std::isfinite(h.train_loss));
    CHECK(h.mean_sq_gradnorm >= 0.0);
  }
  // eval cadence: epochs 10, 20, 30 carry a test error, others don't
  CHECK(run.history[9].test_error >= 0.0);
  CHECK(run.history[10].test_error < 0.0);
  CHECK(run.history[29].test_error >= 0.0);

  const TrainResult rerun = train(data, config);
  CHECK(rerun.final_test_error == run.final_test_error);
}

TEST_CASE("train: invalid configs throw") {
  Rng rng(1);
  SpiralParams params;
  params.n = 40;
  const SpiralDataset data = gen_spiral(rng, params);
  RunConfig config;
  config.epochs = 0;
  CHECK_THROWS(train(data, config));
  RunConfig config2;
  config2.k = 0;
  CHECK_THROWS(train(data, config2));
}
