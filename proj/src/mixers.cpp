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

#include "multimix/mixers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace multimix {

namespace {

void check_pair(const Sample& a, const Sample& b, const char* what) {
  if (a.features.size() != b.features.size() || a.label.size() != b.label.size()) {
    throw std::invalid_argument(std::string(what) + ": sample pair shapes differ");
  }
}

void check_image_pair(const Sample& a, const Sample& b, const char* what) {
  check_pair(a, b, what);
  if (!a.shape.valid() || !b.shape.valid() ||
      a.shape.width != b.shape.width || a.shape.height != b.shape.height ||
      a.shape.channels != b.shape.channels) {
    throw std::invalid_argument(std::string(what) + ": both samples must be images of one shape");
  }
  if (static_cast<int>(a.features.size()) != a.shape.size()) {
    throw std::invalid_argument(std::string(what) + ": feature length inconsistent with shape");
  }
}

int clamp_px(long long v, int hi) {
  return static_cast<int>(std::max(0LL, std::min(static_cast<long long>(hi), v)));
}

}  // namespace

std::string mixer_kind_name(MixerKind kind) {
  switch (kind) {
    case MixerKind::Input: return "input";
    case MixerKind::Manifold: return "manifold";
    case MixerKind::Cutmix: return "cutmix";
    case MixerKind::Puzzle: return "puzzle";
  }
  return "unknown";
}

double PuzzleMask::mean() const {
  double s = 0.0;
  for (double c : cells) s += c;
  return cells.empty() ? 0.0 : s / static_cast<double>(cells.size());
}

std::vector<double> mix(const std::vector<double>& a, const std::vector<double>& b,
                        double lambda) {
  if (a.size() != b.size()) throw std::invalid_argument("mix: length mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = (1.0 - lambda) * a[i] + lambda * b[i];
  }
  return out;
}

std::vector<MixedSample> input_multimix(const Sample& a, const Sample& b,
                                        const std::vector<double>& seq,
                                        int pair_a, int pair_b) {
  check_pair(a, b, "input_multimix");
  if (seq.empty()) throw std::invalid_argument("input_multimix: empty weight sequence");
  std::vector<MixedSample> out;
  out.reserve(seq.size());
  for (std::size_t k = 0; k < seq.size(); ++k) {
    MixedSample m;
    m.features = mix(a.features, b.features, seq[k]);
    m.label = mix(a.label, b.label, seq[k]);
    m.shape = a.shape;
    m.provenance = {pair_a, pair_b, seq[k], MixerKind::Input, static_cast<int>(k)};
    out.push_back(std::move(m));
  }
  return out;
}

CutBox compute_cut_box(double cx, double cy, int width, int height, double lambda) {
  CutBox box;
  box.cx = cx;
  box.cy = cy;
  box.w = width * std::sqrt(lambda);
  box.h = height * std::sqrt(lambda);
  if (box.w >= width) {  // extent spans the full dimension
    box.x0 = 0;
    box.x1 = width;
  } else {
    box.x0 = clamp_px(std::llround(cx - 0.5 * box.w), width);
    box.x1 = clamp_px(std::llround(cx + 0.5 * box.w), width);
  }
  if (box.h >= height) {
    box.y0 = 0;
    box.y1 = height;
  } else {
    box.y0 = clamp_px(std::llround(cy - 0.5 * box.h), height);
    box.y1 = clamp_px(std::llround(cy + 0.5 * box.h), height);
  }
  return box;
}

std::vector<MixedSample> cut_multimix(const Sample& a, const Sample& b,
                                      const std::vector<double>& seq, Rng& rng,
                                      std::vector<CutBox>* boxes_out,
                                      int pair_a, int pair_b) {
  check_image_pair(a, b, "cut_multimix");
  if (seq.empty()) throw std::invalid_argument("cut_multimix: empty weight sequence");
  const int W = a.shape.width, H = a.shape.height, C = a.shape.channels;
  const double cx = rng.uniform(0.0, static_cast<double>(W));
  const double cy = rng.uniform(0.0, static_cast<double>(H));

  std::vector<MixedSample> out;
  out.reserve(seq.size());
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const CutBox box = compute_cut_box(cx, cy, W, H, seq[k]);
    MixedSample m;
    m.features = a.features;
    for (int y = box.y0; y < box.y1; ++y) {
      for (int x = box.x0; x < box.x1; ++x) {
        const std::size_t base = static_cast<std::size_t>(y * W + x) * C;
        for (int c = 0; c < C; ++c) m.features[base + c] = b.features[base + c];
      }
    }
    const double lam_eff = static_cast<double>(box.area()) / (static_cast<double>(W) * H);
    m.label = mix(a.label, b.label, lam_eff);
    m.shape = a.shape;
    m.provenance = {pair_a, pair_b, lam_eff, MixerKind::Cutmix, static_cast<int>(k)};
    if (boxes_out) boxes_out->push_back(box);
    out.push_back(std::move(m));
  }
  return out;
}

PuzzleMask sample_puzzle_mask(Rng& rng, double lambda, int d, int grid_w, int grid_h) {
  if (d < 1) throw std::invalid_argument("sample_puzzle_mask: d must be >= 1");
  if (grid_w < 1 || grid_h < 1) throw std::invalid_argument("sample_puzzle_mask: bad grid");
  PuzzleMask mask;
  mask.d = d;
  mask.grid_w = grid_w;
  mask.grid_h = grid_h;
  mask.cells.resize(static_cast<std::size_t>(grid_w) * grid_h);
  for (auto& cell : mask.cells) {
    int t = 0;
    for (int i = 0; i < d; ++i) {
      if (rng.next_double() < lambda) ++t;
    }
    cell = static_cast<double>(t) / d;
  }
  return mask;
}

std::vector<MixedSample> puzzle_multimix(const Sample& a, const Sample& b,
                                         const std::vector<double>& seq, Rng& rng,
                                         int d, int grid_w, int grid_h,
                                         std::vector<PuzzleMask>* masks_out,
                                         int pair_a, int pair_b) {
  check_image_pair(a, b, "puzzle_multimix");
  if (seq.empty()) throw std::invalid_argument("puzzle_multimix: empty weight sequence");
  const int W = a.shape.width, H = a.shape.height, C = a.shape.channels;
  if (grid_w < 1 || grid_h < 1 || grid_w > W || grid_h > H) {
    throw std::invalid_argument("puzzle_multimix: grid does not fit the image");
  }
  const int cell_w = W / grid_w;  // last column/row absorbs any remainder
  const int cell_h = H / grid_h;

  std::vector<MixedSample> out;
  out.reserve(seq.size());
  for (std::size_t k = 0; k < seq.size(); ++k) {
    PuzzleMask mask = sample_puzzle_mask(rng, seq[k], d, grid_w, grid_h);
    MixedSample m;
    m.features.resize(a.features.size());
    for (int y = 0; y < H; ++y) {
      const int gy = std::min(y / cell_h, grid_h - 1);
      for (int x = 0; x < W; ++x) {
        const int gx = std::min(x / cell_w, grid_w - 1);
        const double mi = mask.cells[static_cast<std::size_t>(gy) * grid_w + gx];
        const std::size_t base = static_cast<std::size_t>(y * W + x) * C;
        for (int c = 0; c < C; ++c) {
          m.features[base + c] = (1.0 - mi) * a.features[base + c] + mi * b.features[base + c];
        }
      }
    }
    const double lam_eff = mask.mean();
    m.label = mix(a.label, b.label, lam_eff);
    m.shape = a.shape;
    m.provenance = {pair_a, pair_b, lam_eff, MixerKind::Puzzle, static_cast<int>(k)};
    if (masks_out) masks_out->push_back(std::move(mask));
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<std::uint8_t> preview_to_image(const MixedSample& mixed) {
  if (!mixed.shape.valid() ||
      static_cast<int>(mixed.features.size()) != mixed.shape.size()) {
    throw std::invalid_argument("preview_to_image: not an image sample");
  }
  std::vector<std::uint8_t> raster(mixed.features.size());
  for (std::size_t i = 0; i < mixed.features.size(); ++i) {
    const double v = std::clamp(mixed.features[i], 0.0, 1.0);
    raster[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return raster;
}

}  // namespace multimix
