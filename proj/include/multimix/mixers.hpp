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

#ifndef MULTIMIX_MIXERS_HPP
#define MULTIMIX_MIXERS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "multimix/rng.hpp"

namespace multimix {

struct ImageShape {
  int width = 0;
  int height = 0;
  int channels = 0;

  int pixels() const { return width * height; }
  int size() const { return width * height * channels; }
  bool valid() const { return width > 0 && height > 0 && channels > 0; }
};

/// One training sample: flattened features plus a soft label. Images are
/// row-major with an explicit shape; non-image samples leave shape zeroed.
struct Sample {
  std::vector<double> features;
  std::vector<double> label;  // probability vector over classes
  ImageShape shape;           // zeroed for non-image data
};

enum class MixerKind { Input, Manifold, Cutmix, Puzzle };

std::string mixer_kind_name(MixerKind kind);

/// Where an interpolated sample came from.
struct Provenance {
  int pair_a = -1;
  int pair_b = -1;
  double lambda_effective = 0.0;  // the weight actually applied to the label
  MixerKind kind = MixerKind::Input;
  int k_index = 0;  // position within the K-interpolation sequence
};

struct MixedSample {
  std::vector<double> features;
  std::vector<double> label;
  ImageShape shape;
  Provenance provenance;
};

/// Integer pixel rectangle [x0, x1) x [y0, y1) after clipping to the image.
struct CutBox {
  double cx = 0.0, cy = 0.0;  // shared continuous center
  double w = 0.0, h = 0.0;    // unclipped extents W*sqrt(lambda), H*sqrt(lambda)
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;

  int area() const { return (x1 - x0) * (y1 - y0); }
  bool contains(const CutBox& inner) const {
    return inner.x0 >= x0 && inner.x1 <= x1 && inner.y0 >= y0 && inner.y1 <= y1;
  }
};

/// Cell-level mask with values in {0, 1/d, ..., 1}, one value per grid cell.
struct PuzzleMask {
  int d = 1;
  int grid_w = 1, grid_h = 1;
  std::vector<double> cells;  // grid_h * grid_w, row-major

  double mean() const;
};

/// (1-lambda)*a + lambda*b elementwise. Note the convention: lambda weights
/// the second argument.
std::vector<double> mix(const std::vector<double>& a, const std::vector<double>& b,
                        double lambda);

/// K linear interpolations of a sample pair, one per weight in seq.
std::vector<MixedSample> input_multimix(const Sample& a, const Sample& b,
                                        const std::vector<double>& seq,
                                        int pair_a = -1, int pair_b = -1);

/// Box geometry for one (center, lambda): extents (W*sqrt(lambda),
/// H*sqrt(lambda)), bounds rounded to nearest pixel and clipped; an extent
/// spanning a full dimension covers it entirely.
CutBox compute_cut_box(double cx, double cy, int width, int height, double lambda);

/// K nested cut boxes with a shared random center; box k has extents
/// (W*sqrt(lambda_k), H*sqrt(lambda_k)). The label weight is the clipped box
/// area over the image area. Boxes are returned through `boxes_out` when
/// non-null.
std::vector<MixedSample> cut_multimix(const Sample& a, const Sample& b,
                                      const std::vector<double>& seq, Rng& rng,
                                      std::vector<CutBox>* boxes_out = nullptr,
                                      int pair_a = -1, int pair_b = -1);

/// K puzzle masks over a gw x gh cell grid; each cell's value is t/d with
/// binomial probability C(d,t) lambda^t (1-lambda)^(d-t). Identity transport,
/// no saliency. The label weight is the mask mean.
std::vector<MixedSample> puzzle_multimix(const Sample& a, const Sample& b,
                                         const std::vector<double>& seq, Rng& rng,
                                         int d, int grid_w, int grid_h,
                                         std::vector<PuzzleMask>* masks_out = nullptr,
                                         int pair_a = -1, int pair_b = -1);

/// Build one puzzle mask for a single lambda.
PuzzleMask sample_puzzle_mask(Rng& rng, double lambda, int d, int grid_w, int grid_h);

/// Clamp a mixed image to [0,1] and quantize to 8-bit pixels for the PPM
/// writer. Throws on non-image samples.
std::vector<std::uint8_t> preview_to_image(const MixedSample& mixed);

}  // namespace multimix

#endif  // MULTIMIX_MIXERS_HPP
