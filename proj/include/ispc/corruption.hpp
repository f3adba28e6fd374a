#pragma once

#include <cstdint>

#include "ispc/scene_model.hpp"

namespace ispc {

struct NoiseSpec {
  double direction_flip_p = 0.0;     // replace a direction row by a one-hot on a uniform random bin
  double direction_soften_sigma = 0.0;  // circular Gaussian blur of each row, in bins
  double depth_jitter_p = 0.0;       // shift depth class by +-1, clamped to 1..N
  double semantic_flip_p = 0.0;      // swap an object label for another member of its category
  int boundary_erode_px = 0;         // max displacement when resampling pixels near label boundaries
  std::uint64_t seed = 0;

  void validate() const;
};

// Uniform double in [0, 1) keyed by (seed, pixel, stage, draw); independent of
// evaluation order.
double keyed_uniform(std::uint64_t seed, std::uint64_t pixel, std::uint32_t stage, std::uint32_t draw);

// Perturbs a triple. Stages run in order: boundary resampling, semantic flip,
// depth jitter, direction flip, softening. Output rows stay normalized.
ChannelTriple corrupt(const ChannelTriple& triple, const NoiseSpec& spec, const LabelSet& labels,
                      const DepthLayering& layering);

}  // namespace ispc
