#pragma once

#include <utility>

#include <Eigen/Core>

#include "ispc/errors.hpp"
#include "ispc/parallel.hpp"
#include "ispc/raster.hpp"
#include "ispc/scene_model.hpp"

namespace ispc {

// Continuous per-pixel direction (x right, y up). Vectors are unit length or
// exactly zero; magnitude holds the length before normalization.
template <typename Scalar>
struct DirectionFieldT {
  Raster<Scalar> vx;
  Raster<Scalar> vy;
  Raster<Scalar> magnitude;

  Eigen::Index width() const { return vx.cols(); }
  Eigen::Index height() const { return vx.rows(); }
  Eigen::Matrix<Scalar, 2, 1> at(Eigen::Index row, Eigen::Index col) const {
    return {vx(row, col), vy(row, col)};
  }

  static DirectionFieldT zero(Eigen::Index width, Eigen::Index height) {
    return {Raster<Scalar>::Zero(height, width), Raster<Scalar>::Zero(height, width),
            Raster<Scalar>::Zero(height, width)};
  }
};

using DirectionField = DirectionFieldT<double>;

// Raw magnitudes at or below this are treated as full cancellation.
inline constexpr double kCancellationEps = 1e-9;

// Score-weighted sum of bin center vectors. Returns the normalized vector and
// the raw length; all-zero or cancelling rows decode to (0, 0) with length 0.
template <typename Scalar = double, typename Derived>
std::pair<Eigen::Matrix<Scalar, 2, 1>, Scalar> decode_pixel(const Eigen::DenseBase<Derived>& scores,
                                                             const DirectionBinning& bins) {
  using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
  if (scores.size() != bins.size()) throw InvalidInput("score row length differs from bin count");
  Vec2 sum = Vec2::Zero();
  for (Eigen::Index k = 0; k < scores.size(); ++k) {
    auto s = static_cast<Scalar>(scores(k));
    if (!(s >= Scalar(0))) throw InvalidInput("direction scores must be non-negative");
    if (s != Scalar(0)) sum += s * bins.center(static_cast<int>(k)).template cast<Scalar>();
  }
  Scalar len = sum.norm();
  if (len <= Scalar(kCancellationEps)) return {Vec2::Zero(), Scalar(0)};
  return {sum / len, len};
}

template <typename Scalar = double>
DirectionFieldT<Scalar> decode_field(const ChannelTriple& triple, const DirectionBinning& bins,
                                     int threads = 1) {
  check_triple(triple);
  if (triple.num_bins() != bins.size()) throw InvalidInput("triple bin count differs from binning");
  auto field = DirectionFieldT<Scalar>::zero(triple.width(), triple.height());
  parallel_for(static_cast<std::size_t>(triple.height()), threads, [&](std::size_t r) {
    auto row = static_cast<Eigen::Index>(r);
    for (Eigen::Index c = 0; c < triple.width(); ++c) {
      auto [v, len] = decode_pixel<Scalar>(triple.scores(row, c), bins);
      field.vx(row, c) = v.x();
      field.vy(row, c) = v.y();
      field.magnitude(row, c) = len;
    }
  });
  return field;
}

}  // namespace ispc
