#pragma once

#include <cstdint>
#include <Eigen/Core>

namespace ispc {

// Row-major image grid: rows() is the height, cols() the width.
template <typename T>
using Raster = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using LabelId = std::uint8_t;
using DepthClass = std::uint8_t;
using InstanceId = std::int32_t;

struct PixelCoord {
  int col = 0;
  int row = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

template <typename A, typename B>
bool same_shape(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

inline bool in_bounds(PixelCoord p, Eigen::Index width, Eigen::Index height) {
  return p.col >= 0 && p.row >= 0 && p.col < width && p.row < height;
}

}  // namespace ispc
