#pragma once

#include <cstddef>
#include <vector>

#include "lfseg/error.hpp"

namespace lfseg {

/// Row-major width x height buffer.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 0 || height < 0) throw ArgumentError("negative grid size");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int col, int row) { return data_[index(col, row)]; }
  const T& operator()(int col, int row) const { return data_[index(col, row)]; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  bool contains(int col, int row) const noexcept { return col >= 0 && row >= 0 && col < width_ && row < height_; }

  std::size_t index(int col, int row) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
  }

  const std::vector<T>& data() const noexcept { return data_; }
  std::vector<T>& data() noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

}  // namespace lfseg
