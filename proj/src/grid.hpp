#pragma once

#include <cstddef>
#include <vector>

namespace patrol {

struct Coord {
  int row = 0;
  int col = 0;

  friend bool operator==(const Coord& a, const Coord& b) {
    return a.row == b.row && a.col == b.col;
  }
  friend bool operator!=(const Coord& a, const Coord& b) { return !(a == b); }
  friend bool operator<(const Coord& a, const Coord& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  }
};

// Dense row-major grid, origin at the top-left cell (0,0).
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width),
        data_(static_cast<size_t>(height) * width, fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  size_t size() const { return data_.size(); }

  T& at(int row, int col) { return data_[static_cast<size_t>(row) * width_ + col]; }
  const T& at(int row, int col) const {
    return data_[static_cast<size_t>(row) * width_ + col];
  }
  T& at(Coord c) { return at(c.row, c.col); }
  const T& at(Coord c) const { return at(c.row, c.col); }

  bool in_bounds(int row, int col) const {
    return row >= 0 && row < height_ && col >= 0 && col < width_;
  }
  bool in_bounds(Coord c) const { return in_bounds(c.row, c.col); }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.data_ == b.data_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

}  // namespace patrol
