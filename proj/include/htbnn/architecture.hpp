#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace htbnn {

/// Depth L and widths (r_0, ..., r_{L+1}) of a fully connected ReLU network.
///
/// Coefficients are stored layer by layer. Layer l (1-based) is an
/// r_l x (r_{l-1} + 1) row-major block whose column 0 holds the shift.
class Architecture {
 public:
  struct Position {
    int layer;  // 1 .. L+1
    int row;    // 0 .. r_l - 1
    int col;    // 0 is the shift, 1 .. r_{l-1} are weights
  };

  Architecture(int depth, std::vector<int> widths);

  int depth() const noexcept { return depth_; }
  const std::vector<int>& widths() const noexcept { return widths_; }
  int width(int l) const { return widths_.at(static_cast<std::size_t>(l)); }
  int input_dim() const noexcept { return widths_.front(); }
  int output_dim() const noexcept { return widths_.back(); }
  int max_hidden_width() const noexcept;
  int max_width() const noexcept;

  /// Total number of coefficients T.
  std::size_t size() const noexcept { return offsets_.back(); }
  std::size_t layer_offset(int l) const { return offsets_.at(static_cast<std::size_t>(l - 1)); }
  std::size_t layer_size(int l) const;
  std::size_t flat_index(int l, int row, int col) const;
  Position position(std::size_t k) const;

  bool operator==(const Architecture& other) const {
    return depth_ == other.depth_ && widths_ == other.widths_;
  }

  std::string to_string() const;

 private:
  int depth_;
  std::vector<int> widths_;
  std::vector<std::size_t> offsets_;
};

/// T = number of coefficients, V = prod_{l=0}^{L} (r_l + 1).
///
/// V is held as a double (exact up to 2^53) together with its logarithm.
struct ParamCount {
  std::size_t T;
  double V;
  double log_V;
};

ParamCount param_count(const Architecture& arch);

/// Architecture with L hidden layers of equal width r.
Architecture uniform_architecture(int input_dim, int depth, int width, int output_dim = 1);

}  // namespace htbnn
