#include "htbnn/architecture.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "htbnn/errors.hpp"

namespace htbnn {

Architecture::Architecture(int depth, std::vector<int> widths)
    : depth_(depth), widths_(std::move(widths)) {
  if (depth_ < 0) throw StructuralError("architecture depth must be non-negative");
  if (widths_.size() != static_cast<std::size_t>(depth_) + 2)
    throw StructuralError("architecture needs depth + 2 widths, got " + std::to_string(widths_.size()));
  for (int w : widths_)
    if (w < 1) throw StructuralError("architecture widths must be positive");
  offsets_.resize(static_cast<std::size_t>(depth_) + 2);
  offsets_[0] = 0;
  for (int l = 1; l <= depth_ + 1; ++l) {
    auto rows = static_cast<std::size_t>(widths_[l]);
    auto cols = static_cast<std::size_t>(widths_[l - 1]) + 1;
    offsets_[l] = offsets_[l - 1] + rows * cols;
  }
}

int Architecture::max_hidden_width() const noexcept {
  int m = 0;
  for (int l = 1; l <= depth_; ++l) m = std::max(m, widths_[l]);
  return m;
}

int Architecture::max_width() const noexcept {
  return *std::max_element(widths_.begin(), widths_.end());
}

std::size_t Architecture::layer_size(int l) const {
  return offsets_.at(static_cast<std::size_t>(l)) - offsets_.at(static_cast<std::size_t>(l - 1));
}

std::size_t Architecture::flat_index(int l, int row, int col) const {
  if (l < 1 || l > depth_ + 1) throw StructuralError("layer index out of range");
  if (row < 0 || row >= widths_[l] || col < 0 || col > widths_[l - 1])
    throw StructuralError("coefficient position out of range");
  return layer_offset(l) + static_cast<std::size_t>(row) * (widths_[l - 1] + 1) + col;
}

Architecture::Position Architecture::position(std::size_t k) const {
  if (k >= size()) throw StructuralError("flat coefficient index out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), k);
  int l = static_cast<int>(it - offsets_.begin());
  std::size_t local = k - offsets_[l - 1];
  auto cols = static_cast<std::size_t>(widths_[l - 1]) + 1;
  return {l, static_cast<int>(local / cols), static_cast<int>(local % cols)};
}

std::string Architecture::to_string() const {
  std::ostringstream os;
  os << "L=" << depth_ << " r=(";
  for (std::size_t i = 0; i < widths_.size(); ++i) os << (i ? "," : "") << widths_[i];
  os << ")";
  return os.str();
}

ParamCount param_count(const Architecture& arch) {
  double v = 1.0, log_v = 0.0;
  for (int l = 0; l <= arch.depth(); ++l) {
    v *= arch.width(l) + 1.0;
    log_v += std::log(arch.width(l) + 1.0);
  }
  return {arch.size(), v, log_v};
}

Architecture uniform_architecture(int input_dim, int depth, int width, int output_dim) {
  std::vector<int> widths(static_cast<std::size_t>(depth) + 2, width);
  widths.front() = input_dim;
  widths.back() = output_dim;
  return Architecture(depth, std::move(widths));
}

}  // namespace htbnn
