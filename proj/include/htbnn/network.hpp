#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

#include "htbnn/architecture.hpp"
#include "htbnn/errors.hpp"

namespace htbnn {

/// ReLU network with a fixed architecture and a flat coefficient vector.
template <typename Scalar>
class BasicNetwork {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using LayerMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ConstLayerMap = Eigen::Map<const LayerMatrix>;
  using LayerMap = Eigen::Map<LayerMatrix>;

  BasicNetwork(Architecture arch, Vector theta) : arch_(std::move(arch)), theta_(std::move(theta)) {
    if (static_cast<std::size_t>(theta_.size()) != arch_.size())
      throw StructuralError("coefficient vector has length " + std::to_string(theta_.size()) +
                            ", architecture needs " + std::to_string(arch_.size()));
    if (!theta_.allFinite()) throw StructuralError("coefficients must be finite");
  }

  static BasicNetwork zeros(Architecture arch) {
    Vector theta = Vector::Zero(static_cast<Eigen::Index>(arch.size()));
    return BasicNetwork(std::move(arch), std::move(theta));
  }

  const Architecture& architecture() const noexcept { return arch_; }
  const Vector& coefficients() const noexcept { return theta_; }
  std::size_t size() const noexcept { return arch_.size(); }
  int depth() const noexcept { return arch_.depth(); }
  int input_dim() const noexcept { return arch_.input_dim(); }
  int output_dim() const noexcept { return arch_.output_dim(); }

  /// Layer l as an r_l x (r_{l-1} + 1) block, shift in column 0.
  ConstLayerMap layer(int l) const {
    return ConstLayerMap(theta_.data() + arch_.layer_offset(l), arch_.width(l), arch_.width(l - 1) + 1);
  }
  auto shift(int l) const { return layer(l).col(0); }
  auto weights(int l) const { return layer(l).rightCols(arch_.width(l - 1)); }

  /// Replaces the coefficients; the vector must keep the same length and be finite.
  void set_coefficients(Vector theta) {
    if (theta.size() != theta_.size()) throw StructuralError("coefficient length mismatch");
    if (!theta.allFinite()) throw StructuralError("coefficients must be finite");
    theta_ = std::move(theta);
  }

  Scalar max_abs_coefficient() const { return theta_.size() ? theta_.cwiseAbs().maxCoeff() : Scalar(0); }
  std::size_t active_count() const {
    std::size_t s = 0;
    for (Eigen::Index k = 0; k < theta_.size(); ++k) s += theta_[k] != Scalar(0);
    return s;
  }

 private:
  Architecture arch_;
  Vector theta_;
};

using Network = BasicNetwork<double>;

/// Evaluates the network on the columns of X (r_0 x m). Returns r_{L+1} x m.
template <typename Scalar, typename Derived>
typename BasicNetwork<Scalar>::Matrix forward(const BasicNetwork<Scalar>& net,
                                              const Eigen::MatrixBase<Derived>& X) {
  using Matrix = typename BasicNetwork<Scalar>::Matrix;
  if (X.rows() != net.input_dim()) throw StructuralError("input dimension mismatch");
  Matrix h = X.template cast<Scalar>();
  const int L = net.depth();
  for (int l = 1; l <= L + 1; ++l) {
    Matrix z = net.weights(l) * h;
    z.colwise() += net.shift(l);
    if (l <= L) z = z.cwiseMax(Scalar(0));
    h = std::move(z);
  }
  return h;
}

/// Scalar output of a network with r_{L+1} = 1 at a single point.
template <typename Scalar, typename Derived>
Scalar evaluate(const BasicNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  return forward(net, x)(0, 0);
}

/// Gradient with respect to the flat coefficients of sum_i <G_i, f(x_i)>,
/// where G (r_{L+1} x m) holds upstream derivatives for each column of X.
template <typename Scalar, typename DerivedX, typename DerivedG>
typename BasicNetwork<Scalar>::Vector coefficient_gradient(const BasicNetwork<Scalar>& net,
                                                           const Eigen::MatrixBase<DerivedX>& X,
                                                           const Eigen::MatrixBase<DerivedG>& G) {
  using Matrix = typename BasicNetwork<Scalar>::Matrix;
  using Vector = typename BasicNetwork<Scalar>::Vector;
  using LayerMatrix = typename BasicNetwork<Scalar>::LayerMatrix;
  const int L = net.depth();
  if (X.rows() != net.input_dim() || G.rows() != net.output_dim() || G.cols() != X.cols())
    throw StructuralError("gradient operand shapes do not match the network");
  std::vector<Matrix> acts(static_cast<std::size_t>(L) + 1);
  acts[0] = X.template cast<Scalar>();
  for (int l = 1; l <= L; ++l) {
    Matrix z = net.weights(l) * acts[l - 1];
    z.colwise() += net.shift(l);
    acts[l] = z.cwiseMax(Scalar(0));
  }
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(net.size()));
  Matrix delta = G.template cast<Scalar>();
  for (int l = L + 1; l >= 1; --l) {
    const Matrix& in = acts[l - 1];
    Eigen::Map<LayerMatrix> block(grad.data() + net.architecture().layer_offset(l), net.architecture().width(l),
                                  net.architecture().width(l - 1) + 1);
    block.col(0) = delta.rowwise().sum();
    block.rightCols(in.rows()) = delta * in.transpose();
    if (l > 1) {
      Matrix back = net.weights(l).transpose() * delta;
      delta = back.cwiseProduct((in.array() > Scalar(0)).template cast<Scalar>().matrix());
    }
  }
  return grad;
}

/// One affine map x -> W x + v of a layer stack.
struct AffineLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd shift;
};

using LayerStack = std::vector<AffineLayer>;

LayerStack layers_of(const Network& net);
Network network_from_layers(const LayerStack& layers);

}  // namespace htbnn
