#include "htbnn/calculus.hpp"

#include <algorithm>
#include <cmath>

namespace htbnn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

LayerStack layers_of(const Network& net) {
  LayerStack out;
  out.reserve(static_cast<std::size_t>(net.depth()) + 1);
  for (int l = 1; l <= net.depth() + 1; ++l) out.push_back({MatrixXd(net.weights(l)), VectorXd(net.shift(l))});
  return out;
}

Network network_from_layers(const LayerStack& layers) {
  if (layers.empty()) throw StructuralError("layer stack is empty");
  std::vector<int> widths;
  widths.push_back(static_cast<int>(layers.front().weights.cols()));
  for (const auto& layer : layers) {
    if (layer.weights.cols() != widths.back() || layer.shift.size() != layer.weights.rows())
      throw StructuralError("layer shapes do not chain");
    widths.push_back(static_cast<int>(layer.weights.rows()));
  }
  Architecture arch(static_cast<int>(layers.size()) - 1, widths);
  VectorXd theta(static_cast<Eigen::Index>(arch.size()));
  for (int l = 1; l <= arch.depth() + 1; ++l) {
    Network::LayerMap block(theta.data() + arch.layer_offset(l), arch.width(l), arch.width(l - 1) + 1);
    block.col(0) = layers[l - 1].shift;
    block.rightCols(arch.width(l - 1)) = layers[l - 1].weights;
  }
  return Network(std::move(arch), std::move(theta));
}

Network affine_net(const MatrixXd& A, const VectorXd& b) {
  if (A.rows() != b.size()) throw StructuralError("affine map shapes differ");
  return network_from_layers({{A, b}});
}

namespace {

// [I; -I]
MatrixXd split_matrix(int n) {
  MatrixXd m(2 * n, n);
  m << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
  return m;
}

// (rho(x), rho(-x)) -> (rho(x), rho(-x)) one layer later.
MatrixXd split_carry_matrix(int n) {
  MatrixXd m(2 * n, 2 * n);
  m << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n), MatrixXd::Identity(n, n);
  return m;
}

// (rho(x), rho(-x)) -> x
MatrixXd merge_matrix(int n) {
  MatrixXd m(n, 2 * n);
  m << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
  return m;
}

}  // namespace

Network identity_net(int dim, int depth) {
  if (dim < 1 || depth < 1) throw StructuralError("identity network needs dim >= 1 and depth >= 1");
  LayerStack layers;
  layers.push_back({split_matrix(dim), VectorXd::Zero(2 * dim)});
  for (int l = 2; l <= depth; ++l) layers.push_back({split_carry_matrix(dim), VectorXd::Zero(2 * dim)});
  layers.push_back({merge_matrix(dim), VectorXd::Zero(dim)});
  return network_from_layers(layers);
}

Network compose(const Network& f, const Network& g) {
  if (f.output_dim() != g.input_dim()) throw StructuralError("compose: output of f does not match input of g");
  LayerStack lf = layers_of(f), lg = layers_of(g);
  const int n = f.output_dim();
  LayerStack out(lf.begin(), lf.end() - 1);
  const AffineLayer& last = lf.back();
  MatrixXd w(2 * n, last.weights.cols());
  w << last.weights, -last.weights;
  VectorXd v(2 * n);
  v << last.shift, -last.shift;
  out.push_back({w, v});
  MatrixXd first(lg.front().weights.rows(), 2 * n);
  first << lg.front().weights, -lg.front().weights;
  out.push_back({first, lg.front().shift});
  out.insert(out.end(), lg.begin() + 1, lg.end());
  return network_from_layers(out);
}

Network compose_merged(const Network& f, const Network& g) {
  if (f.output_dim() != g.input_dim()) throw StructuralError("compose: output of f does not match input of g");
  LayerStack lf = layers_of(f), lg = layers_of(g);
  LayerStack out(lf.begin(), lf.end() - 1);
  const AffineLayer& a = lf.back();
  const AffineLayer& b = lg.front();
  out.push_back({b.weights * a.weights, b.weights * a.shift + b.shift});
  out.insert(out.end(), lg.begin() + 1, lg.end());
  return network_from_layers(out);
}

Network parallelize(const std::vector<Network>& nets) {
  if (nets.empty()) throw StructuralError("parallelize needs at least one network");
  const int L = nets.front().depth();
  const int d = nets.front().input_dim();
  for (const auto& n : nets) {
    if (n.depth() != L) throw StructuralError("parallelize: depths differ, apply depth_sync first");
    if (n.input_dim() != d) throw StructuralError("parallelize: input dimensions differ");
  }
  if (nets.size() == 1) return nets.front();
  std::vector<LayerStack> stacks;
  stacks.reserve(nets.size());
  for (const auto& n : nets) stacks.push_back(layers_of(n));
  LayerStack out;
  for (int l = 0; l <= L; ++l) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& s : stacks) {
      rows += s[l].weights.rows();
      cols += s[l].weights.cols();
    }
    if (l == 0) cols = d;
    MatrixXd w = MatrixXd::Zero(rows, cols);
    VectorXd v(rows);
    Eigen::Index r0 = 0, c0 = 0;
    for (const auto& s : stacks) {
      const auto& layer = s[l];
      w.block(r0, l == 0 ? 0 : c0, layer.weights.rows(), layer.weights.cols()) = layer.weights;
      v.segment(r0, layer.shift.size()) = layer.shift;
      r0 += layer.weights.rows();
      c0 += layer.weights.cols();
    }
    out.push_back({std::move(w), std::move(v)});
  }
  return network_from_layers(out);
}

Network parallelize(const Network& f, const Network& g) { return parallelize(std::vector<Network>{f, g}); }

Network depth_sync(const Network& f, int q) {
  if (q < 0) throw StructuralError("depth_sync needs q >= 0");
  if (q == 0) return f;
  const int n = f.input_dim();
  LayerStack lf = layers_of(f);
  LayerStack out;
  out.push_back({split_matrix(n), VectorXd::Zero(2 * n)});
  for (int k = 2; k <= q; ++k) out.push_back({split_carry_matrix(n), VectorXd::Zero(2 * n)});
  MatrixXd first(lf.front().weights.rows(), 2 * n);
  first << lf.front().weights, -lf.front().weights;
  out.push_back({first, lf.front().shift});
  out.insert(out.end(), lf.begin() + 1, lf.end());
  return network_from_layers(out);
}

Network extend_output(const Network& f, int q) {
  if (q < 0) throw StructuralError("extend_output needs q >= 0");
  if (q == 0) return f;
  const int n = f.output_dim();
  LayerStack lf = layers_of(f);
  const AffineLayer last = lf.back();
  lf.pop_back();
  MatrixXd w(2 * n, last.weights.cols());
  w << last.weights, -last.weights;
  VectorXd v(2 * n);
  v << last.shift, -last.shift;
  lf.push_back({w, v});
  for (int k = 2; k <= q; ++k) lf.push_back({split_carry_matrix(n), VectorXd::Zero(2 * n)});
  lf.push_back({merge_matrix(n), VectorXd::Zero(n)});
  return network_from_layers(lf);
}

Network stack(const std::vector<Network>& nets) {
  int L = 0;
  for (const auto& n : nets) L = std::max(L, n.depth());
  std::vector<Network> synced;
  synced.reserve(nets.size());
  for (const auto& n : nets) synced.push_back(extend_output(n, L - n.depth()));
  return parallelize(synced);
}

Network enlarge(const Network& f, const Architecture& target) {
  const Architecture& a = f.architecture();
  if (target.depth() != a.depth()) throw StructuralError("enlarge: depth must match");
  if (target.input_dim() != a.input_dim() || target.output_dim() != a.output_dim())
    throw StructuralError("enlarge: input and output dimensions must match");
  for (int l = 1; l <= a.depth(); ++l)
    if (target.width(l) < a.width(l)) throw StructuralError("enlarge: target widths must dominate");
  LayerStack lf = layers_of(f);
  LayerStack out;
  for (int l = 1; l <= a.depth() + 1; ++l) {
    MatrixXd w = MatrixXd::Zero(target.width(l), target.width(l - 1));
    VectorXd v = VectorXd::Zero(target.width(l));
    w.topLeftCorner(a.width(l), a.width(l - 1)) = lf[l - 1].weights;
    v.head(a.width(l)) = lf[l - 1].shift;
    out.push_back({std::move(w), std::move(v)});
  }
  return network_from_layers(out);
}

Network affine_input(const Network& f, const MatrixXd& A, const VectorXd& b) {
  if (A.rows() != f.input_dim() || b.size() != A.rows()) throw StructuralError("affine_input: shape mismatch");
  LayerStack lf = layers_of(f);
  lf.front().shift += lf.front().weights * b;
  lf.front().weights = lf.front().weights * A;
  return network_from_layers(lf);
}

Network affine_output(const Network& f, const MatrixXd& A, const VectorXd& b) {
  if (A.cols() != f.output_dim() || b.size() != A.rows()) throw StructuralError("affine_output: shape mismatch");
  LayerStack lf = layers_of(f);
  lf.back().shift = A * lf.back().shift + b;
  lf.back().weights = A * lf.back().weights;
  return network_from_layers(lf);
}

MatrixXd selector(int n, const std::vector<int>& idx) {
  MatrixXd s = MatrixXd::Zero(static_cast<Eigen::Index>(idx.size()), n);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= n) throw StructuralError("selector index out of range");
    s(static_cast<Eigen::Index>(k), idx[k]) = 1.0;
  }
  return s;
}

double propagation_bound(const Architecture& arch, double delta, double b) {
  const ParamCount pc = param_count(arch);
  return delta * pc.V * std::pow(std::max(b, 1.0), arch.depth()) * (arch.depth() + 1);
}

}  // namespace htbnn
