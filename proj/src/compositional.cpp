#include "htbnn/compositional.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "htbnn/calculus.hpp"
#include "htbnn/schedule.hpp"

namespace htbnn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void CompositionSpec::validate() const {
  if (q < 0) throw PreconditionError("composition needs q >= 0");
  const auto layers_expected = static_cast<std::size_t>(q) + 1;
  if (d.size() != layers_expected + 1 || t.size() != layers_expected || beta.size() != layers_expected ||
      layers.size() != layers_expected)
    throw PreconditionError("composition vectors have inconsistent lengths");
  if (d.back() != 1) throw PreconditionError("composition must end in dimension 1");
  if (!(K > 0.0)) throw PreconditionError("composition needs K > 0");
  for (int i = 0; i <= q; ++i) {
    const auto& layer = layers[static_cast<std::size_t>(i)];
    if (static_cast<int>(layer.size()) != d[static_cast<std::size_t>(i) + 1])
      throw PreconditionError("layer " + std::to_string(i) + " needs d_{i+1} components");
    if (t[static_cast<std::size_t>(i)] > d[static_cast<std::size_t>(i)])
      throw PreconditionError("effective dimension exceeds ambient dimension");
    for (const auto& c : layer) {
      if (static_cast<int>(c.inputs.size()) != t[static_cast<std::size_t>(i)] || c.g.d != t[static_cast<std::size_t>(i)])
        throw PreconditionError("component input count differs from t_i");
      for (int k : c.inputs)
        if (k < 0 || k >= d[static_cast<std::size_t>(i)]) throw PreconditionError("component input out of range");
    }
  }
}

double CompositionSpec::operator()(const VectorXd& x) const {
  VectorXd u = x;
  for (const auto& layer : layers) {
    VectorXd next(static_cast<Eigen::Index>(layer.size()));
    for (std::size_t j = 0; j < layer.size(); ++j) {
      VectorXd z(static_cast<Eigen::Index>(layer[j].inputs.size()));
      for (std::size_t k = 0; k < layer[j].inputs.size(); ++k) z(static_cast<Eigen::Index>(k)) = u(layer[j].inputs[k]);
      next(static_cast<Eigen::Index>(j)) = layer[j].g(z);
    }
    u = next;
  }
  return u(0);
}

std::vector<int> composition_grid_sizes(const CompositionSpec& spec, double n, double gamma) {
  const auto bstar = RateSpec::effective_smoothness(spec.beta);
  const double base = n / std::pow(std::log(n), gamma);
  std::vector<int> M;
  for (int i = 0; i <= spec.q; ++i) {
    const double e = 1.0 / (2.0 * (2.0 * bstar[static_cast<std::size_t>(i)] + spec.t[static_cast<std::size_t>(i)]));
    M.push_back(std::max(2, static_cast<int>(std::ceil(std::pow(std::max(base, 1.0), e) - 1e-12))));
  }
  return M;
}

namespace {

// Component i, j rescaled to [-1, 1]^{t_i} together with its Hoelder radius.
SmoothFunction rescaled(const CompositionSpec& spec, int i, const SmoothFunction& g) {
  const double K = spec.K;
  const int q = spec.q;
  const bool first = i == 0, last = i == q;
  return {g.d, [=](const VectorXd& z, const std::vector<int>& l) {
            int order = 0;
            for (int v : l) order += v;
            if (first) {
              // input u = (z + 1)/2 in [0, 1]^t
              const VectorXd u = (z.array() + 1.0) / 2.0;
              const double dv = std::pow(0.5, order) * g.derivative(u, l);
              if (last) return dv;
              return dv / (2.0 * K) + (order == 0 ? 0.5 : 0.0);
            }
            const VectorXd u = K * z;
            const double dv = std::pow(K, order) * g.derivative(u, l);
            if (last) return dv;
            return dv / (2.0 * K) + (order == 0 ? 0.5 : 0.0);
          }};
}

double component_radius(const CompositionSpec& spec, int i) {
  const double K = spec.K, b = spec.beta[static_cast<std::size_t>(i)];
  if (spec.q == 0) return std::max(1.0, K);
  if (i == 0) return 1.0;
  if (i == spec.q) return K * std::pow(2.0 * K, b);
  return std::pow(2.0 * K, b);
}

Network natural_network(const CompositionSpec& spec, const std::vector<int>& M, double construction_constant) {
  Network total = identity_net(spec.d[0], 1);
  bool started = false;
  for (int i = 0; i <= spec.q; ++i) {
    ApproxConfig cfg;
    cfg.d = spec.t[static_cast<std::size_t>(i)];
    cfg.beta = spec.beta[static_cast<std::size_t>(i)];
    cfg.F = component_radius(spec, i);
    cfg.M = M[static_cast<std::size_t>(i)];
    cfg.construction_constant = construction_constant;
    const int din = spec.d[static_cast<std::size_t>(i)];
    std::vector<Network> parts;
    for (const auto& comp : spec.layers[static_cast<std::size_t>(i)]) {
      Network w = wide_net(rescaled(spec, i, comp.g), cfg);
      // u in [0, 1] -> z = 2u - 1
      MatrixXd A = 2.0 * selector(din, comp.inputs);
      w = affine_input(w, A, -VectorXd::Ones(A.rows()));
      if (i < spec.q) w = compose_merged(w, clamp_unit_net(1));
      parts.push_back(w);
    }
    Network layer = stack(parts);
    total = started ? compose_merged(total, layer) : layer;
    started = true;
  }
  return total;
}

struct Shape {
  int depth;
  int width;
};

}  // namespace

bool active_block_confined(const Network& net, int r) {
  for (int l = 1; l <= net.depth() + 1; ++l) {
    const auto W = net.weights(l);
    const auto v = net.shift(l);
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      if (i >= r && v(i) != 0.0) return false;
      for (Eigen::Index j = 0; j < W.cols(); ++j)
        if ((i >= r || j >= r) && W(i, j) != 0.0) return false;
    }
  }
  return true;
}

CompositionalResult compositional_net(const CompositionSpec& spec, double n, double delta, double gamma,
                                      const CompositionOptions& opt) {
  spec.validate();
  if (!(n >= 3.0)) throw PreconditionError("compositional_net needs n >= 3");
  const auto M = composition_grid_sizes(spec, n, gamma);
  Network net = natural_network(spec, M, opt.construction_constant);

  CompositionalResult res;
  res.net = net;
  res.M = M;
  res.target_depth = static_cast<int>(std::ceil(std::pow(std::log(n), 1.0 + delta) - 1e-12));
  res.target_width = static_cast<int>(std::ceil(std::sqrt(n) - 1e-12));
  res.r_star = std::max(net.architecture().max_hidden_width(), spec.d[0]);

  auto fits = [&](const Network& candidate, double nn) {
    const int L = static_cast<int>(std::ceil(std::pow(std::log(nn), 1.0 + delta) - 1e-12));
    const int r = static_cast<int>(std::ceil(std::sqrt(nn) - 1e-12));
    return candidate.depth() <= L && candidate.architecture().max_hidden_width() <= r &&
           (candidate.depth() == L || r >= 2);
  };

  if (fits(net, n)) {
    Network embedded = extend_output(net, res.target_depth - net.depth());
    std::vector<int> widths(static_cast<std::size_t>(res.target_depth) + 2, res.target_width);
    widths.front() = spec.d[0];
    widths.back() = 1;
    res.net = enlarge(embedded, Architecture(res.target_depth, widths));
    res.theoretical = true;
    res.minimal_n = 0.0;
  }

  // Smallest n = 2^k whose own construction fits its theoretical architecture.
  std::map<std::vector<int>, Shape> cache;
  for (int k = 2; k <= opt.max_log2_n; ++k) {
    const double nn = std::ldexp(1.0, k);
    const auto Mk = composition_grid_sizes(spec, nn, gamma);
    auto it = cache.find(Mk);
    if (it == cache.end()) {
      long cells = 1;
      for (std::size_t i = 0; i < Mk.size(); ++i)
        for (int p = 0; p < spec.t[i]; ++p) cells *= Mk[i];
      if (cells > 4096) break;
      Network cand = natural_network(spec, Mk, opt.construction_constant);
      it = cache.emplace(Mk, Shape{cand.depth(), cand.architecture().max_hidden_width()}).first;
    }
    const int L = static_cast<int>(std::ceil(std::pow(std::log(nn), 1.0 + delta) - 1e-12));
    const int r = static_cast<int>(std::ceil(std::sqrt(nn) - 1e-12));
    if (it->second.depth <= L && it->second.width <= r) {
      res.minimal_n = nn;
      break;
    }
  }

  if (!res.theoretical && opt.strict) {
    std::ostringstream os;
    os << "compositional_net: construction (depth " << net.depth() << ", width "
       << net.architecture().max_hidden_width() << ") does not fit F(" << res.target_depth << ", r(" << res.target_width
       << ")) at n = " << n << "; smallest fitting n = " << res.minimal_n;
    throw PreconditionError(os.str());
  }

  res.sparsity = res.net.active_count();
  res.max_coefficient = res.net.max_abs_coefficient();
  res.c_exponent = 1;
  while (res.max_coefficient > std::pow(n, res.c_exponent)) ++res.c_exponent;
  return res;
}

}  // namespace htbnn
