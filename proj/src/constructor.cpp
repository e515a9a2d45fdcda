#include "htbnn/constructor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "htbnn/calculus.hpp"
#include "htbnn/random.hpp"

namespace htbnn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int ceil_log4(double x) {
  if (x <= 1.0) return 0;
  return static_cast<int>(std::ceil(std::log(x) / std::log(4.0) - 1e-12));
}

int ceil_log2(int n) {
  int k = 0;
  while ((1 << k) < n) ++k;
  return k;
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double factorial_of(const std::vector<int>& l) {
  double r = 1.0;
  for (int v : l)
    for (int i = 2; i <= v; ++i) r *= i;
  return r;
}

// Advances a mixed-radix counter; returns false after the last index.
bool next_index(std::vector<int>& idx, const std::vector<int>& counts) {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (++idx[k] < counts[k]) return true;
    idx[k] = 0;
  }
  return false;
}

}  // namespace

int ApproxConfig::taylor_degree() const { return static_cast<int>(std::ceil(beta)) - 1; }

double ApproxConfig::B_M() const { return std::ceil(std::pow(static_cast<double>(M), 2.0 * (beta + 1.0)) - 1e-9); }

double ApproxConfig::B_true() const { return 2.0 * std::max(1.0, F) * std::exp(2.0 * d); }

double ApproxConfig::coefficient_cap() const { return std::max(B_true(), B_M() * B_M()); }

double ApproxConfig::band() const { return std::pow(static_cast<double>(M), -2.0 * (beta + 1.0)); }

void ApproxConfig::validate() const {
  if (d < 1) throw PreconditionError("approximation needs d >= 1");
  if (!(beta > 0.0)) throw PreconditionError("approximation needs beta > 0");
  if (!(F > 0.0)) throw PreconditionError("approximation needs F > 0");
  if (M < 2) throw PreconditionError("approximation needs M >= 2");
  const double lhs = std::pow(static_cast<double>(M), 2.0 * beta);
  const double rhs = construction_constant * std::pow(std::max(1.0, F), 4.0 * (beta + 1.0));
  if (lhs < rhs) {
    std::ostringstream os;
    os << "M too small: M^{2 beta} = " << lhs << " < C (1 v F)^{4(beta+1)} = " << rhs;
    throw PreconditionError(os.str());
  }
}

void assert_coefficient_cap(const Network& net, double cap, const std::string& what) {
  const double m = net.max_abs_coefficient();
  if (m > cap) {
    std::ostringstream os;
    os << what << ": coefficient " << m << " exceeds cap " << cap;
    throw std::logic_error(os.str());
  }
}

Eigen::MatrixXd verification_points(const ApproxConfig& cfg, int points, std::uint64_t seed) {
  if (points < 2) throw PreconditionError("verification needs at least two points");
  const int d = cfg.d;
  Rng rng(seed);
  std::vector<VectorXd> out;
  if (d == 1) {
    for (int i = 0; i < points; ++i) out.push_back(VectorXd::Constant(1, -1.0 + 2.0 * i / (points - 1)));
  } else {
    // Latin hypercube: one point per stratum in every coordinate.
    std::vector<std::vector<int>> perm(static_cast<std::size_t>(d));
    for (auto& p : perm) {
      p.resize(static_cast<std::size_t>(points));
      for (int i = 0; i < points; ++i) p[static_cast<std::size_t>(i)] = i;
      std::shuffle(p.begin(), p.end(), rng.engine());
    }
    for (int i = 0; i < points; ++i) {
      VectorXd x(d);
      for (int k = 0; k < d; ++k)
        x(k) = -1.0 + 2.0 * (perm[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] + rng.uniform()) / points;
      out.push_back(x);
    }
  }
  // Faces of the fine cubes of the plain and shifted grids sit at multiples of 1/M^2.
  const double m2 = static_cast<double>(cfg.M) * cfg.M;
  const int faces = static_cast<int>(2.0 * m2);
  const double band = cfg.band();
  auto on_face = [&](VectorXd x, int k, int face, int step) {
    x(k) = -1.0 + face / m2 + 0.1 * step * band;
    if (x(k) >= -1.0 && x(k) <= 1.0) out.push_back(x);
  };
  if (d == 1) {
    for (int face = 0; face <= faces; ++face)
      for (int step = -30; step <= 30; ++step) on_face(VectorXd::Zero(1), 0, face, step);
  } else {
    const std::size_t base = out.size();
    for (std::size_t i = 0; i < base; ++i)
      on_face(out[i], static_cast<int>(rng.index(static_cast<std::uint64_t>(d))),
              static_cast<int>(rng.index(static_cast<std::uint64_t>(faces) + 1)),
              static_cast<int>(rng.index(61)) - 30);
  }
  Eigen::MatrixXd X(d, static_cast<Eigen::Index>(out.size()));
  for (std::size_t i = 0; i < out.size(); ++i) X.col(static_cast<Eigen::Index>(i)) = out[i];
  return X;
}

double sup_error(const Network& net, const SmoothFunction& f, const Eigen::MatrixXd& X) {
  double worst = 0.0;
  const Eigen::Index chunk = 4096;
  for (Eigen::Index s = 0; s < X.cols(); s += chunk) {
    const Eigen::Index m = std::min(chunk, X.cols() - s);
    const Eigen::MatrixXd y = forward(net, X.middleCols(s, m));
    for (Eigen::Index i = 0; i < m; ++i) worst = std::max(worst, std::fabs(y(0, i) - f(X.col(s + i))));
  }
  return worst;
}

BuildReport build_report(const std::string& name, const Network& net, double cap) {
  return {name, net.depth(), net.architecture().max_hidden_width(), net.size(), net.active_count(),
          net.max_abs_coefficient(), cap};
}

// ---------------------------------------------------------------------------
// Multiplication, products and polynomials

Network mult_net(int R) {
  if (R < 1) throw PreconditionError("mult_net needs R >= 1");
  LayerStack layers;
  MatrixXd w1(8, 2);
  VectorXd v1 = VectorXd::Zero(8);
  for (int c = 0; c < 2; ++c) {
    const double sy = c == 0 ? 0.5 : -0.5;  // s = (x + y)/2 or (x - y)/2
    w1.row(4 * c + 0) << 0.5, sy;
    w1.row(4 * c + 1) << -0.5, -sy;
    w1.row(4 * c + 2) << 0.5, sy;
    w1.row(4 * c + 3) << -0.5, -sy;
    v1(4 * c + 2) = -0.5;
    v1(4 * c + 3) = -0.5;
  }
  layers.push_back({w1, v1});
  if (R == 1) {
    MatrixXd out(1, 8);
    out << 0.5, 0.5, 1, 1, -0.5, -0.5, -1, -1;
    layers.push_back({out, VectorXd::Zero(1)});
    return network_from_layers(layers);
  }
  MatrixXd w2 = MatrixXd::Zero(6, 8);
  VectorXd v2 = VectorXd::Zero(6);
  for (int c = 0; c < 2; ++c) {
    w2.block(3 * c, 4 * c, 1, 4) << 0.5, 0.5, 1, 1;
    w2.block(3 * c + 1, 4 * c, 1, 4) << 2, 2, -4, -4;
    w2.block(3 * c + 2, 4 * c, 1, 4) << 2, 2, -4, -4;
    v2(3 * c + 2) = -0.5;
  }
  layers.push_back({w2, v2});
  for (int k = 2; k < R; ++k) {
    const double p4 = std::pow(4.0, k);
    MatrixXd w = MatrixXd::Zero(6, 6);
    VectorXd v = VectorXd::Zero(6);
    for (int c = 0; c < 2; ++c) {
      w.block(3 * c, 3 * c, 1, 3) << 1, -2 / p4, 4 / p4;
      w.block(3 * c + 1, 3 * c, 1, 3) << 0, 2, -4;
      w.block(3 * c + 2, 3 * c, 1, 3) << 0, 2, -4;
      v(3 * c + 2) = -0.5;
    }
    layers.push_back({w, v});
  }
  const double p4 = std::pow(4.0, R);
  MatrixXd out(1, 6);
  out << 1, -2 / p4, 4 / p4, -1, 2 / p4, -4 / p4;
  layers.push_back({out, VectorXd::Zero(1)});
  return network_from_layers(layers);
}

std::vector<std::vector<int>> multi_indices(int d, int N) {
  std::vector<std::vector<int>> out;
  for (int deg = 0; deg <= N; ++deg) {
    std::vector<std::vector<int>> level;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    std::vector<int> counts(static_cast<std::size_t>(d), deg + 1);
    do {
      int s = 0;
      for (int v : idx) s += v;
      if (s == deg) level.push_back(idx);
    } while (next_index(idx, counts));
    std::sort(level.begin(), level.end(), std::greater<>());
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

int poly_min_R(int N) { return ceil_log4(2.0 * std::pow(4.0, 2.0 * (N + 1))); }

Network product_net(int input_dim, const std::vector<std::vector<int>>& terms_in, int R) {
  if (terms_in.empty()) throw StructuralError("product_net needs at least one term");
  std::vector<std::vector<int>> terms = terms_in;
  std::size_t longest = 1;
  for (auto& t : terms) {
    if (t.empty()) t.push_back(-1);
    for (int i : t)
      if (i >= input_dim) throw StructuralError("product_net factor index out of range");
    longest = std::max(longest, t.size());
  }
  const int P = 1 << ceil_log2(static_cast<int>(longest));
  const auto nt = static_cast<Eigen::Index>(terms.size());
  if (P == 1) {
    MatrixXd A = MatrixXd::Zero(nt, input_dim);
    VectorXd b = VectorXd::Zero(nt);
    for (Eigen::Index t = 0; t < nt; ++t) {
      const int i = terms[static_cast<std::size_t>(t)][0];
      if (i >= 0)
        A(t, i) = 1.0;
      else
        b(t) = 1.0;
    }
    return affine_net(A, b);
  }
  const Network base = mult_net(R);
  std::vector<Network> blocks;
  for (auto t : terms) {
    t.resize(static_cast<std::size_t>(P), -1);
    for (int m = 0; m < P / 2; ++m) {
      MatrixXd A = MatrixXd::Zero(2, input_dim);
      VectorXd b = VectorXd::Zero(2);
      for (int r = 0; r < 2; ++r) {
        const int i = t[static_cast<std::size_t>(2 * m + r)];
        if (i >= 0)
          A(r, i) = 1.0;
        else
          b(r) = 1.0;
      }
      blocks.push_back(affine_input(base, A, b));
    }
  }
  Network net = parallelize(blocks);
  for (int group = P / 2; group > 1; group /= 2) {
    const int n_in = static_cast<int>(nt) * group;
    blocks.clear();
    for (int m = 0; m < n_in / 2; ++m) blocks.push_back(affine_input(base, selector(n_in, {2 * m, 2 * m + 1}), VectorXd::Zero(2)));
    net = compose_merged(net, parallelize(blocks));
  }
  return net;
}

Network poly_net(int d, int N, const std::vector<double>& coeffs, int R) {
  if (d < 1 || N < 0) throw PreconditionError("poly_net needs d >= 1 and N >= 0");
  if (R < poly_min_R(N)) {
    std::ostringstream os;
    os << "poly_net needs R >= " << poly_min_R(N) << " for degree " << N << ", got " << R;
    throw PreconditionError(os.str());
  }
  const auto idx = multi_indices(d, N);
  if (coeffs.size() != idx.size()) throw StructuralError("poly_net needs one coefficient per monomial");
  const int C = static_cast<int>(idx.size());
  std::vector<std::vector<int>> terms;
  for (int u = 0; u < C; ++u) {
    std::vector<int> t{d + u};
    for (int i = 0; i < d; ++i)
      for (int p = 0; p < idx[static_cast<std::size_t>(u)][static_cast<std::size_t>(i)]; ++p) t.push_back(i);
    terms.push_back(t);
  }
  Network prod = product_net(d + C, terms, R);
  MatrixXd r(1, C);
  for (int u = 0; u < C; ++u) r(0, u) = coeffs[static_cast<std::size_t>(u)];
  Network net = affine_output(prod, r, VectorXd::Zero(1));
  double cap = 4.0;
  for (double c : coeffs) cap = std::max(cap, std::fabs(c));
  assert_coefficient_cap(net, cap, "poly_net");
  return net;
}

// ---------------------------------------------------------------------------
// Indicator, test and clamp networks

Network indicator_net(const VectorXd& a, const VectorXd& b, double R) {
  const auto d = a.size();
  if (b.size() != d || d < 1) throw StructuralError("indicator_net: a and b must have equal positive length");
  if (!(R > 0.0)) throw StructuralError("indicator_net needs R > 0");
  for (Eigen::Index i = 0; i < d; ++i)
    if (b(i) - a(i) < 2.0 / R * (1.0 - 1e-12)) throw StructuralError("indicator_net needs b - a >= 2/R");
  MatrixXd w1 = MatrixXd::Zero(2 * d, d);
  VectorXd v1(2 * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    w1(i, i) = -1.0;
    v1(i) = a(i) + 1.0 / R;
    w1(d + i, i) = 1.0;
    v1(d + i) = -b(i) + 1.0 / R;
  }
  MatrixXd w2 = MatrixXd::Constant(1, 2 * d, -R);
  VectorXd v2 = VectorXd::Ones(1);
  Network net = network_from_layers({{w1, v1}, {w2, v2}, {MatrixXd::Ones(1, 1), VectorXd::Zero(1)}});
  const double cap = std::max({R, 1.0 / R, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  if (net.max_abs_coefficient() > cap)
    throw PreconditionError("indicator_net: shift |a| + 1/R exceeds max(R, 1/R, |a|, |b|)");
  return net;
}

Network test_net_inputs(int d, double R) {
  if (d < 1 || !(R > 0.0)) throw StructuralError("test_net needs d >= 1 and R > 0");
  const int n = 3 * d + 1;
  MatrixXd w1 = MatrixXd::Zero(2 * d + 2, n);
  VectorXd v1 = VectorXd::Zero(2 * d + 2);
  for (int i = 0; i < d; ++i) {
    w1(i, i) = -1.0;  // a_i - x_i + 1/R
    w1(i, d + i) = 1.0;
    v1(i) = 1.0 / R;
    w1(d + i, i) = 1.0;  // x_i - b_i + 1/R
    w1(d + i, 2 * d + i) = -1.0;
    v1(d + i) = 1.0 / R;
  }
  w1(2 * d, 3 * d) = 1.0;
  w1(2 * d + 1, 3 * d) = -1.0;
  MatrixXd w2 = MatrixXd::Constant(2, 2 * d + 2, -R * R);
  w2(0, 2 * d) = 1.0;
  w2(0, 2 * d + 1) = -1.0;
  w2(1, 2 * d) = -1.0;
  w2(1, 2 * d + 1) = 1.0;
  MatrixXd w3(1, 2);
  w3 << 1.0, -1.0;
  return network_from_layers({{w1, v1}, {w2, VectorXd::Zero(2)}, {w3, VectorXd::Zero(1)}});
}

Network test_net(const VectorXd& a, const VectorXd& b, double s, double R) {
  const auto d = a.size();
  if (b.size() != d || d < 1) throw StructuralError("test_net: a and b must have equal positive length");
  for (Eigen::Index i = 0; i < d; ++i)
    if (b(i) - a(i) < 2.0 / R * (1.0 - 1e-12)) throw StructuralError("test_net needs b - a >= 2/R");
  if (std::fabs(s) > R) throw StructuralError("test_net needs |s| <= R");
  const int n = static_cast<int>(d);
  MatrixXd A = MatrixXd::Zero(3 * n + 1, n);
  A.topRows(n).setIdentity();
  VectorXd c(3 * n + 1);
  c << VectorXd::Zero(n), a, b, s;
  Network net = affine_input(test_net_inputs(n, R), A, c);
  const double cap = std::max({R * R, 1.0 / R, a.cwiseAbs().maxCoeff() + 1.0 / R, b.cwiseAbs().maxCoeff() + 1.0 / R,
                               std::fabs(s)});
  assert_coefficient_cap(net, cap, "test_net");
  return net;
}

Network clamp_unit_net(int dim) {
  const MatrixXd I = MatrixXd::Identity(dim, dim);
  const VectorXd one = VectorXd::Ones(dim);
  return network_from_layers({{-I, one}, {-I, one}, {I, VectorXd::Zero(dim)}});
}

Network clamp_symmetric_net(int dim) {
  MatrixXd w1(2 * dim, dim);
  w1 << MatrixXd::Identity(dim, dim), MatrixXd::Identity(dim, dim);
  VectorXd v1(2 * dim);
  v1 << VectorXd::Ones(dim), -VectorXd::Ones(dim);
  MatrixXd w2(dim, 2 * dim);
  w2 << MatrixXd::Identity(dim, dim), -MatrixXd::Identity(dim, dim);
  return network_from_layers({{w1, v1}, {w2, -VectorXd::Ones(dim)}});
}

// ---------------------------------------------------------------------------
// Grids

std::vector<std::vector<int>> grid_shifts(int d) {
  std::vector<std::vector<int>> out;
  for (int code = 0; code < (1 << d); ++code) {
    std::vector<int> v(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) v[static_cast<std::size_t>(k)] = (code >> k) & 1;
    out.push_back(v);
  }
  return out;
}

namespace {

struct Grid {
  int d;
  int M;
  double h1;  // coarse side 2/M
  double h2;  // fine side 2/M^2
  VectorXd origin;
  std::vector<int> coarse_count;
};

Grid make_grid(const ApproxConfig& cfg, std::vector<int> shift) {
  if (shift.empty()) shift.assign(static_cast<std::size_t>(cfg.d), 0);
  if (static_cast<int>(shift.size()) != cfg.d) throw StructuralError("grid shift has wrong dimension");
  Grid g{cfg.d, cfg.M, 2.0 / cfg.M, 2.0 / (static_cast<double>(cfg.M) * cfg.M), VectorXd(cfg.d), {}};
  for (int k = 0; k < cfg.d; ++k) {
    const int v = shift[static_cast<std::size_t>(k)];
    if (v != 0 && v != 1) throw StructuralError("grid shift entries must be 0 or 1");
    g.origin(k) = -1.0 - v * 0.5 * g.h2;
    g.coarse_count.push_back(cfg.M + v);
  }
  return g;
}

}  // namespace

bool fine_cube_corner(const ApproxConfig& cfg, const std::vector<int>& shift, const VectorXd& x, VectorXd& corner) {
  const Grid g = make_grid(cfg, shift);
  corner.resize(g.d);
  for (int k = 0; k < g.d; ++k) {
    const double t = std::floor((x(k) - g.origin(k)) / g.h2);
    if (t < 0 || t >= static_cast<double>(g.coarse_count[static_cast<std::size_t>(k)]) * g.M) return false;
    corner(k) = g.origin(k) + t * g.h2;
  }
  return true;
}

double tent_weight(const ApproxConfig& cfg, const std::vector<int>& shift, const VectorXd& x) {
  VectorXd c;
  if (!fine_cube_corner(cfg, shift, x, c)) return 0.0;
  const double m2 = static_cast<double>(cfg.M) * cfg.M;
  double w = 1.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) w *= std::max(0.0, 1.0 - m2 * std::fabs(c(k) + 1.0 / m2 - x(k)));
  return w;
}

// ---------------------------------------------------------------------------
// Grid approximation stages

namespace {

class GridBuilder {
 public:
  GridBuilder(const SmoothFunction& f, const ApproxConfig& cfg, const std::vector<int>& shift, bool with_check)
      : f_(f), cfg_(cfg), g_(make_grid(cfg, shift)), check_(with_check) {
    cfg_.validate();
    if (f.d != cfg.d) throw StructuralError("function dimension differs from the configuration");
    d_ = cfg.d;
    N_ = cfg.taylor_degree();
    idx_ = multi_indices(d_, N_);
    C_ = static_cast<int>(idx_.size());
    J_ = 1;
    for (int k = 0; k < d_; ++k) J_ *= cfg.M;
    R_ = cfg.B_M();
    mu_ = cfg.band();
    Fv1_ = std::max(1.0, cfg.F);
    const double m2b = std::pow(static_cast<double>(cfg.M), 2.0 * cfg.beta);
    R_poly_ = std::max(poly_min_R(N_), ceil_log4(100.0 * Fv1_ * m2b));
    R_weight_ = std::max(1, ceil_log4(100.0 * m2b));
    R_mult_ = std::max(1, ceil_log4(100.0 * cfg.B_true() * m2b));
    // fine offsets v_j
    std::vector<int> m(static_cast<std::size_t>(d_), 0), counts(static_cast<std::size_t>(d_), cfg.M);
    do {
      VectorXd v(d_);
      for (int k = 0; k < d_; ++k) v(k) = g_.h2 * m[static_cast<std::size_t>(k)];
      offsets_.push_back(v);
    } while (next_index(m, counts));
    std::vector<int> c(static_cast<std::size_t>(d_), 0);
    do {
      VectorXd v(d_);
      for (int k = 0; k < d_; ++k) v(k) = g_.origin(k) + g_.h1 * c[static_cast<std::size_t>(k)];
      corners_.push_back(v);
    } while (next_index(c, g_.coarse_count));
  }

  // x -> [x | phi21 (d) | phi31 (C J) | f1]
  Network stage_a() const {
    std::vector<Network> blocks{identity_net(d_, 2)};
    const VectorXd side = VectorXd::Constant(d_, g_.h1);
    for (const auto& c : corners_) blocks.push_back(indicator_net(c, c + side, R_));
    if (check_)
      for (const auto& c : corners_)
        blocks.push_back(indicator_net(c.array() + mu_, (c + side).array() - mu_, R_));
    Network par = parallelize(blocks);
    const int K = static_cast<int>(corners_.size());
    const int out_dim = 2 * d_ + C_ * J_ + (check_ ? 1 : 0);
    MatrixXd A = MatrixXd::Zero(out_dim, par.output_dim());
    VectorXd b = VectorXd::Zero(out_dim);
    A.topLeftCorner(d_, d_).setIdentity();
    for (int i = 0; i < K; ++i) {
      const VectorXd& c = corners_[static_cast<std::size_t>(i)];
      for (int k = 0; k < d_; ++k) A(d_ + k, d_ + i) = c(k);
      for (int u = 0; u < C_; ++u)
        for (int j = 0; j < J_; ++j)
          A(2 * d_ + u * J_ + j, d_ + i) =
              f_.derivative(c + offsets_[static_cast<std::size_t>(j)], idx_[static_cast<std::size_t>(u)]);
      if (check_) A(out_dim - 1, d_ + K + i) = -1.0;
    }
    if (check_) b(out_dim - 1) = 1.0;
    return affine_output(par, A, b);
  }

  // [x | phi21 | phi31 | f1] -> [x | phi22 (d) | phi32 (C) | f1 | f2]
  Network stage_b() const {
    const int in = 2 * d_ + C_ * J_ + (check_ ? 1 : 0);
    std::vector<int> xs(static_cast<std::size_t>(d_));
    for (int k = 0; k < d_; ++k) xs[static_cast<std::size_t>(k)] = k;
    std::vector<Network> blocks{affine_input(identity_net(d_, 2), selector(in, xs), VectorXd::Zero(d_))};
    if (check_) blocks.push_back(affine_input(identity_net(1, 2), selector(in, {in - 1}), VectorXd::Zero(1)));
    const Network base = test_net_inputs(d_, R_);
    // (x, a, b, s) with a = phi21 + v + lo, b = phi21 + v + hi; s = coefficient row + constant
    auto make_test = [&](const VectorXd& v, double lo, double hi, int s_index, double s_const) {
      MatrixXd A = MatrixXd::Zero(3 * d_ + 1, in);
      VectorXd c = VectorXd::Zero(3 * d_ + 1);
      for (int k = 0; k < d_; ++k) {
        A(k, k) = 1.0;
        A(d_ + k, d_ + k) = 1.0;
        c(d_ + k) = v(k) + lo;
        A(2 * d_ + k, d_ + k) = 1.0;
        c(2 * d_ + k) = v(k) + hi;
      }
      if (s_index >= 0) A(3 * d_, s_index) = 1.0;
      c(3 * d_) = s_const;
      return affine_input(base, A, c);
    };
    for (int j = 0; j < J_; ++j) {
      const VectorXd& v = offsets_[static_cast<std::size_t>(j)];
      for (int k = 0; k < d_; ++k) blocks.push_back(make_test(v, 0.0, g_.h2, d_ + k, v(k)));
      for (int u = 0; u < C_; ++u) blocks.push_back(make_test(v, 0.0, g_.h2, 2 * d_ + u * J_ + j, 0.0));
      if (check_) blocks.push_back(make_test(v, mu_, g_.h2 - mu_, -1, 1.0));
    }
    Network par = parallelize(blocks);
    const int out_dim = 2 * d_ + C_ + (check_ ? 2 : 0);
    MatrixXd A = MatrixXd::Zero(out_dim, par.output_dim());
    VectorXd b = VectorXd::Zero(out_dim);
    A.topLeftCorner(d_, d_).setIdentity();
    int col = d_;
    if (check_) A(2 * d_ + C_, col++) = 1.0;
    for (int j = 0; j < J_; ++j) {
      for (int k = 0; k < d_; ++k) A(d_ + k, col++) = 1.0;
      for (int u = 0; u < C_; ++u) A(2 * d_ + u, col++) = 1.0;
      if (check_) A(2 * d_ + C_ + 1, col++) = -1.0;
    }
    if (check_) b(2 * d_ + C_ + 1) = 1.0;
    return affine_output(par, A, b);
  }

  // Taylor polynomial around phi22 with derivative values phi32.
  Network taylor_block(int in) const {
    if (N_ == 0) {
      MatrixXd A = MatrixXd::Zero(1, in);
      A(0, 2 * d_) = 1.0;
      return affine_net(A, VectorXd::Zero(1));
    }
    std::vector<double> r;
    for (const auto& l : idx_) r.push_back(Fv1_ / factorial_of(l));
    Network poly = compose_merged(clamp_symmetric_net(d_ + C_), poly_net(d_, N_, r, R_poly_));
    MatrixXd A = MatrixXd::Zero(d_ + C_, in);
    for (int k = 0; k < d_; ++k) {
      A(k, k) = 1.0;
      A(k, d_ + k) = -1.0;
    }
    for (int u = 0; u < C_; ++u) A(d_ + u, 2 * d_ + u) = 1.0 / Fv1_;
    return affine_input(poly, A, VectorXd::Zero(d_ + C_));
  }

  // [x | phi22 | phi32] -> taylor value
  Network stage_c_taylor() const { return taylor_block(2 * d_ + C_); }

  // [x | phi22 | phi32 | f1 | f2] -> [fhat | w | check]
  Network stage_c_local() const {
    const int in = 2 * d_ + C_ + 2;
    const double m2 = static_cast<double>(g_.M) * g_.M;
    MatrixXd w1 = MatrixXd::Zero(2 * d_, in);
    VectorXd v1(2 * d_);
    for (int k = 0; k < d_; ++k) {
      // z = phi22 + 1/M^2 - x
      w1(2 * k, d_ + k) = 1.0;
      w1(2 * k, k) = -1.0;
      v1(2 * k) = 1.0 / m2;
      w1(2 * k + 1, d_ + k) = -1.0;
      w1(2 * k + 1, k) = 1.0;
      v1(2 * k + 1) = -1.0 / m2;
    }
    MatrixXd w2 = MatrixXd::Zero(d_, 2 * d_);
    for (int k = 0; k < d_; ++k) w2.block(k, 2 * k, 1, 2) << -m2, -m2;
    Network tents =
        network_from_layers({{w1, v1}, {w2, VectorXd::Ones(d_)}, {MatrixXd::Identity(d_, d_), VectorXd::Zero(d_)}});
    if (d_ > 1) {
      std::vector<int> all(static_cast<std::size_t>(d_));
      for (int k = 0; k < d_; ++k) all[static_cast<std::size_t>(k)] = k;
      tents = compose_merged(tents, product_net(d_, {all}, R_weight_));
    }
    MatrixXd wc = MatrixXd::Zero(1, in);
    wc(0, in - 2) = -1.0;
    wc(0, in - 1) = -1.0;
    Network check = network_from_layers({{wc, VectorXd::Ones(1)}, {-MatrixXd::Ones(1, 1), VectorXd::Ones(1)}});
    return stack({taylor_block(in), tents, check});
  }

  // [fhat | w | check] -> [f_true / B_true | w]
  Network stage_d() const {
    const double B = cfg_.B_true();
    MatrixXd w1(4, 3);
    w1 << 1, 0, -B, -1, 0, -B, 0, 1, 0, 0, -1, 0;
    MatrixXd w2(2, 4);
    w2 << 1 / B, -1 / B, 0, 0, 0, 0, 1, -1;
    return network_from_layers({{w1, VectorXd::Zero(4)}, {w2, VectorXd::Zero(2)}});
  }

  Network stage_e() const {
    return affine_output(mult_net(R_mult_), MatrixXd::Constant(1, 1, cfg_.B_true()), VectorXd::Zero(1));
  }

 private:
  const SmoothFunction& f_;
  ApproxConfig cfg_;
  Grid g_;
  bool check_;
  int d_ = 1, N_ = 0, C_ = 1, J_ = 1;
  double R_ = 1, mu_ = 0, Fv1_ = 1;
  int R_poly_ = 1, R_weight_ = 1, R_mult_ = 1;
  std::vector<std::vector<int>> idx_;
  std::vector<VectorXd> offsets_;
  std::vector<VectorXd> corners_;
};

}  // namespace

Network taylor_grid_net(const SmoothFunction& f, const ApproxConfig& cfg, const std::vector<int>& shift) {
  GridBuilder b(f, cfg, shift, false);
  Network net = compose_merged(compose_merged(b.stage_a(), b.stage_b()), b.stage_c_taylor());
  assert_coefficient_cap(net, std::max(cfg.F, cfg.B_M() * cfg.B_M()), "taylor_grid_net");
  return net;
}

Network localized_net(const SmoothFunction& f, const ApproxConfig& cfg, const std::vector<int>& shift) {
  GridBuilder b(f, cfg, shift, true);
  Network net = compose_merged(b.stage_a(), b.stage_b());
  net = compose_merged(net, b.stage_c_local());
  net = compose_merged(net, b.stage_d());
  net = compose_merged(net, b.stage_e());
  assert_coefficient_cap(net, cfg.coefficient_cap(), "localized_net");
  return net;
}

Network wide_net(const SmoothFunction& f, const ApproxConfig& cfg) {
  std::vector<Network> parts;
  for (const auto& v : grid_shifts(cfg.d)) parts.push_back(localized_net(f, cfg, v));
  Network net = stack(parts);
  net = affine_output(net, MatrixXd::Ones(1, net.output_dim()), VectorXd::Zero(1));
  assert_coefficient_cap(net, cfg.coefficient_cap(), "wide_net");
  return net;
}

int wide_depth_threshold(const ApproxConfig& cfg) {
  const int fb = cfg.taylor_degree();
  const int a = ceil_log4(std::pow(static_cast<double>(cfg.M), 2.0 * cfg.beta));
  const int b = ceil_log2(std::max(cfg.d, fb) + 1);
  return 5 + a * (b + 1);
}

double wide_width_threshold(const ApproxConfig& cfg) {
  const int fb = cfg.taylor_degree();
  return 64.0 * binom(cfg.d + fb, cfg.d) * std::pow(2.0, cfg.d) * cfg.d * cfg.d * (fb + 1) *
         std::pow(static_cast<double>(cfg.M), cfg.d);
}

Network wide_net(const SmoothFunction& f, const ApproxConfig& cfg, const Architecture& target) {
  const int L = target.depth();
  if (L < wide_depth_threshold(cfg)) {
    std::ostringstream os;
    os << "wide_net: depth " << L << " below threshold " << wide_depth_threshold(cfg);
    throw PreconditionError(os.str());
  }
  for (int l = 1; l <= L; ++l)
    if (target.width(l) < wide_width_threshold(cfg)) {
      std::ostringstream os;
      os << "wide_net: width " << target.width(l) << " below threshold " << wide_width_threshold(cfg);
      throw PreconditionError(os.str());
    }
  if (target.input_dim() != cfg.d || target.output_dim() != 1)
    throw StructuralError("wide_net: target must map R^d to R");
  Network net = wide_net(f, cfg);
  if (net.depth() > L) {
    std::ostringstream os;
    os << "wide_net: built depth " << net.depth() << " exceeds target depth " << L;
    throw StructuralError(os.str());
  }
  net = extend_output(net, L - net.depth());
  for (int l = 1; l <= L; ++l)
    if (net.architecture().width(l) > target.width(l))
      throw StructuralError("wide_net: built width exceeds target width at layer " + std::to_string(l));
  return enlarge(net, target);
}

}  // namespace htbnn
