#include "htbnn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace htbnn {

namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gauss_kronrod(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double s = f(center - dx) + f(center + dx);
    resk += kWgk[j] * s;
    if (j % 2 == 1) resg += kWg[j / 2] * s;
  }
  return {a, b, resk * half, std::fabs((resk - resg) * half)};
}

QuadratureResult integrate_finite(const std::function<double(double)>& f, double a, double b,
                                  const QuadratureOptions& opt) {
  if (a == b) return {0.0, 0.0, 0, true};
  // Start from equal pieces so that a narrow feature cannot hide between the nodes of a single rule.
  std::priority_queue<Segment> heap;
  double total = 0.0, err = 0.0;
  int evals = 0;
  const int pieces = std::max(1, opt.min_intervals);
  for (int i = 0; i < pieces; ++i) {
    const double lo = a + (b - a) * i / pieces;
    const double hi = i + 1 == pieces ? b : a + (b - a) * (i + 1) / pieces;
    Segment s = gauss_kronrod(f, lo, hi);
    total += s.value;
    err += s.error;
    evals += 15;
    heap.push(s);
  }
  while (static_cast<int>(heap.size()) < opt.max_intervals) {
    if (err <= std::max(opt.abs_tol, opt.rel_tol * std::fabs(total))) break;
    Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    Segment left = gauss_kronrod(f, worst.a, mid);
    Segment right = gauss_kronrod(f, mid, worst.b);
    evals += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed accumulated cancellation error.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  const bool ok = std::isfinite(total) && err <= std::max(opt.abs_tol, opt.rel_tol * std::fabs(total)) * 10.0;
  return {total, err, evals, ok};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opt) {
  if (a > b) {
    auto r = integrate(f, b, a, opt);
    r.value = -r.value;
    return r;
  }
  const bool inf_a = std::isinf(a), inf_b = std::isinf(b);
  if (!inf_a && !inf_b) return integrate_finite(f, a, b, opt);
  if (inf_a && inf_b) {
    auto left = integrate(f, a, 0.0, opt);
    auto right = integrate(f, 0.0, b, opt);
    return {left.value + right.value, left.error + right.error, left.evaluations + right.evaluations,
            left.converged && right.converged};
  }
  if (inf_b) {
    // x = a + t / (1 - t)
    auto g = [&](double t) {
      const double u = 1.0 - t;
      const double v = f(a + t / u) / (u * u);
      return std::isfinite(v) ? v : 0.0;
    };
    return integrate_finite(g, 0.0, 1.0, opt);
  }
  // x = b - t / (1 - t)
  auto g = [&](double t) {
    const double u = 1.0 - t;
    const double v = f(b - t / u) / (u * u);
    return std::isfinite(v) ? v : 0.0;
  };
  return integrate_finite(g, 0.0, 1.0, opt);
}

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           std::vector<double> breakpoints, const QuadratureOptions& opt) {
  std::sort(breakpoints.begin(), breakpoints.end());
  std::vector<double> pts{a};
  for (double p : breakpoints)
    if (p > pts.back() && p < b) pts.push_back(p);
  pts.push_back(b);
  QuadratureResult out{0.0, 0.0, 0, true};
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    auto r = integrate(f, pts[i], pts[i + 1], opt);
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
    out.converged = out.converged && r.converged;
  }
  return out;
}

}  // namespace htbnn
