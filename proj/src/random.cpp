#include "htbnn/random.hpp"

#include <cmath>

namespace htbnn {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * M_PI * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

double Rng::cauchy() { return std::tan(M_PI * (uniform() - 0.5)); }

// Marsaglia-Tsang.
double Rng::gamma(double shape) {
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::chi_squared(double nu) {
  if (nu == std::floor(nu) && nu <= 8.0) {
    double s = 0.0;
    for (int k = 0; k < static_cast<int>(nu); ++k) {
      const double z = normal();
      s += z * z;
    }
    return s;
  }
  return 2.0 * gamma(0.5 * nu);
}

double Rng::student(double nu) {
  const double z = normal();
  return z / std::sqrt(chi_squared(nu) / nu);
}

}  // namespace htbnn
