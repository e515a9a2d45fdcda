#include <sstream>

#include "doctest.h"
#include "htbnn/calculus.hpp"
#include "htbnn/constructor.hpp"
#include "htbnn/random.hpp"
#include "htbnn/serialize.hpp"

using namespace htbnn;

namespace {

Network random_net(const Architecture& arch, Rng& rng, double b = 1.0) {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(arch.size()));
  for (auto& t : theta) t = rng.uniform(-b, b);
  return Network(arch, theta);
}

// Counts edges and shifts of the layered graph one by one.
std::size_t enumerate_coefficients(const std::vector<int>& r) {
  std::size_t count = 0;
  for (std::size_t l = 1; l < r.size(); ++l)
    for (int i = 0; i < r[l]; ++i) {
      ++count;  // shift
      for (int j = 0; j < r[l - 1]; ++j) ++count;
    }
  return count;
}

}  // namespace

TEST_CASE("param_count closed forms") {
  auto a = param_count(Architecture(1, {1, 2, 1}));
  CHECK(a.T == 7);
  CHECK(a.V == 6.0);
  auto b = param_count(Architecture(2, {2, 3, 3, 1}));
  CHECK(b.T == 25);
  CHECK(b.V == 48.0);
  CHECK(param_count(Architecture(2, {1, 3, 3, 1})).T == enumerate_coefficients({1, 3, 3, 1}));
  CHECK(enumerate_coefficients({1, 3, 3, 1}) == 22);
  CHECK(b.log_V == doctest::Approx(std::log(48.0)));
}

TEST_CASE("architecture invariants") {
  CHECK_THROWS_AS(Architecture(2, {1, 2, 1}), StructuralError);
  CHECK_THROWS_AS(Architecture(1, {1, 0, 1}), StructuralError);
  Architecture arch(2, {2, 3, 4, 1});
  CHECK(Network::zeros(arch).size() == param_count(arch).T);
  for (std::size_t k = 0; k < arch.size(); ++k) {
    auto p = arch.position(k);
    CHECK(arch.flat_index(p.layer, p.row, p.col) == k);
  }
  // Shift first within each row.
  CHECK(arch.position(0).col == 0);
  CHECK(arch.position(3).row == 1);
  CHECK(arch.position(3).col == 0);
}

TEST_CASE("forward on small nets") {
  Architecture arch(1, {1, 1, 1});
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(4);
  theta[3] = 0.0;
  theta[2] = 2.5;  // output shift
  Network c(arch, theta);
  Rng rng(3);
  for (int k = 0; k < 10; ++k) CHECK(evaluate(c, Eigen::VectorXd::Constant(1, rng.uniform(-5, 5))) == 2.5);

  // rho(x - 0.5)
  Network relu(arch, (Eigen::VectorXd(4) << -0.5, 1.0, 0.0, 1.0).finished());
  CHECK(evaluate(relu, Eigen::VectorXd::Constant(1, 0.25)) == 0.0);
  CHECK(evaluate(relu, Eigen::VectorXd::Constant(1, 0.75)) == 0.25);

  CHECK_THROWS_AS(forward(relu, Eigen::MatrixXd::Zero(2, 1)), StructuralError);
  CHECK_THROWS_AS(Network(arch, Eigen::VectorXd::Zero(3)), StructuralError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(4);
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Network(arch, bad), StructuralError);
}

TEST_CASE("mult_net at (0.5, 0.5)") {
  Network m = mult_net(3);
  Eigen::Vector2d x(0.5, 0.5);
  CHECK(std::fabs(evaluate(m, x) - 0.25) <= std::pow(4.0, -3));
}

TEST_CASE("positive homogeneity with zero shifts") {
  Rng rng(11);
  Architecture arch(1, {3, 5, 1});
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.size()));
  for (std::size_t k = 0; k < arch.size(); ++k)
    if (arch.position(k).col != 0) theta[static_cast<Eigen::Index>(k)] = rng.uniform();
  Network f(arch, theta);
  for (int t = 0; t < 50; ++t) {
    Eigen::Vector3d x(rng.uniform(), rng.uniform(), rng.uniform());
    const double lambda = rng.uniform();
    CHECK(evaluate(f, (lambda * x).eval()) == doctest::Approx(lambda * evaluate(f, x)).epsilon(1e-14));
  }
}

TEST_CASE("clip") {
  CHECK(clip(2, 1) == 1);
  CHECK(clip(-3, 1) == -1);
  CHECK(clip(0.5, 2) == 0.5);
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const double y = rng.uniform(-10, 10), B = rng.uniform(0.1, 5);
    CHECK(clip(clip(y, B), B) == clip(y, B));
    CHECK(std::fabs(clip(y, B)) <= B);
  }
}

TEST_CASE("propagation_bound values") {
  CHECK(propagation_bound(Architecture(1, {1, 1, 1}), 0.1, 1.0) == doctest::Approx(0.8));
  CHECK(propagation_bound(Architecture(2, {2, 3, 3, 1}), 0.0, 5.0) == 0.0);
}

TEST_CASE("propagation_bound dominates grid differences") {
  Rng rng(2024);
  int violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int L = 1 + static_cast<int>(rng.index(3));
    std::vector<int> r{1 + static_cast<int>(rng.index(2))};
    for (int l = 0; l < L; ++l) r.push_back(1 + static_cast<int>(rng.index(4)));
    r.push_back(1);
    Architecture arch(L, r);
    const double b = rng.uniform(0.2, 2.0), delta = rng.uniform(0.0, 0.2);
    Network f = random_net(arch, rng, b);
    Eigen::VectorXd theta = f.coefficients();
    for (auto& t : theta) t = std::clamp(t + rng.uniform(-delta, delta), -b, b);
    Network g(arch, theta);
    Eigen::MatrixXd X(r[0], 1000);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform();
    const double sup = (forward(f, X) - forward(g, X)).cwiseAbs().maxCoeff();
    violations += sup > propagation_bound(arch, delta, b);
  }
  CHECK(violations == 0);
}

TEST_CASE("calculus realizes compositions exactly") {
  Rng rng(7);
  Network f = random_net(Architecture(2, {2, 4, 3, 1}), rng);
  Network g = random_net(Architecture(1, {1, 5, 1}), rng);
  Network id = identity_net(2, 2);
  Network fi = compose(id, f);
  Network gf = compose(f, g);
  Network par = parallelize(f, random_net(Architecture(2, {2, 2, 2, 1}), rng));
  Network synced = depth_sync(f, 3);
  CHECK(synced.depth() == f.depth() + 3);
  Architecture wide(2, {2, 7, 6, 1});
  Network big = enlarge(f, wide);
  CHECK(big.architecture() == wide);
  CHECK_THROWS_AS(enlarge(f, Architecture(2, {2, 3, 3, 1})), StructuralError);
  CHECK_THROWS_AS(compose(g, f), StructuralError);

  Network f0(par.architecture(), par.coefficients());
  for (int t = 0; t < 100; ++t) {
    Eigen::Vector2d x(rng.uniform(-2, 2), rng.uniform(-2, 2));
    const double fx = evaluate(f, x);
    CHECK(std::fabs(evaluate(fi, x) - fx) <= 1e-12);
    CHECK(std::fabs(evaluate(gf, x) - evaluate(g, Eigen::VectorXd::Constant(1, fx))) <= 1e-12);
    CHECK(evaluate(big, x) == fx);
    CHECK(std::fabs(evaluate(synced, x) - fx) <= 1e-12);
    Eigen::MatrixXd y = forward(par, x);
    CHECK(y(0, 0) == doctest::Approx(fx).epsilon(1e-14));
  }
}

TEST_CASE("depth_sync keeps negative intermediate values") {
  Network neg = affine_net(Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::VectorXd::Zero(1));
  Network s = depth_sync(neg, 2);
  CHECK(evaluate(s, Eigen::VectorXd::Constant(1, 3.0)) == -3.0);
  CHECK(evaluate(s, Eigen::VectorXd::Constant(1, -2.0)) == 2.0);
}

TEST_CASE("coefficient gradient matches finite differences") {
  Rng rng(13);
  Network f = random_net(Architecture(2, {2, 3, 3, 1}), rng);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(2, 5);
  Eigen::MatrixXd G = Eigen::MatrixXd::Random(1, 5);
  Eigen::VectorXd grad = coefficient_gradient(f, X, G);
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < grad.size(); ++k) {
    Eigen::VectorXd tp = f.coefficients(), tm = f.coefficients();
    tp[k] += h;
    tm[k] -= h;
    const double fd = ((G.array() * forward(Network(f.architecture(), tp), X).array()).sum() -
                       (G.array() * forward(Network(f.architecture(), tm), X).array()).sum()) /
                      (2 * h);
    CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("serialization round trip is loss free") {
  Rng rng(17);
  Network f = random_net(Architecture(2, {3, 4, 2, 2}), rng, 1e5);
  std::stringstream ss;
  write_network(ss, f);
  Network g = read_network(ss);
  CHECK(g.architecture() == f.architecture());
  CHECK(g.coefficients() == f.coefficients());
  std::stringstream broken("not a network\n");
  CHECK_THROWS(read_network(broken));
}
