#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "core/error.hpp"
#include "core/optim.hpp"

using namespace ginr;

TEST_CASE("adam: zero gradient leaves parameters untouched") {
  std::vector<double> p{1.0, -2.0, 3.0};
  const std::vector<double> g(3, 0.0);
  AdamState st;
  st.lr = 0.1;
  adam_step(p, g, st);
  CHECK(st.t == 1);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -2.0);
  CHECK(p[2] == 3.0);
}

TEST_CASE("adam: first-step closed form") {
  // m_hat = g, v_hat = g^2, so the step is -lr * g/(|g| + eps)
  std::vector<double> p{0.0};
  const std::vector<double> g{1.0};
  AdamState st;
  st.lr = 0.1;
  adam_step(p, g, st);
  CHECK(p[0] == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam: rejects non-finite gradients") {
  std::vector<double> p{0.0};
  const std::vector<double> g{std::numeric_limits<double>::infinity()};
  AdamState st;
  CHECK_THROWS_AS(adam_step(p, g, st), Error);
}

TEST_CASE("adam: 1-D quadratic converges") {
  std::vector<double> x{0.0};
  AdamState st;
  st.lr = 0.1;
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> g{2.0 * (x[0] - 2.0)};
    adam_step(x, g, st);
  }
  CHECK(std::abs(x[0] - 2.0) < 1e-2);
}

namespace {

FunctionObjective quadratic_objective(const std::vector<double>& a) {
  return FunctionObjective(
      [a](std::span<const double> x) {
        double s = 0.0;
        for (size_t i = 0; i < x.size(); ++i) s += (x[i] - a[i]) * (x[i] - a[i]);
        return 0.5 * s;
      },
      [a](std::span<const double> x, std::span<double> g) {
        for (size_t i = 0; i < x.size(); ++i) g[i] = x[i] - a[i];
      });
}

}  // namespace

TEST_CASE("lbfgs: convex quadratic to machine precision within k=10") {
  const std::vector<double> a{1.0, -3.0, 0.25, 7.0};
  auto obj = quadratic_objective(a);
  const LbfgsOutcome out = lbfgs_minimize(obj, {0, 0, 0, 0}, LbfgsOptions{}, nullptr);
  double dist = 0.0;
  for (size_t i = 0; i < a.size(); ++i) dist += (out.x[i] - a[i]) * (out.x[i] - a[i]);
  CHECK(std::sqrt(dist) < 1e-8);
}

TEST_CASE("lbfgs: stationary start returns x0") {
  auto obj = quadratic_objective({2.0, 2.0});
  const LbfgsOutcome out = lbfgs_minimize(obj, {2.0, 2.0}, LbfgsOptions{}, nullptr);
  CHECK(out.x[0] == 2.0);
  CHECK(out.x[1] == 2.0);
  CHECK(out.iterations == 0);
}

TEST_CASE("lbfgs: rosenbrock via restarted rounds") {
  FunctionObjective obj(
      [](std::span<const double> x) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        return a * a + 100.0 * b * b;
      },
      [](std::span<const double> x, std::span<double> g) {
        const double b = x[1] - x[0] * x[0];
        g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
      });
  std::vector<double> x{-1.2, 1.0};
  double loss = std::numeric_limits<double>::infinity();
  int64_t total_iterations = 0;
  for (int round = 0; round < 50 && total_iterations <= 500; ++round) {
    const LbfgsOutcome out = lbfgs_minimize(obj, x, LbfgsOptions{}, nullptr);
    total_iterations += out.iterations;
    x = out.x;
    loss = out.loss;
    if (loss < 1e-6) break;
  }
  CHECK(total_iterations <= 500);
  CHECK(loss < 1e-6);
}

TEST_CASE("lbfgs: projection keeps every iterate inside the box") {
  auto obj = quadratic_objective({5.0, -5.0});  // optimum outside the box
  auto project = [](std::span<double> x) {
    for (double& v : x) v = std::min(std::max(v, -1.0), 1.0);
  };
  const LbfgsOutcome out = lbfgs_minimize(obj, {0.0, 0.0}, LbfgsOptions{}, project);
  CHECK(out.x[0] <= 1.0);
  CHECK(out.x[0] >= -1.0);
  CHECK(out.x[1] <= 1.0);
  CHECK(out.x[1] >= -1.0);
  // the constrained optimum is the box corner
  CHECK(out.x[0] == doctest::Approx(1.0));
  CHECK(out.x[1] == doctest::Approx(-1.0));
}

TEST_CASE("lbfgs: never returns a higher loss than the start") {
  auto obj = quadratic_objective({3.0});
  const double f0 = 0.5 * 9.0;
  const LbfgsOutcome out = lbfgs_minimize(obj, {0.0}, LbfgsOptions{}, nullptr);
  CHECK(out.loss <= f0);
}

TEST_CASE("lbfgs: deterministic (bit-identical repeat runs)") {
  auto obj1 = quadratic_objective({1.0, 2.0, 3.0});
  auto obj2 = quadratic_objective({1.0, 2.0, 3.0});
  const LbfgsOutcome a = lbfgs_minimize(obj1, {0, 0, 0}, LbfgsOptions{}, nullptr);
  const LbfgsOutcome b = lbfgs_minimize(obj2, {0, 0, 0}, LbfgsOptions{}, nullptr);
  CHECK(a.x == b.x);
  CHECK(a.loss == b.loss);
}
