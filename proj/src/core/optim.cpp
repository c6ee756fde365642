#include "optim.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "error.hpp"

namespace ginr {

void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state) {
  if (param.size() != grad.size()) fail(Errc::shape_mismatch, "adam_step: param/grad size mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) fail(Errc::numeric, "adam_step: non-finite gradient");
  if (state.m.empty()) state.m.assign(param.size(), 0.0);
  if (state.v.empty()) state.v.assign(param.size(), 0.0);
  if (state.m.size() != param.size() || state.v.size() != param.size())
    fail(Errc::shape_mismatch, "adam_step: state size mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < param.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    param[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sup_norm(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

struct Pair {
  std::vector<double> s, y;
  double rho;
};

// d = -H*g via the standard two-loop recursion; H0 = gamma*I from the most
// recent curvature pair.
void two_loop_direction(const std::deque<Pair>& hist, std::span<const double> g,
                        std::vector<double>& d) {
  d.assign(g.begin(), g.end());
  std::vector<double> alpha(hist.size());
  for (size_t i = hist.size(); i-- > 0;) {
    alpha[i] = hist[i].rho * dot(hist[i].s, d);
    for (size_t j = 0; j < d.size(); ++j) d[j] -= alpha[i] * hist[i].y[j];
  }
  if (!hist.empty()) {
    const Pair& last = hist.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& x : d) x *= gamma;
  }
  for (size_t i = 0; i < hist.size(); ++i) {
    const double beta = hist[i].rho * dot(hist[i].y, d);
    for (size_t j = 0; j < d.size(); ++j) d[j] += (alpha[i] - beta) * hist[i].s[j];
  }
  for (double& x : d) x = -x;
}

}  // namespace

LbfgsOutcome lbfgs_minimize(LbfgsObjective& objective, std::vector<double> x0,
                            const LbfgsOptions& options,
                            const std::function<void(std::span<double>)>& project) {
  if (options.max_iterations < 1 || options.history < 1 || options.initial_step <= 0.0)
    fail(Errc::invalid_argument, "lbfgs_minimize: bad options");
  const size_t n = x0.size();
  if (project) project(x0);

  std::vector<double> x = x0;
  double fx = objective.value_keep(x);
  if (!std::isfinite(fx)) fail(Errc::numeric, "lbfgs_minimize: objective not finite at x0");
  std::vector<double> g(n);
  objective.grad_last(g);

  LbfgsOutcome out;
  out.x = x;
  out.loss = fx;

  std::deque<Pair> hist;
  std::vector<double> d, trial(n), g_new(n);

  for (int64_t it = 0; it < options.max_iterations; ++it) {
    if (sup_norm(g) <= options.grad_tol) break;  // stationary point
    two_loop_direction(hist, g, d);
    if (dot(d, g) >= 0.0) {  // not a descent direction, fall back to steepest
      for (size_t j = 0; j < n; ++j) d[j] = -g[j];
      hist.clear();
    }
    // unit trial once the direction carries curvature scaling, alpha before
    double t = hist.empty() ? options.initial_step : 1.0;
    bool accepted = false;
    double ft = 0.0;
    for (int64_t bt = 0; bt <= options.max_backtracks; ++bt) {
      for (size_t j = 0; j < n; ++j) trial[j] = x[j] + t * d[j];
      if (project) project(trial);
      try {
        ft = objective.value_keep(trial);
      } catch (const Error& e) {
        if (e.code() != Errc::numeric) throw;
        ft = std::numeric_limits<double>::infinity();  // reject this trial
      }
      // projected Armijo: compare against the slope toward the projected point
      double slope = 0.0;
      for (size_t j = 0; j < n; ++j) slope += g[j] * (trial[j] - x[j]);
      if (std::isfinite(ft) && ft <= fx + options.armijo_c * slope && slope < 0.0) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      out.line_search_failed = true;
      break;
    }
    objective.grad_last(g_new);
    Pair p;
    p.s.resize(n);
    p.y.resize(n);
    for (size_t j = 0; j < n; ++j) {
      p.s[j] = trial[j] - x[j];
      p.y[j] = g_new[j] - g[j];
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-10) {
      p.rho = 1.0 / sy;
      hist.push_back(std::move(p));
      while (static_cast<int64_t>(hist.size()) > options.history) hist.pop_front();
    }
    x = trial;
    fx = ft;
    g = g_new;
    out.iterations = it + 1;
    if (fx < out.loss) {
      out.loss = fx;
      out.x = x;
    }
  }
  return out;
}

}  // namespace ginr
