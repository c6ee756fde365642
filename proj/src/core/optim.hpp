#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ginr {

// Bias-corrected Adam on a flat parameter vector.
struct AdamState {
  std::vector<double> m, v;
  int64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state);

struct LbfgsOptions {
  int64_t max_iterations = 10;  // k
  int64_t history = 10;         // m
  double initial_step = 0.1;    // alpha: first trial step while history is empty
  double armijo_c = 1e-4;
  int64_t max_backtracks = 20;
  double grad_tol = 1e-12;  // sup-norm stationarity cutoff
};

// Objective for lbfgs_minimize. value_keep may retain whatever state makes
// grad_last cheap (e.g. the forward graph of the last evaluated point);
// grad_last must return the gradient at the point last passed to value_keep.
class LbfgsObjective {
 public:
  virtual ~LbfgsObjective() = default;
  virtual double value(std::span<const double> x) = 0;
  virtual double value_keep(std::span<const double> x) { return value(x); }
  virtual void grad_last(std::span<double> grad_out) = 0;
};

// Adapter for plain function pairs (tests, toy problems).
class FunctionObjective : public LbfgsObjective {
 public:
  FunctionObjective(std::function<double(std::span<const double>)> f,
                    std::function<void(std::span<const double>, std::span<double>)> g)
      : f_(std::move(f)), g_(std::move(g)) {}
  double value(std::span<const double> x) override { return f_(x); }
  double value_keep(std::span<const double> x) override {
    last_.assign(x.begin(), x.end());
    return f_(x);
  }
  void grad_last(std::span<double> grad_out) override { g_(last_, grad_out); }

 private:
  std::function<double(std::span<const double>)> f_;
  std::function<void(std::span<const double>, std::span<double>)> g_;
  std::vector<double> last_;
};

struct LbfgsOutcome {
  std::vector<double> x;
  double loss = 0.0;
  int64_t iterations = 0;
  bool line_search_failed = false;  // no descent found within max_backtracks
};

// Two-loop-recursion L-BFGS with Armijo backtracking over the projection arc.
// `project` is applied to every trial point, so all evaluated iterates are
// feasible; curvature pairs with s.y <= 1e-10 are discarded. Returns the
// best (lowest-loss) projected iterate seen, never worse than project(x0).
LbfgsOutcome lbfgs_minimize(LbfgsObjective& objective, std::vector<double> x0,
                            const LbfgsOptions& options,
                            const std::function<void(std::span<double>)>& project);

}  // namespace ginr
