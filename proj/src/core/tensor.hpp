#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace ginr {

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& s);

class Tensor;

namespace detail {

using BackwardFn =
    std::function<std::vector<Tensor>(const Tensor& upstream, const std::vector<bool>& needed)>;

// One tape record. Nodes are created in program order; `id` is the position
// on the (thread-local) tape, so descending id is a valid reverse
// topological order and fixes the gradient accumulation order.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // leaf accumulator, filled by backward()
  bool requires_grad = false;
  bool leaf = true;
  bool second_order_ok = true;
  uint64_t id = 0;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward_fn;
};

}  // namespace detail

// Thread-local switch: while disabled, ops compute values without recording
// tape entries (used for inference passes and first-order backward).
class GradMode {
 public:
  static bool enabled();
  static void set(bool on);
};

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  bool prev;
};

// forces recording on for a scope (training code that must build a graph)
struct EnableGradGuard {
  EnableGradGuard();
  ~EnableGradGuard();
  bool prev;
};

// Dense double tensor participating in the reverse-mode tape. Copies are
// shallow (shared node); values are immutable once an op has produced them.
class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int64_t size() const;
  int64_t dim(int i) const;
  std::span<const double> values() const;
  double item() const;  // scalar tensors only
  bool requires_grad() const;

  // leaf gradient accumulated by backward(); empty until then
  const std::vector<double>& grad() const;
  void zero_grad();

  // constant leaf sharing nothing with the tape (copies the values)
  Tensor detach() const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> n);

 private:
  std::shared_ptr<detail::Node> node_;
};

// ---- ops ------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);  // scalar-vs-tensor broadcast only
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor neg(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);  // strict 2-D
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor softplus(const Tensor& a);

Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar

// rows of `v` ([1 x n]) added to every row of `a` ([m x n])
Tensor add_rowvec(const Tensor& a, const Tensor& v);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, int64_t c0, int64_t c1);
Tensor pad_cols(const Tensor& a, int64_t before, int64_t total);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, int64_t r0, int64_t r1);
Tensor pad_rows(const Tensor& a, int64_t before, int64_t total);

// [B*n x d] -> [B x d] mean over each n-row block, and its adjoint pair
Tensor block_mean_rows(const Tensor& a, int64_t blocks);
Tensor block_repeat_rows(const Tensor& a, int64_t repeat);

// per-column standardization of [n x c]: (x - mean) / sqrt(var + eps)
Tensor standardize_cols(const Tensor& a, double eps = 1e-5);

// per-row standardization of [n x c] (each row normalized over its c entries)
Tensor standardize_rows(const Tensor& a, double eps = 1e-5);

// mean over elements of -[t*log(sig(l)) + (1-t)*log(1-sig(l))], stable form
Tensor bce_with_logits(const Tensor& logits, const Tensor& targets);

// input [H x W x Cin], kernel [K x K x Cin x Cout], bias [Cout]; stride 1,
// zero "same" padding, K odd
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double c) { return scale(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }

// ---- tape traversal --------------------------------------------------------

// Reverse pass from a scalar loss; accumulates into .grad of every
// requires_grad leaf. Deterministic: two runs give bit-identical gradients.
void backward(const Tensor& loss);

// Gradients of a scalar output w.r.t. selected inputs, returned as tensors.
// With create_graph the returned tensors are themselves differentiable
// (only ops whose backward is built from tape ops support this).
std::vector<Tensor> grad(const Tensor& output, std::span<const Tensor> inputs,
                         bool create_graph);

// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
// Coordinates where the one-sided differences disagree (kinks, e.g. an active
// clamp bound) are excluded.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h);

}  // namespace ginr
