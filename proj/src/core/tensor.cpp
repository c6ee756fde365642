#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "error.hpp"
#include "gemm.hpp"

namespace ginr {

int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

namespace {

thread_local bool g_grad_enabled = true;
thread_local uint64_t g_next_id = 1;

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v)
    if (!std::isfinite(x)) fail(Errc::numeric, std::string("non-finite value produced by op '") + op + "'");
}

std::shared_ptr<detail::Node> new_node(Shape shape, std::vector<double> value) {
  auto n = std::make_shared<detail::Node>();
  if (static_cast<int64_t>(value.size()) != numel(shape))
    fail(Errc::shape_mismatch, "tensor data length does not match shape");
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->id = g_next_id++;
  return n;
}

// Records an op result on the tape when grad mode is on and some parent
// needs gradients; otherwise produces a plain constant node.
Tensor make_op(const char* op, Shape shape, std::vector<double> value,
               std::vector<Tensor> parents, detail::BackwardFn fn, bool second_order_ok = true) {
  check_finite(value, op);
  auto node = new_node(std::move(shape), std::move(value));
  node->op = op;
  bool track = false;
  if (g_grad_enabled) {
    for (const Tensor& p : parents)
      if (p.defined() && p.requires_grad()) track = true;
  }
  if (track) {
    node->leaf = false;
    node->requires_grad = true;
    node->second_order_ok = second_order_ok;
    node->parents.reserve(parents.size());
    for (const Tensor& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::move(fn);
  }
  return Tensor::wrap(node);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    fail(Errc::shape_mismatch, std::string(op) + ": shapes do not match");
}

bool is_scalar(const Tensor& t) { return t.size() == 1; }

Tensor ones_like_const(const Tensor& a) { return Tensor::full(a.shape(), 1.0); }

}  // namespace

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set(bool on) { g_grad_enabled = on; }
NoGradGuard::NoGradGuard() : prev(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev; }
EnableGradGuard::EnableGradGuard() : prev(g_grad_enabled) { g_grad_enabled = true; }
EnableGradGuard::~EnableGradGuard() { g_grad_enabled = prev; }

Tensor Tensor::wrap(std::shared_ptr<detail::Node> n) {
  Tensor t;
  t.node_ = std::move(n);
  return t;
}

Tensor Tensor::leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  check_finite(data, "leaf");
  auto n = new_node(std::move(shape), std::move(data));
  n->requires_grad = requires_grad;
  return wrap(n);
}

Tensor Tensor::scalar(double v, bool requires_grad) { return leaf({1}, {v}, requires_grad); }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> d(static_cast<size_t>(numel(shape)), 0.0);
  return leaf(std::move(shape), std::move(d), requires_grad);
}

Tensor Tensor::full(Shape shape, double v) {
  std::vector<double> d(static_cast<size_t>(numel(shape)), v);
  return leaf(std::move(shape), std::move(d));
}

const Shape& Tensor::shape() const { return node_->shape; }
int64_t Tensor::size() const { return static_cast<int64_t>(node_->value.size()); }
int64_t Tensor::dim(int i) const { return node_->shape.at(static_cast<size_t>(i)); }
std::span<const double> Tensor::values() const { return node_->value; }

double Tensor::item() const {
  if (size() != 1) fail(Errc::invalid_argument, "item() on a non-scalar tensor");
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

const std::vector<double>& Tensor::grad() const { return node_->grad; }

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detach() const {
  return leaf(node_->shape, node_->value, false);
}

// ---- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() && !is_scalar(a) && !is_scalar(b))
    fail(Errc::shape_mismatch, "add: shapes do not match (only scalar broadcast)");
  const Tensor& big = is_scalar(a) && !is_scalar(b) ? b : a;
  std::vector<double> out(static_cast<size_t>(big.size()));
  auto av = a.values(), bv = b.values();
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = av[is_scalar(a) ? 0 : i] + bv[is_scalar(b) ? 0 : i];
  return make_op("add", big.shape(), std::move(out), {a, b},
                 [a, b](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(2);
                   if (need[0]) r[0] = is_scalar(a) && !is_scalar(g) ? sum(g) : g;
                   if (need[1]) r[1] = is_scalar(b) && !is_scalar(g) ? sum(g) : g;
                   return r;
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() && !is_scalar(a) && !is_scalar(b))
    fail(Errc::shape_mismatch, "sub: shapes do not match (only scalar broadcast)");
  const Tensor& big = is_scalar(a) && !is_scalar(b) ? b : a;
  std::vector<double> out(static_cast<size_t>(big.size()));
  auto av = a.values(), bv = b.values();
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = av[is_scalar(a) ? 0 : i] - bv[is_scalar(b) ? 0 : i];
  return make_op("sub", big.shape(), std::move(out), {a, b},
                 [a, b](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(2);
                   if (need[0]) r[0] = is_scalar(a) && !is_scalar(g) ? sum(g) : g;
                   if (need[1]) {
                     Tensor gb = scale(g, -1.0);
                     r[1] = is_scalar(b) && !is_scalar(g) ? sum(gb) : gb;
                   }
                   return r;
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() && !is_scalar(a) && !is_scalar(b))
    fail(Errc::shape_mismatch, "mul: shapes do not match (only scalar broadcast)");
  const Tensor& big = is_scalar(a) && !is_scalar(b) ? b : a;
  std::vector<double> out(static_cast<size_t>(big.size()));
  auto av = a.values(), bv = b.values();
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = av[is_scalar(a) ? 0 : i] * bv[is_scalar(b) ? 0 : i];
  return make_op("mul", big.shape(), std::move(out), {a, b},
                 [a, b](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(2);
                   if (need[0]) {
                     Tensor ga = mul(g, b);
                     r[0] = is_scalar(a) && !is_scalar(ga) ? sum(ga) : ga;
                   }
                   if (need[1]) {
                     Tensor gb = mul(g, a);
                     r[1] = is_scalar(b) && !is_scalar(gb) ? sum(gb) : gb;
                   }
                   return r;
                 });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(static_cast<size_t>(a.size()));
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  return make_op("scale", a.shape(), std::move(out), {a},
                 [c](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = scale(g, c);
                   return r;
                 });
}

Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(static_cast<size_t>(a.size()));
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
  return make_op("add_scalar", a.shape(), std::move(out), {a},
                 [](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = g;
                   return r;
                 });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor relu(const Tensor& a) {
  std::vector<double> out(static_cast<size_t>(a.size()));
  std::vector<double> mask(out.size());
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) {
    const bool pos = av[i] > 0.0;
    out[i] = pos ? av[i] : 0.0;
    mask[i] = pos ? 1.0 : 0.0;
  }
  Tensor mask_t = Tensor::leaf(a.shape(), std::move(mask));
  // mask is constant, so grad-of-grad through relu stays exact (zero a.e.)
  return make_op("relu", a.shape(), std::move(out), {a},
                 [mask_t](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = mul(g, mask_t);
                   return r;
                 });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi)) fail(Errc::invalid_argument, "clamp: lo > hi");
  std::vector<double> out(static_cast<size_t>(a.size()));
  std::vector<double> mask(out.size());
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = std::min(std::max(av[i], lo), hi);
    // gradient passes only strictly inside the bounds
    mask[i] = (av[i] > lo && av[i] < hi) ? 1.0 : 0.0;
  }
  Tensor mask_t = Tensor::leaf(a.shape(), std::move(mask));
  return make_op("clamp", a.shape(), std::move(out), {a},
                 [mask_t](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = mul(g, mask_t);
                   return r;
                 });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(static_cast<size_t>(a.size()));
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) {
    const double x = av[i];
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  std::vector<double> sv = out;
  return make_op(
      "sigmoid", a.shape(), std::move(out), {a},
      [sv = std::move(sv), shape = a.shape()](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> r(1);
        if (need[0]) {
          std::vector<double> d(sv.size());
          auto gv = g.values();
          for (size_t i = 0; i < d.size(); ++i) d[i] = gv[i] * sv[i] * (1.0 - sv[i]);
          r[0] = Tensor::leaf(shape, std::move(d));
        }
        return r;
      },
      /*second_order_ok=*/false);
}

Tensor sin(const Tensor& a) {
  std::vector<double> out(static_cast<size_t>(a.size()));
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::sin(av[i]);
  return make_op(
      "sin", a.shape(), std::move(out), {a},
      [a](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> r(1);
        if (need[0]) {
          std::vector<double> d(static_cast<size_t>(a.size()));
          auto gv = g.values(), av2 = a.values();
          for (size_t i = 0; i < d.size(); ++i) d[i] = gv[i] * std::cos(av2[i]);
          r[0] = Tensor::leaf(a.shape(), std::move(d));
        }
        return r;
      },
      false);
}

Tensor cos(const Tensor& a) {
  std::vector<double> out(static_cast<size_t>(a.size()));
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::cos(av[i]);
  return make_op(
      "cos", a.shape(), std::move(out), {a},
      [a](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> r(1);
        if (need[0]) {
          std::vector<double> d(static_cast<size_t>(a.size()));
          auto gv = g.values(), av2 = a.values();
          for (size_t i = 0; i < d.size(); ++i) d[i] = -gv[i] * std::sin(av2[i]);
          r[0] = Tensor::leaf(a.shape(), std::move(d));
        }
        return r;
      },
      false);
}

Tensor softplus(const Tensor& a) {
  std::vector<double> out(static_cast<size_t>(a.size()));
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) {
    const double x = av[i];
    out[i] = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  return make_op(
      "softplus", a.shape(), std::move(out), {a},
      [a](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> r(1);
        if (need[0]) {
          std::vector<double> d(static_cast<size_t>(a.size()));
          auto gv = g.values(), av2 = a.values();
          for (size_t i = 0; i < d.size(); ++i) {
            const double x = av2[i];
            const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
            d[i] = gv[i] * s;
          }
          r[0] = Tensor::leaf(a.shape(), std::move(d));
        }
        return r;
      },
      false);
}

// ---- linear algebra ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2)
    fail(Errc::shape_mismatch, "matmul: operands must be 2-D");
  const int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2) fail(Errc::shape_mismatch, "matmul: inner dimensions disagree");
  std::vector<double> out(static_cast<size_t>(m * n));
  dgemm(false, false, m, n, k, 1.0, a.values().data(), b.values().data(), 0.0, out.data());
  return make_op("matmul", {m, n}, std::move(out), {a, b},
                 [a, b](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(2);
                   if (need[0]) r[0] = matmul(g, transpose(b));
                   if (need[1]) r[1] = matmul(transpose(a), g);
                   return r;
                 });
}

Tensor transpose(const Tensor& a) {
  if (a.shape().size() != 2) fail(Errc::shape_mismatch, "transpose: operand must be 2-D");
  const int64_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(static_cast<size_t>(m * n));
  auto av = a.values();
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) out[static_cast<size_t>(j * m + i)] = av[static_cast<size_t>(i * n + j)];
  return make_op("transpose", {n, m}, std::move(out), {a},
                 [](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = transpose(g);
                   return r;
                 });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) fail(Errc::shape_mismatch, "reshape: element count changes");
  std::vector<double> out(a.values().begin(), a.values().end());
  Shape orig = a.shape();
  return make_op("reshape", std::move(shape), std::move(out), {a},
                 [orig](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = reshape(g, orig);
                   return r;
                 });
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
  if (a.shape().size() != 2 || v.shape().size() != 2 || v.dim(0) != 1 || v.dim(1) != a.dim(1))
    fail(Errc::shape_mismatch, "add_rowvec: expects [m x n] and [1 x n]");
  const int64_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(static_cast<size_t>(m * n));
  auto av = a.values(), vv = v.values();
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j)
      out[static_cast<size_t>(i * n + j)] = av[static_cast<size_t>(i * n + j)] + vv[static_cast<size_t>(j)];
  return make_op("add_rowvec", {m, n}, std::move(out), {a, v},
                 [m](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(2);
                   if (need[0]) r[0] = g;
                   if (need[1]) r[1] = matmul(Tensor::full({1, m}, 1.0), g);
                   return r;
                 });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(0) != b.dim(0))
    fail(Errc::shape_mismatch, "concat_cols: row counts disagree");
  const int64_t m = a.dim(0), na = a.dim(1), nb = b.dim(1);
  std::vector<double> out(static_cast<size_t>(m * (na + nb)));
  auto av = a.values(), bv = b.values();
  for (int64_t i = 0; i < m; ++i) {
    std::memcpy(&out[static_cast<size_t>(i * (na + nb))], &av[static_cast<size_t>(i * na)],
                sizeof(double) * static_cast<size_t>(na));
    std::memcpy(&out[static_cast<size_t>(i * (na + nb) + na)], &bv[static_cast<size_t>(i * nb)],
                sizeof(double) * static_cast<size_t>(nb));
  }
  return make_op("concat_cols", {m, na + nb}, std::move(out), {a, b},
                 [na, nb](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(2);
                   if (need[0]) r[0] = slice_cols(g, 0, na);
                   if (need[1]) r[1] = slice_cols(g, na, na + nb);
                   return r;
                 });
}

Tensor slice_cols(const Tensor& a, int64_t c0, int64_t c1) {
  if (a.shape().size() != 2 || c0 < 0 || c1 > a.dim(1) || c0 >= c1)
    fail(Errc::invalid_argument, "slice_cols: bad column range");
  const int64_t m = a.dim(0), n = a.dim(1), w = c1 - c0;
  std::vector<double> out(static_cast<size_t>(m * w));
  auto av = a.values();
  for (int64_t i = 0; i < m; ++i)
    std::memcpy(&out[static_cast<size_t>(i * w)], &av[static_cast<size_t>(i * n + c0)],
                sizeof(double) * static_cast<size_t>(w));
  return make_op("slice_cols", {m, w}, std::move(out), {a},
                 [c0, n](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = pad_cols(g, c0, n);
                   return r;
                 });
}

Tensor pad_cols(const Tensor& a, int64_t before, int64_t total) {
  if (a.shape().size() != 2 || before < 0 || before + a.dim(1) > total)
    fail(Errc::invalid_argument, "pad_cols: bad target width");
  const int64_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(static_cast<size_t>(m * total), 0.0);
  auto av = a.values();
  for (int64_t i = 0; i < m; ++i)
    std::memcpy(&out[static_cast<size_t>(i * total + before)], &av[static_cast<size_t>(i * n)],
                sizeof(double) * static_cast<size_t>(n));
  return make_op("pad_cols", {m, total}, std::move(out), {a},
                 [before, n](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = slice_cols(g, before, before + n);
                   return r;
                 });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail(Errc::invalid_argument, "concat_rows: no parts");
  const int64_t n = parts[0].dim(1);
  int64_t m = 0;
  for (const Tensor& p : parts) {
    if (p.shape().size() != 2 || p.dim(1) != n)
      fail(Errc::shape_mismatch, "concat_rows: column counts disagree");
    m += p.dim(0);
  }
  std::vector<double> out;
  out.reserve(static_cast<size_t>(m * n));
  for (const Tensor& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  std::vector<int64_t> row_starts;
  row_starts.reserve(parts.size() + 1);
  int64_t acc = 0;
  for (const Tensor& p : parts) {
    row_starts.push_back(acc);
    acc += p.dim(0);
  }
  row_starts.push_back(acc);
  return make_op("concat_rows", {m, n}, std::move(out), parts,
                 [row_starts](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(row_starts.size() - 1);
                   for (size_t i = 0; i + 1 < row_starts.size(); ++i)
                     if (need[i]) r[i] = slice_rows(g, row_starts[i], row_starts[i + 1]);
                   return r;
                 });
}

Tensor slice_rows(const Tensor& a, int64_t r0, int64_t r1) {
  if (a.shape().size() != 2 || r0 < 0 || r1 > a.dim(0) || r0 >= r1)
    fail(Errc::invalid_argument, "slice_rows: bad row range");
  const int64_t n = a.dim(1), h = r1 - r0;
  auto av = a.values();
  std::vector<double> out(av.begin() + r0 * n, av.begin() + r1 * n);
  const int64_t total = a.dim(0);
  return make_op("slice_rows", {h, n}, std::move(out), {a},
                 [r0, total](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = pad_rows(g, r0, total);
                   return r;
                 });
}

Tensor pad_rows(const Tensor& a, int64_t before, int64_t total) {
  if (a.shape().size() != 2 || before < 0 || before + a.dim(0) > total)
    fail(Errc::invalid_argument, "pad_rows: bad target height");
  const int64_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(static_cast<size_t>(total * n), 0.0);
  auto av = a.values();
  std::memcpy(&out[static_cast<size_t>(before * n)], av.data(), sizeof(double) * av.size());
  return make_op("pad_rows", {total, n}, std::move(out), {a},
                 [before, m](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = slice_rows(g, before, before + m);
                   return r;
                 });
}

Tensor block_mean_rows(const Tensor& a, int64_t blocks) {
  if (a.shape().size() != 2 || blocks < 1 || a.dim(0) % blocks != 0)
    fail(Errc::invalid_argument, "block_mean_rows: rows not divisible into blocks");
  const int64_t rows = a.dim(0), n = a.dim(1), per = rows / blocks;
  std::vector<double> out(static_cast<size_t>(blocks * n), 0.0);
  auto av = a.values();
  for (int64_t b = 0; b < blocks; ++b)
    for (int64_t i = 0; i < per; ++i)
      for (int64_t j = 0; j < n; ++j)
        out[static_cast<size_t>(b * n + j)] += av[static_cast<size_t>((b * per + i) * n + j)];
  const double inv = 1.0 / static_cast<double>(per);
  for (double& x : out) x *= inv;
  return make_op("block_mean_rows", {blocks, n}, std::move(out), {a},
                 [per](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = scale(block_repeat_rows(g, per), 1.0 / static_cast<double>(per));
                   return r;
                 });
}

Tensor block_repeat_rows(const Tensor& a, int64_t repeat) {
  if (a.shape().size() != 2 || repeat < 1)
    fail(Errc::invalid_argument, "block_repeat_rows: bad repeat count");
  const int64_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(static_cast<size_t>(m * repeat * n));
  auto av = a.values();
  for (int64_t b = 0; b < m; ++b)
    for (int64_t i = 0; i < repeat; ++i)
      std::memcpy(&out[static_cast<size_t>((b * repeat + i) * n)], &av[static_cast<size_t>(b * n)],
                  sizeof(double) * static_cast<size_t>(n));
  return make_op("block_repeat_rows", {m * repeat, n}, std::move(out), {a},
                 [repeat](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = scale(block_mean_rows(g, g.dim(0) / repeat), static_cast<double>(repeat));
                   return r;
                 });
}

// ---- reductions -------------------------------------------------------------

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double x : a.values()) acc += x;  // fixed left-to-right order
  return make_op("sum", {1}, {acc}, {a},
                 [a](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = mul(ones_like_const(a), g);
                   return r;
                 });
}

Tensor mean(const Tensor& a) {
  double acc = 0.0;
  for (double x : a.values()) acc += x;
  const double inv = 1.0 / static_cast<double>(a.size());
  return make_op("mean", {1}, {acc * inv}, {a},
                 [a, inv](const Tensor& g, const std::vector<bool>& need) {
                   std::vector<Tensor> r(1);
                   if (need[0]) r[0] = scale(mul(ones_like_const(a), g), inv);
                   return r;
                 });
}

Tensor standardize_cols(const Tensor& a, double eps) {
  if (a.shape().size() != 2) fail(Errc::shape_mismatch, "standardize_cols: operand must be 2-D");
  if (!(eps > 0.0)) fail(Errc::invalid_argument, "standardize_cols: eps must be positive");
  const int64_t n = a.dim(0), c = a.dim(1);
  auto av = a.values();
  std::vector<double> inv_std(static_cast<size_t>(c));
  std::vector<double> out(static_cast<size_t>(n * c));
  for (int64_t j = 0; j < c; ++j) {
    double mu = 0.0;
    for (int64_t i = 0; i < n; ++i) mu += av[static_cast<size_t>(i * c + j)];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      const double d = av[static_cast<size_t>(i * c + j)] - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<size_t>(j)] = inv;
    for (int64_t i = 0; i < n; ++i)
      out[static_cast<size_t>(i * c + j)] = (av[static_cast<size_t>(i * c + j)] - mu) * inv;
  }
  std::vector<double> normalized = out;  // saved for the backward pass
  return make_op(
      "standardize_cols", {n, c}, std::move(out), {a},
      [normalized = std::move(normalized), inv_std = std::move(inv_std), n,
       c](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> r(1);
        if (need[0]) {
          // dx = inv*(dy - mean(dy) - xhat*mean(dy*xhat)) per column
          auto gv = g.values();
          std::vector<double> dx(static_cast<size_t>(n * c));
          for (int64_t j = 0; j < c; ++j) {
            double mean_g = 0.0, mean_gx = 0.0;
            for (int64_t i = 0; i < n; ++i) {
              const size_t k = static_cast<size_t>(i * c + j);
              mean_g += gv[k];
              mean_gx += gv[k] * normalized[k];
            }
            mean_g /= static_cast<double>(n);
            mean_gx /= static_cast<double>(n);
            const double inv = inv_std[static_cast<size_t>(j)];
            for (int64_t i = 0; i < n; ++i) {
              const size_t k = static_cast<size_t>(i * c + j);
              dx[k] = inv * (gv[k] - mean_g - normalized[k] * mean_gx);
            }
          }
          r[0] = Tensor::leaf({n, c}, std::move(dx));
        }
        return r;
      },
      false);
}

Tensor standardize_rows(const Tensor& a, double eps) {
  if (a.shape().size() != 2) fail(Errc::shape_mismatch, "standardize_rows: operand must be 2-D");
  if (!(eps > 0.0)) fail(Errc::invalid_argument, "standardize_rows: eps must be positive");
  const int64_t n = a.dim(0), c = a.dim(1);
  auto av = a.values();
  std::vector<double> inv_std(static_cast<size_t>(n));
  std::vector<double> out(static_cast<size_t>(n * c));
  for (int64_t i = 0; i < n; ++i) {
    const double* row = &av[static_cast<size_t>(i * c)];
    double mu = 0.0;
    for (int64_t j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (int64_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(c);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<size_t>(i)] = inv;
    for (int64_t j = 0; j < c; ++j) out[static_cast<size_t>(i * c + j)] = (row[j] - mu) * inv;
  }
  std::vector<double> normalized = out;
  return make_op(
      "standardize_rows", {n, c}, std::move(out), {a},
      [normalized = std::move(normalized), inv_std = std::move(inv_std), n,
       c](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> r(1);
        if (need[0]) {
          auto gv = g.values();
          std::vector<double> dx(static_cast<size_t>(n * c));
          for (int64_t i = 0; i < n; ++i) {
            double mean_g = 0.0, mean_gx = 0.0;
            for (int64_t j = 0; j < c; ++j) {
              const size_t k = static_cast<size_t>(i * c + j);
              mean_g += gv[k];
              mean_gx += gv[k] * normalized[k];
            }
            mean_g /= static_cast<double>(c);
            mean_gx /= static_cast<double>(c);
            const double inv = inv_std[static_cast<size_t>(i)];
            for (int64_t j = 0; j < c; ++j) {
              const size_t k = static_cast<size_t>(i * c + j);
              dx[k] = inv * (gv[k] - mean_g - normalized[k] * mean_gx);
            }
          }
          r[0] = Tensor::leaf({n, c}, std::move(dx));
        }
        return r;
      },
      false);
}

Tensor bce_with_logits(const Tensor& logits, const Tensor& targets) {
  require_same_shape(logits, targets, "bce_with_logits");
  auto lv = logits.values(), tv = targets.values();
  for (double t : tv)
    if (t != 0.0 && t != 1.0) fail(Errc::invalid_argument, "bce_with_logits: targets must be 0 or 1");
  double acc = 0.0;
  for (size_t i = 0; i < lv.size(); ++i) {
    const double x = lv[i];
    const double sp = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    acc += sp - tv[i] * x;  // = -[t log s + (1-t) log(1-s)]
  }
  const double inv = 1.0 / static_cast<double>(logits.size());
  Tensor tkeep = targets;
  return make_op(
      "bce_with_logits", {1}, {acc * inv}, {logits, targets},
      [logits, tkeep, inv](const Tensor& g, const std::vector<bool>& need) {
        std::vector<Tensor> r(2);
        if (need[0]) {
          auto lv2 = logits.values();
          auto tv2 = tkeep.values();
          const double gs = g.item();
          std::vector<double> d(lv2.size());
          for (size_t i = 0; i < d.size(); ++i) {
            const double x = lv2[i];
            const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
            d[i] = gs * inv * (s - tv2[i]);
          }
          r[0] = Tensor::leaf(logits.shape(), std::move(d));
        }
        return r;
      },
      false);
}

// ---- convolution ------------------------------------------------------------

namespace {

// [H*W rows, K*K*Cin cols], zero padded, matching the [K,K,Cin,Cout] kernel
// layout flattened to [K*K*Cin, Cout].
void im2col(const double* x, int64_t h, int64_t w, int64_t cin, int64_t k, double* out) {
  const int64_t pad = k / 2, cols = k * k * cin;
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t xx = 0; xx < w; ++xx) {
      double* row = out + (y * w + xx) * cols;
      int64_t c = 0;
      for (int64_t ky = 0; ky < k; ++ky) {
        const int64_t sy = y + ky - pad;
        for (int64_t kx = 0; kx < k; ++kx) {
          const int64_t sx = xx + kx - pad;
          if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
            for (int64_t ci = 0; ci < cin; ++ci) row[c++] = 0.0;
          } else {
            const double* src = x + (sy * w + sx) * cin;
            for (int64_t ci = 0; ci < cin; ++ci) row[c++] = src[ci];
          }
        }
      }
    }
  }
}

// adjoint of im2col: scatter-add columns back onto the image
void col2im(const double* cols_data, int64_t h, int64_t w, int64_t cin, int64_t k, double* out) {
  const int64_t pad = k / 2, cols = k * k * cin;
  std::fill(out, out + h * w * cin, 0.0);
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t xx = 0; xx < w; ++xx) {
      const double* row = cols_data + (y * w + xx) * cols;
      int64_t c = 0;
      for (int64_t ky = 0; ky < k; ++ky) {
        const int64_t sy = y + ky - pad;
        for (int64_t kx = 0; kx < k; ++kx) {
          const int64_t sx = xx + kx - pad;
          if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
            c += cin;
          } else {
            double* dst = out + (sy * w + sx) * cin;
            for (int64_t ci = 0; ci < cin; ++ci) dst[ci] += row[c++];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  if (input.shape().size() != 3) fail(Errc::shape_mismatch, "conv2d: input must be [H x W x Cin]");
  if (kernel.shape().size() != 4) fail(Errc::shape_mismatch, "conv2d: kernel must be [K x K x Cin x Cout]");
  const int64_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const int64_t k = kernel.dim(0), cout = kernel.dim(3);
  if (kernel.dim(1) != k) fail(Errc::shape_mismatch, "conv2d: kernel must be square");
  if (k % 2 == 0) fail(Errc::invalid_argument, "conv2d: kernel size must be odd");
  if (kernel.dim(2) != cin) fail(Errc::shape_mismatch, "conv2d: channel mismatch between input and kernel");
  if (bias.size() != cout) fail(Errc::shape_mismatch, "conv2d: bias length must equal Cout");

  const int64_t rows = h * w, cols = k * k * cin;
  std::vector<double> patches(static_cast<size_t>(rows * cols));
  im2col(input.values().data(), h, w, cin, k, patches.data());
  std::vector<double> out(static_cast<size_t>(rows * cout));
  dgemm(false, false, rows, cout, cols, 1.0, patches.data(), kernel.values().data(), 0.0, out.data());
  auto bv = bias.values();
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cout; ++c) out[static_cast<size_t>(r * cout + c)] += bv[static_cast<size_t>(c)];

  return make_op(
      "conv2d", {h, w, cout}, std::move(out), {input, kernel, bias},
      [input, kernel, h, w, cin, k, cout](const Tensor& g, const std::vector<bool>& need) {
        const int64_t rows = h * w, cols = k * k * cin;
        std::vector<Tensor> r(3);
        auto gv = g.values();
        if (need[0]) {
          // dX = col2im(dY * W^T)
          std::vector<double> dcols(static_cast<size_t>(rows * cols));
          dgemm(false, true, rows, cols, cout, 1.0, gv.data(), kernel.values().data(), 0.0, dcols.data());
          std::vector<double> dx(static_cast<size_t>(rows * cin));
          col2im(dcols.data(), h, w, cin, k, dx.data());
          r[0] = Tensor::leaf({h, w, cin}, std::move(dx));
        }
        if (need[1]) {
          // dW = im2col(X)^T * dY  (patches recomputed, not stored)
          std::vector<double> patches2(static_cast<size_t>(rows * cols));
          im2col(input.values().data(), h, w, cin, k, patches2.data());
          std::vector<double> dw(static_cast<size_t>(cols * cout));
          dgemm(true, false, cols, cout, rows, 1.0, patches2.data(), gv.data(), 0.0, dw.data());
          r[1] = Tensor::leaf({k, k, cin, cout}, std::move(dw));
        }
        if (need[2]) {
          std::vector<double> db(static_cast<size_t>(cout), 0.0);
          for (int64_t rr = 0; rr < rows; ++rr)
            for (int64_t c = 0; c < cout; ++c) db[static_cast<size_t>(c)] += gv[static_cast<size_t>(rr * cout + c)];
          r[2] = Tensor::leaf({cout}, std::move(db));
        }
        return r;
      },
      false);
}

// ---- reverse pass ------------------------------------------------------------

namespace {

struct NodeHash {
  size_t operator()(const detail::Node* n) const { return std::hash<const void*>()(n); }
};

// Shared engine behind backward() and grad(). Collects the subgraph under
// `root`, marks which nodes can reach a target, then sweeps in descending
// tape order.
std::vector<Tensor> run_reverse(const Tensor& root, std::span<const Tensor> inputs,
                                bool create_graph, bool accumulate_leaves) {
  if (!root.defined() || root.size() != 1) fail(Errc::invalid_argument, "backward: loss must be a scalar");

  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<detail::Node*> stack{root.node().get()};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents)
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(),
            [](const detail::Node* a, const detail::Node* b) { return a->id < b->id; });

  // needed(n): n contributes to some target's gradient
  std::unordered_map<detail::Node*, bool, NodeHash> needed;
  if (accumulate_leaves) {
    for (detail::Node* n : order)
      if (n->leaf && n->requires_grad) needed[n] = true;
  }
  for (const Tensor& t : inputs)
    if (t.defined()) needed[t.node().get()] = true;
  for (detail::Node* n : order) {
    if (needed[n]) continue;
    for (auto& p : n->parents)
      if (needed.count(p.get()) && needed[p.get()]) {
        needed[n] = true;
        break;
      }
  }

  std::unordered_map<detail::Node*, Tensor, NodeHash> gradmap;
  gradmap[root.node().get()] = Tensor::scalar(1.0);

  const bool saved_mode = GradMode::enabled();
  GradMode::set(create_graph);
  try {
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      detail::Node* n = *it;
      auto git = gradmap.find(n);
      if (git == gradmap.end() || !needed[n]) continue;
      const Tensor& g = git->second;
      if (accumulate_leaves && n->leaf && n->requires_grad) {
        if (n->grad.empty()) n->grad.assign(n->value.size(), 0.0);
        auto gv = g.values();
        for (size_t i = 0; i < n->grad.size(); ++i) n->grad[i] += gv[i];
      }
      if (!n->backward_fn) continue;
      std::vector<bool> mask(n->parents.size(), false);
      bool any = false;
      for (size_t i = 0; i < n->parents.size(); ++i) {
        detail::Node* p = n->parents[i].get();
        auto nit = needed.find(p);
        mask[i] = p->requires_grad && nit != needed.end() && nit->second;
        any |= static_cast<bool>(mask[i]);
      }
      if (!any) continue;
      if (create_graph && !n->second_order_ok)
        fail(Errc::unsupported, std::string("second-order gradients unsupported through op '") + n->op + "'");
      std::vector<Tensor> pgrads = n->backward_fn(g, mask);
      for (size_t i = 0; i < n->parents.size(); ++i) {
        if (!mask[i] || !pgrads[i].defined()) continue;
        detail::Node* p = n->parents[i].get();
        auto pit = gradmap.find(p);
        if (pit == gradmap.end())
          gradmap.emplace(p, pgrads[i]);
        else
          pit->second = add(pit->second, pgrads[i]);
      }
      if (!create_graph) gradmap.erase(n);  // free as we go
    }
  } catch (...) {
    GradMode::set(saved_mode);
    throw;
  }
  GradMode::set(saved_mode);

  std::vector<Tensor> results;
  results.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    auto it = gradmap.find(t.node().get());
    if (it != gradmap.end())
      results.push_back(it->second);
    else
      results.push_back(Tensor::zeros(t.shape()));
  }
  return results;
}

}  // namespace

void backward(const Tensor& loss) { run_reverse(loss, {}, false, true); }

std::vector<Tensor> grad(const Tensor& output, std::span<const Tensor> inputs, bool create_graph) {
  for (const Tensor& t : inputs)
    if (!t.defined() || !t.requires_grad())
      fail(Errc::invalid_argument, "grad: every input must require gradients");
  return run_reverse(output, inputs, create_graph, false);
}

// ---- numeric check ------------------------------------------------------------

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  if (!(h > 0.0)) fail(Errc::invalid_argument, "grad_check: step must be positive");
  Tensor xg = Tensor::leaf(x.shape(), {x.values().begin(), x.values().end()}, true);
  Tensor y = f(xg);
  if (y.size() != 1) fail(Errc::invalid_argument, "grad_check: f must return a scalar");
  if (!std::isfinite(y.item())) fail(Errc::numeric, "grad_check: f(x) is not finite");
  backward(y);
  std::vector<double> analytic = xg.grad();
  if (analytic.empty()) analytic.assign(static_cast<size_t>(x.size()), 0.0);

  NoGradGuard ng;
  std::vector<double> base(x.values().begin(), x.values().end());
  const double f0 = y.item();
  double worst = 0.0;
  for (size_t i = 0; i < base.size(); ++i) {
    std::vector<double> xp = base, xm = base;
    xp[i] += h;
    xm[i] -= h;
    const double fp = f(Tensor::leaf(x.shape(), std::move(xp))).item();
    const double fm = f(Tensor::leaf(x.shape(), std::move(xm))).item();
    const double dplus = (fp - f0) / h;
    const double dminus = (f0 - fm) / h;
    // one-sided slopes disagreeing means a kink at this coordinate; skip it
    if (std::abs(dplus - dminus) > 1e-3 * std::max({1.0, std::abs(dplus), std::abs(dminus)})) continue;
    const double central = (fp - fm) / (2.0 * h);
    const double err = std::abs(analytic[i] - central) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace ginr
