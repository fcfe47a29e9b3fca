// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include "magic/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "magic/error.hpp"

namespace magic {

// ---- Var / Gradients ----

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw TapeError("variable is not attached to any tape");
  return tape_->value(*this);
}

const Tensor& Gradients::operator[](const Var& param) const {
  if (!contains(param)) throw TapeError("no gradient recorded for variable " + std::to_string(param.id()));
  return *grads_[param.id()];
}

bool Gradients::contains(const Var& param) const {
  return param.generation_ == generation_ && param.id() < grads_.size() && grads_[param.id()].has_value();
}

// ---- Tape ----

void Tape::check(const Var& v) const {
  if (v.tape_ != this) throw TapeError("variable belongs to a different tape");
  if (v.generation_ != generation_ || v.id_ >= nodes_.size()) {
    throw TapeError("stale variable: its tape has been cleared");
  }
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite constant recorded on tape");
  nodes_.push_back(Node{std::move(value), {}, nullptr, false, false});
  return Var(this, nodes_.size() - 1, generation_);
}

Var Tape::parameter(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite parameter recorded on tape");
  nodes_.push_back(Node{std::move(value), {}, nullptr, true, true});
  return Var(this, nodes_.size() - 1, generation_);
}

Var Tape::record(std::string_view op, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value produced by " + std::string(op));
  }
  Node node{std::move(value), {}, nullptr, false, false};
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    check(in);
    node.inputs.push_back(in.id_);
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1, generation_);
}

const Tensor& Tape::value(const Var& v) const {
  check(v);
  return nodes_[v.id_].value;
}

bool Tape::requires_grad(const Var& v) const {
  check(v);
  return nodes_[v.id_].requires_grad;
}

void Tape::clear() {
  nodes_.clear();
  ++generation_;
}

Gradients Tape::backward(const Var& loss) {
  if (loss.tape_ == nullptr) throw TapeError("backward: no active tape for loss");
  if (loss.tape_ != this) throw TapeError("backward: loss belongs to a different tape");
  if (loss.generation_ != generation_ || loss.id_ >= nodes_.size()) {
    throw TapeError("backward: no active tape (already consumed or cleared)");
  }
  const Tensor& lv = nodes_[loss.id_].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw TapeError("backward: loss must be 1x1, got " + lv.shape_string());
  }

  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[loss.id_] = Tensor(1, 1, 1.0);

  std::vector<Tensor*> slots;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!grads[i] || !node.requires_grad || !node.backward) continue;
    slots.assign(node.inputs.size(), nullptr);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const std::size_t in = node.inputs[k];
      if (!nodes_[in].requires_grad) continue;
      if (!grads[in]) grads[in] = Tensor(nodes_[in].value.rows(), nodes_[in].value.cols());
      slots[k] = &*grads[in];
    }
    node.backward(*grads[i], slots);
  }

  Gradients out;
  out.generation_ = generation_;
  out.grads_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].is_parameter) continue;
    if (grads[i]) {
      if (!grads[i]->all_finite()) {
        throw NumericError("non-finite gradient for parameter node " + std::to_string(i));
      }
      out.grads_[i] = std::move(*grads[i]);
    } else {
      out.grads_[i] = Tensor(nodes_[i].value.rows(), nodes_[i].value.cols());
    }
  }
  clear();
  return out;
}

// ---- ops ----

namespace {

Tape& tape_of(const Var& a) {
  if (a.tape() == nullptr) throw TapeError("operation on a detached variable");
  return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw TapeError("operands live on different tapes");
  return tape_of(a);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

void require_column(const char* op, const Tensor& t) {
  if (t.cols() != 1) throw ShapeError(std::string(op) + ": expected a column vector, got " + t.shape_string());
}

void check_row_ptr(const char* op, std::span<const std::size_t> row_ptr, std::size_t entries) {
  if (row_ptr.empty() || row_ptr.front() != 0 || row_ptr.back() != entries) {
    throw ShapeError(std::string(op) + ": row pointer does not cover " + std::to_string(entries) + " entries");
  }
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

void accumulate(Tensor* dst, const Tensor& src) {
  if (dst == nullptr) return;
  for (std::size_t i = 0; i < src.size(); ++i) (*dst)[i] += src[i];
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& tape = tape_of(a, b);
  Tensor out = matmul_plain(a.value(), b.value());
  return tape.record("matmul", std::move(out), {a, b}, [a, b](const Tensor& g, std::span<Tensor* const> in) {
    if (in[0]) accumulate(in[0], matmul_plain(g, transpose(b.value())));
    if (in[1]) accumulate(in[1], matmul_plain(transpose(a.value()), g));
  });
}

Var add(const Var& a, const Var& b) {
  Tape& tape = tape_of(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return tape.record("add", std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> in) {
    accumulate(in[0], g);
    accumulate(in[1], g);
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& tape = tape_of(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return tape.record("sub", std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> in) {
    accumulate(in[0], g);
    if (in[1])
      for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] -= g[i];
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& tape = tape_of(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return tape.record("mul", std::move(out), {a, b}, [a, b](const Tensor& g, std::span<Tensor* const> in) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (in[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * bv[i];
    if (in[1])
      for (std::size_t i = 0; i < g.size(); ++i) (*in[1])[i] += g[i] * av[i];
  });
}

Var scale(const Var& a, double factor) {
  Tape& tape = tape_of(a);
  Tensor out = map(a.value(), [factor](double x) { return x * factor; });
  return tape.record("scale", std::move(out), {a}, [factor](const Tensor& g, std::span<Tensor* const> in) {
    if (in[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * factor;
  });
}

Var add_row(const Var& a, const Var& row) {
  Tape& tape = tape_of(a, row);
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ShapeError("add_row: cannot broadcast " + rv.shape_string() + " over " + av.shape_string());
  }
  Tensor out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv[j];
  return tape.record("add_row", std::move(out), {a, row}, [](const Tensor& g, std::span<Tensor* const> in) {
    accumulate(in[0], g);
    if (in[1])
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) (*in[1])[j] += g(i, j);
  });
}

Var mul_const(const Var& a, const Tensor& factor) {
  Tape& tape = tape_of(a);
  require_same_shape("mul_const", a.value(), factor);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor[i];
  return tape.record("mul_const", std::move(out), {a}, [factor](const Tensor& g, std::span<Tensor* const> in) {
    if (in[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * factor[i];
  });
}

Var leaky_relu(const Var& a, double slope) {
  if (!(std::isfinite(slope) && slope > 0.0)) throw NumericError("leaky_relu: slope must be finite and positive");
  Tape& tape = tape_of(a);
  Tensor out = map(a.value(), [slope](double x) { return x >= 0.0 ? x : slope * x; });
  return tape.record("leaky_relu", std::move(out), {a}, [a, slope](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0]) return;
    const Tensor& x = a.value();
    for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += x[i] >= 0.0 ? g[i] : slope * g[i];
  });
}

Var elu(const Var& a, double alpha) {
  if (!(std::isfinite(alpha) && alpha > 0.0)) throw NumericError("elu: alpha must be finite and positive");
  Tape& tape = tape_of(a);
  Tensor out = map(a.value(), [alpha](double x) { return x >= 0.0 ? x : alpha * std::expm1(x); });
  return tape.record("elu", std::move(out), {a}, [a, alpha](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0]) return;
    const Tensor& x = a.value();
    for (std::size_t i = 0; i < g.size(); ++i) {
      (*in[0])[i] += x[i] >= 0.0 ? g[i] : g[i] * alpha * std::exp(x[i]);
    }
  });
}

Var exp(const Var& a) {
  Tape& tape = tape_of(a);
  Tensor out = map(a.value(), [](double x) { return std::exp(x); });
  Tensor saved = out;
  return tape.record("exp", std::move(out), {a}, [saved](const Tensor& g, std::span<Tensor* const> in) {
    if (in[0])
      for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] * saved[i];
  });
}

Var log(const Var& a) {
  Tape& tape = tape_of(a);
  const Tensor& x = a.value();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw NumericError("log of non-positive entry " + std::to_string(x[i]));
  }
  Tensor out = map(x, [](double v) { return std::log(v); });
  return tape.record("log", std::move(out), {a}, [a](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0]) return;
    const Tensor& xv = a.value();
    for (std::size_t i = 0; i < g.size(); ++i) (*in[0])[i] += g[i] / xv[i];
  });
}

Var sum(const Var& a) {
  Tape& tape = tape_of(a);
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return tape.record("sum", Tensor(1, 1, total), {a}, [](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0]) return;
    for (double& v : in[0]->data()) v += g[0];
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape& tape = tape_of(parts.front());
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    if (p.tape() != &tape) throw TapeError("concat_cols: operands live on different tapes");
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + std::to_string(p.rows()) + " vs " + std::to_string(rows));
    }
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, offset + j) = v(i, j);
    offset += v.cols();
  }
  return tape.record("concat_cols", std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                     [widths](const Tensor& g, std::span<Tensor* const> in) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < in.size(); ++k) {
                         if (in[k]) {
                           for (std::size_t i = 0; i < g.rows(); ++i)
                             for (std::size_t j = 0; j < widths[k]; ++j) (*in[k])(i, j) += g(i, off + j);
                         }
                         off += widths[k];
                       }
                     });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t end) {
  Tape& tape = tape_of(a);
  const Tensor& v = a.value();
  if (begin > end || end > v.rows()) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of " +
                     v.shape_string());
  }
  std::vector<double> data(v.data().begin() + begin * v.cols(), v.data().begin() + end * v.cols());
  Tensor out(end - begin, v.cols(), std::move(data));
  return tape.record("slice_rows", std::move(out), {a}, [begin](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0]) return;
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) (*in[0])(begin + i, j) += g(i, j);
  });
}

Var gather_rows(const Var& a, std::span<const std::size_t> index) {
  Tape& tape = tape_of(a);
  const Tensor& v = a.value();
  Tensor out(index.size(), v.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= v.rows()) throw ShapeError("gather_rows: index out of range");
    for (std::size_t j = 0; j < v.cols(); ++j) out(r, j) = v(index[r], j);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return tape.record("gather_rows", std::move(out), {a}, [idx](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0]) return;
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < g.cols(); ++j) (*in[0])(idx[r], j) += g(r, j);
  });
}

namespace {

// Shared backward of softmax-like maps: d_in_j = s_j * (g_j - sum_k s_k g_k).
void softmax_backward_span(std::span<const double> s, std::span<const double> g, std::span<double> d) {
  double dot = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) dot += s[k] * g[k];
  for (std::size_t k = 0; k < s.size(); ++k) d[k] += s[k] * (g[k] - dot);
}

}  // namespace

Var softmax_masked(const Var& logits, const Mask& mask) {
  Tape& tape = tape_of(logits);
  const Tensor& x = logits.value();
  if (mask.rows() != x.rows() || mask.cols() != x.cols()) {
    throw ShapeError("softmax_masked: mask shape does not match logits " + x.shape_string());
  }
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (mask(i, j)) mx = std::max(mx, x(i, j));
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw ShapeError("softmax_masked: row " + std::to_string(i) + " is fully masked");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (!mask(i, j)) continue;
      out(i, j) = std::exp(x(i, j) - mx);
      total += out(i, j);
    }
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) /= total;
  }
  Tensor saved = out;
  return tape.record("softmax_masked", std::move(out), {logits},
                     [saved](const Tensor& g, std::span<Tensor* const> in) {
                       if (!in[0]) return;
                       for (std::size_t i = 0; i < g.rows(); ++i) {
                         softmax_backward_span(saved.row(i), g.row(i), in[0]->row(i));
                       }
                     });
}

Var softmax_rows(const Var& logits) {
  return softmax_masked(logits, Mask(logits.rows(), logits.cols(), true));
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : logits.row(i)) mx = std::max(mx, v);
    double total = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      out(i, j) = std::exp(logits(i, j) - mx);
      total += out(i, j);
    }
    for (std::size_t j = 0; j < logits.cols(); ++j) out(i, j) /= total;
  }
  return out;
}

namespace {

// out = a*k / sum(a*k) over a contiguous run; backward matches softmax's with a
// 1/sum factor applied to the kept inputs.
void renormalize_forward(std::span<const double> a, auto keep, std::span<double> out, const char* op) {
  double total = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    if (keep(j)) total += a[j];
  if (!(total > 0.0)) throw NumericError(std::string(op) + ": no positive mass survives the mask");
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = keep(j) ? a[j] / total : 0.0;
}

void renormalize_backward(std::span<const double> a, std::span<const double> out, auto keep,
                          std::span<const double> g, std::span<double> d) {
  double total = 0.0;
  double dot = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!keep(j)) continue;
    total += a[j];
    dot += out[j] * g[j];
  }
  for (std::size_t j = 0; j < a.size(); ++j)
    if (keep(j)) d[j] += (g[j] - dot) / total;
}

}  // namespace

Var mask_renormalize(const Var& a, const Mask& keep) {
  Tape& tape = tape_of(a);
  const Tensor& x = a.value();
  if (keep.rows() != x.rows() || keep.cols() != x.cols()) {
    throw ShapeError("mask_renormalize: mask shape does not match " + x.shape_string());
  }
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    renormalize_forward(x.row(i), [&](std::size_t j) { return keep(i, j); }, out.row(i), "mask_renormalize");
  }
  Tensor saved = out;
  return tape.record("mask_renormalize", std::move(out), {a},
                     [a, keep, saved](const Tensor& g, std::span<Tensor* const> in) {
                       if (!in[0]) return;
                       const Tensor& xv = a.value();
                       for (std::size_t i = 0; i < g.rows(); ++i) {
                         renormalize_backward(xv.row(i), saved.row(i), [&](std::size_t j) { return keep(i, j); },
                                              g.row(i), in[0]->row(i));
                       }
                     });
}

Var outer_add(const Var& col_a, const Var& col_b) {
  Tape& tape = tape_of(col_a, col_b);
  const Tensor& a = col_a.value();
  const Tensor& b = col_b.value();
  require_column("outer_add", a);
  require_column("outer_add", b);
  Tensor out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = a[i] + b[j];
  return tape.record("outer_add", std::move(out), {col_a, col_b}, [](const Tensor& g, std::span<Tensor* const> in) {
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t j = 0; j < g.cols(); ++j) {
        if (in[0]) (*in[0])[i] += g(i, j);
        if (in[1]) (*in[1])[j] += g(i, j);
      }
    }
  });
}

Var segment_softmax(const Var& edge_logits, std::span<const std::size_t> row_ptr) {
  Tape& tape = tape_of(edge_logits);
  const Tensor& e = edge_logits.value();
  require_column("segment_softmax", e);
  check_row_ptr("segment_softmax", row_ptr, e.rows());
  Tensor out(e.rows(), 1);
  for (std::size_t i = 0; i + 1 < row_ptr.size(); ++i) {
    const std::size_t lo = row_ptr[i], hi = row_ptr[i + 1];
    if (lo == hi) continue;
    double mx = e[lo];
    for (std::size_t k = lo; k < hi; ++k) mx = std::max(mx, e[k]);
    double total = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
      out[k] = std::exp(e[k] - mx);
      total += out[k];
    }
    for (std::size_t k = lo; k < hi; ++k) out[k] /= total;
  }
  Tensor saved = out;
  std::vector<std::size_t> ptr(row_ptr.begin(), row_ptr.end());
  return tape.record("segment_softmax", std::move(out), {edge_logits},
                     [saved, ptr](const Tensor& g, std::span<Tensor* const> in) {
                       if (!in[0]) return;
                       for (std::size_t i = 0; i + 1 < ptr.size(); ++i) {
                         const std::size_t lo = ptr[i], n = ptr[i + 1] - lo;
                         softmax_backward_span(saved.data().subspan(lo, n), g.data().subspan(lo, n),
                                               in[0]->data().subspan(lo, n));
                       }
                     });
}

Var segment_renormalize(const Var& edge_values, std::span<const unsigned char> keep,
                        std::span<const std::size_t> row_ptr) {
  Tape& tape = tape_of(edge_values);
  const Tensor& a = edge_values.value();
  require_column("segment_renormalize", a);
  check_row_ptr("segment_renormalize", row_ptr, a.rows());
  if (keep.size() != a.rows()) throw ShapeError("segment_renormalize: keep mask length mismatch");
  Tensor out(a.rows(), 1);
  for (std::size_t i = 0; i + 1 < row_ptr.size(); ++i) {
    const std::size_t lo = row_ptr[i], n = row_ptr[i + 1] - lo;
    if (n == 0) continue;
    renormalize_forward(a.data().subspan(lo, n), [&](std::size_t j) { return keep[lo + j] != 0; },
                        out.data().subspan(lo, n), "segment_renormalize");
  }
  Tensor saved = out;
  std::vector<unsigned char> kept(keep.begin(), keep.end());
  std::vector<std::size_t> ptr(row_ptr.begin(), row_ptr.end());
  return tape.record("segment_renormalize", std::move(out), {edge_values},
                     [edge_values, saved, kept, ptr](const Tensor& g, std::span<Tensor* const> in) {
                       if (!in[0]) return;
                       const Tensor& av = edge_values.value();
                       for (std::size_t i = 0; i + 1 < ptr.size(); ++i) {
                         const std::size_t lo = ptr[i], n = ptr[i + 1] - lo;
                         if (n == 0) continue;
                         renormalize_backward(av.data().subspan(lo, n), saved.data().subspan(lo, n),
                                              [&](std::size_t j) { return kept[lo + j] != 0; },
                                              g.data().subspan(lo, n), in[0]->data().subspan(lo, n));
                       }
                     });
}

Var spmm(const Var& edge_weights, std::span<const std::size_t> row_ptr, std::span<const std::size_t> col_idx,
         const Var& x) {
  Tape& tape = tape_of(edge_weights, x);
  const Tensor& w = edge_weights.value();
  const Tensor& xv = x.value();
  require_column("spmm", w);
  check_row_ptr("spmm", row_ptr, w.rows());
  if (col_idx.size() != w.rows()) throw ShapeError("spmm: column index length mismatch");
  const std::size_t n = row_ptr.size() - 1;
  const std::size_t d = xv.cols();
  Tensor out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      if (col_idx[e] >= xv.rows()) throw ShapeError("spmm: column index out of range");
      const double we = w[e];
      for (std::size_t j = 0; j < d; ++j) out(i, j) += we * xv(col_idx[e], j);
    }
  }
  std::vector<std::size_t> ptr(row_ptr.begin(), row_ptr.end());
  std::vector<std::size_t> cols(col_idx.begin(), col_idx.end());
  return tape.record("spmm", std::move(out), {edge_weights, x},
                     [edge_weights, x, ptr, cols](const Tensor& g, std::span<Tensor* const> in) {
                       const Tensor& wv = edge_weights.value();
                       const Tensor& xs = x.value();
                       for (std::size_t i = 0; i + 1 < ptr.size(); ++i) {
                         for (std::size_t e = ptr[i]; e < ptr[i + 1]; ++e) {
                           const std::size_t c = cols[e];
                           if (in[0]) {
                             double dot = 0.0;
                             for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * xs(c, j);
                             (*in[0])[e] += dot;
                           }
                           if (in[1]) {
                             for (std::size_t j = 0; j < g.cols(); ++j) (*in[1])(c, j) += wv[e] * g(i, j);
                           }
                         }
                       }
                     });
}

Var segment_mean(const Var& a, std::span<const std::size_t> offsets) {
  Tape& tape = tape_of(a);
  const Tensor& v = a.value();
  if (offsets.empty() || offsets.front() != 0) throw ShapeError("segment_mean: offsets must start at 0");
  std::vector<std::size_t> bounds(offsets.begin(), offsets.end());
  bounds.push_back(v.rows());
  for (std::size_t g = 0; g + 1 < bounds.size(); ++g) {
    if (bounds[g + 1] <= bounds[g]) throw ShapeError("segment_mean: empty or unordered segment");
  }
  const std::size_t groups = bounds.size() - 1;
  Tensor out(groups, v.cols());
  for (std::size_t g = 0; g < groups; ++g) {
    const double inv = 1.0 / static_cast<double>(bounds[g + 1] - bounds[g]);
    for (std::size_t r = bounds[g]; r < bounds[g + 1]; ++r)
      for (std::size_t j = 0; j < v.cols(); ++j) out(g, j) += v(r, j);
    for (std::size_t j = 0; j < v.cols(); ++j) out(g, j) *= inv;
  }
  return tape.record("segment_mean", std::move(out), {a}, [bounds](const Tensor& g, std::span<Tensor* const> in) {
    if (!in[0]) return;
    for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
      const double inv = 1.0 / static_cast<double>(bounds[s + 1] - bounds[s]);
      for (std::size_t r = bounds[s]; r < bounds[s + 1]; ++r)
        for (std::size_t j = 0; j < g.cols(); ++j) (*in[0])(r, j) += g(s, j) * inv;
    }
  });
}

Var cross_entropy(const Var& logits, std::span<const std::size_t> labels) {
  Tape& tape = tape_of(logits);
  const Tensor& z = logits.value();
  if (labels.size() != z.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(z.rows()) +
                     " rows");
  }
  if (z.rows() == 0) throw ShapeError("cross_entropy: empty batch");
  Tensor p = softmax_rows(z);
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (labels[i] >= z.cols()) throw ShapeError("cross_entropy: label out of range");
    total -= std::log(std::max(p(i, labels[i]), kProbabilityFloor));
  }
  const double batch = static_cast<double>(z.rows());
  std::vector<std::size_t> y(labels.begin(), labels.end());
  return tape.record("cross_entropy", Tensor(1, 1, total / batch), {logits},
                     [p, y, batch](const Tensor& g, std::span<Tensor* const> in) {
                       if (!in[0]) return;
                       for (std::size_t i = 0; i < p.rows(); ++i) {
                         // Below the floor the loss is constant in the logits.
                         if (p(i, y[i]) <= kProbabilityFloor) continue;
                         for (std::size_t j = 0; j < p.cols(); ++j) {
                           const double target = j == y[i] ? 1.0 : 0.0;
                           (*in[0])(i, j) += g[0] * (p(i, j) - target) / batch;
                         }
                       }
                     });
}

}  // namespace magic
