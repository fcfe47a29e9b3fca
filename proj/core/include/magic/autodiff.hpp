// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "magic/tensor.hpp"

namespace magic {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; becomes stale once the
/// tape is cleared (by backward() or clear()).
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }

 private:
  friend class Tape;
  friend class Gradients;
  Var(Tape* tape, std::size_t id, std::uint64_t generation)
      : tape_(tape), id_(id), generation_(generation) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
  std::uint64_t generation_ = 0;
};

/// Gradients of a scalar loss with respect to every parameter leaf of the tape
/// that produced it.
class Gradients {
 public:
  const Tensor& operator[](const Var& param) const;
  bool contains(const Var& param) const;

 private:
  friend class Tape;
  std::uint64_t generation_ = 0;
  std::vector<std::optional<Tensor>> grads_;
};

/// Records operations in execution order so that a single reverse sweep can
/// propagate gradients. Nodes are appended only after their inputs exist, so
/// the node list is always topologically sorted.
///
/// A tape is single-threaded. Independent tapes may run concurrently.
class Tape {
 public:
  /// Receives the gradient of the node's output and one slot per input;
  /// slots are null for inputs that do not require gradients.
  using BackwardFn = std::function<void(const Tensor& grad_out, std::span<Tensor* const> input_grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf whose gradient is reported by backward().
  Var parameter(Tensor value);

  /// Appends an op node. Throws NumericError if `value` is not finite.
  Var record(std::string_view op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(const Var& v) const;
  bool requires_grad(const Var& v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse sweep from a 1x1 loss. Visits every node once, newest first, then
  /// clears the tape. Throws TapeError on a non-scalar loss or a stale handle.
  Gradients backward(const Var& loss);
  void clear();

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_parameter = false;
  };

  void check(const Var& v) const;

  std::vector<Node> nodes_;
  std::uint64_t generation_ = 1;
};

// Differentiable operations. All operands must live on the same tape.

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Entry-wise (Hadamard) product.
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
/// Adds a 1 x cols row to every row of `a`.
Var add_row(const Var& a, const Var& row);
/// Entry-wise product with a constant tensor (dropout and selection masks).
Var mul_const(const Var& a, const Tensor& factor);

Var leaky_relu(const Var& a, double slope);
Var elu(const Var& a, double alpha);
Var exp(const Var& a);
/// Throws NumericError on any non-positive entry.
Var log(const Var& a);

Var sum(const Var& a);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(const Var& a, std::size_t begin, std::size_t end);
Var gather_rows(const Var& a, std::span<const std::size_t> index);

/// Row-wise softmax restricted to entries where `mask` is set; masked entries
/// are exactly zero. Throws ShapeError if any row has no unmasked entry.
Var softmax_masked(const Var& logits, const Mask& mask);
Var softmax_rows(const Var& logits);
/// Dense renormalization: out_ij = a_ij k_ij / sum_j a_ij k_ij for a 0/1 mask k.
Var mask_renormalize(const Var& a, const Mask& keep);

/// out(i, j) = col_a(i) + col_b(j) for two column vectors.
Var outer_add(const Var& col_a, const Var& col_b);

// Ops over a CSR neighbourhood structure: row i owns entries
// [row_ptr[i], row_ptr[i+1]) of a per-edge column vector.

Var segment_softmax(const Var& edge_logits, std::span<const std::size_t> row_ptr);
Var segment_renormalize(const Var& edge_values, std::span<const unsigned char> keep,
                        std::span<const std::size_t> row_ptr);
/// out_i = sum over edges e of row i of w_e * x[col_idx[e]].
Var spmm(const Var& edge_weights, std::span<const std::size_t> row_ptr,
         std::span<const std::size_t> col_idx, const Var& x);
/// Mean of consecutive row blocks; block g spans [offsets[g], offsets[g+1]) with
/// an implicit final boundary at a.rows().
Var segment_mean(const Var& a, std::span<const std::size_t> offsets);

/// Mean over rows of -log(max(softmax(logits)[label], 1e-12)).
Var cross_entropy(const Var& logits, std::span<const std::size_t> labels);

/// Untracked stable row softmax.
Tensor softmax_rows(const Tensor& logits);

inline constexpr double kProbabilityFloor = 1e-12;

}  // namespace magic
