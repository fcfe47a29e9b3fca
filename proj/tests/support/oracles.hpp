// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference computations used as test oracles. None of these call
// into the library's numeric code.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace magic::testing {

using Matrix = std::vector<std::vector<double>>;

Matrix ref_matmul(const Matrix& a, const Matrix& b);

struct RefHead {
  Matrix weight;                 // d_in x d_head
  std::vector<double> attention;  // 2 d_head
};

struct RefLayer {
  std::vector<RefHead> heads;
  bool concat = true;
  double slope = 0.2;
  double elu_alpha = 1.0;
  double ratio = 0.8;
  bool topk = true;
};

/// One attention layer evaluated with explicit loops over a dense adjacency:
/// score [W h_i || W h_j], softmax over neighbours, keep the ceil(ratio * |N_i|)
/// largest (ties by rank, then index), renormalize, aggregate, ELU.
Matrix ref_gat_layer(const Matrix& h, const std::vector<std::vector<bool>>& adjacency,
                     const std::vector<std::size_t>& rank, const RefLayer& layer);

/// Per-edge coefficients of one head before and after top-k, dense n x n.
Matrix ref_attention(const Matrix& h, const std::vector<std::vector<bool>>& adjacency, const RefHead& head,
                     double slope);

struct RefModel {
  Matrix input_weight;
  std::vector<double> input_bias;
  std::vector<RefLayer> layers;
  Matrix classifier_weight;
  std::vector<double> classifier_bias;
  bool residual = true;
};

/// Logits of one graph.
std::vector<double> ref_logits(const RefModel& model, const Matrix& x, const std::vector<std::vector<bool>>& adjacency,
                               const std::vector<std::size_t>& rank);

/// Central difference (f(x+eps) - f(x-eps)) / (2 eps) of f at each coordinate of x.
std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double eps);

struct RefMetrics {
  double accuracy, precision, recall, f1;
};
/// Macro metrics straight from the definitions, rows actual.
RefMetrics ref_metrics(const std::vector<std::vector<double>>& m);

}  // namespace magic::testing
