// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "magic/dataset.hpp"
#include "magic/embedding.hpp"
#include "magic/tensor.hpp"

namespace magic {

enum class NodeKind : std::uint8_t { kPost, kImage, kComment };

/// Neighbourhood structure in CSR form. Row i lists N_i (ascending, self
/// included) in col_idx[row_ptr[i] .. row_ptr[i+1]). Several graphs may share
/// one topology; graph g owns nodes [graph_offsets[g], graph_offsets[g+1]).
struct Topology {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  /// Stable tie-break key per node (record order); travels with the node under
  /// permutation.
  std::vector<std::size_t> rank;
  std::vector<std::size_t> graph_offsets{0};

  /// Symmetric closure of `edges` plus a self-loop on every node.
  static Topology from_edges(std::size_t num_nodes, std::span<const std::pair<std::size_t, std::size_t>> edges);

  std::size_t num_entries() const noexcept { return col_idx.size(); }
  std::size_t num_graphs() const noexcept { return graph_offsets.size(); }
  std::size_t graph_end(std::size_t g) const {
    return g + 1 < graph_offsets.size() ? graph_offsets[g + 1] : num_nodes;
  }
  std::span<const std::size_t> neighbors(std::size_t i) const {
    return {col_idx.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
  }
  bool has_edge(std::size_t i, std::size_t j) const;
  /// Row index of every CSR entry.
  std::vector<std::size_t> entry_rows() const;
  Mask dense_mask() const;
  /// Undirected edges i < j, excluding self-loops.
  std::size_t undirected_edge_count() const;
  bool is_symmetric() const;
};

/// Embedded per-record graph: features (|V| x d), one kind tag per node.
/// Node order is post, then image (if any), then comments in record order.
struct InteractionGraph {
  std::string id;
  Tensor features;
  std::vector<NodeKind> kinds;
  Topology adjacency;
  std::size_t label = 0;

  std::size_t num_nodes() const noexcept { return kinds.size(); }
  std::size_t count(NodeKind kind) const;
};

enum class CommentLinks { kStar, kChain };

struct GraphOptions {
  /// false drops the image node entirely (ablation); true keeps it, using a
  /// zero row when the record has no image.
  bool include_image = true;
  /// kChain additionally links consecutive comments (reply threads).
  CommentLinks comment_links = CommentLinks::kStar;
  bool image_comment_edges = false;
};

/// Star topology around the post: post-image, post-comment edges, self-loops.
/// Throws DataError for a missing embedding, ShapeError for a dim mismatch.
InteractionGraph build_graph(const MultimodalRecord& record, const EmbeddingStore& store, std::size_t dim,
                             const GraphOptions& options = {});

/// Node i of the result is node perm[i] of `graph`; edges and ranks follow.
InteractionGraph permute_nodes(const InteractionGraph& graph, std::span<const std::size_t> perm);

/// Block-diagonal merge of several graphs.
struct GraphBatch {
  Tensor features;
  Topology adjacency;
  std::vector<std::size_t> labels;

  std::size_t num_graphs() const noexcept { return labels.size(); }
  std::span<const std::size_t> graph_offsets() const noexcept { return adjacency.graph_offsets; }
};

GraphBatch batch(std::span<const InteractionGraph> graphs);
GraphBatch batch(std::span<const InteractionGraph> graphs, std::span<const std::size_t> index);

}  // namespace magic
