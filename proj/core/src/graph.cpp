// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include "magic/graph.hpp"

#include <algorithm>
#include <numeric>

#include "magic/error.hpp"

namespace magic {

Topology Topology::from_edges(std::size_t num_nodes, std::span<const std::pair<std::size_t, std::size_t>> edges) {
  std::vector<std::vector<std::size_t>> adj(num_nodes);
  for (std::size_t i = 0; i < num_nodes; ++i) adj[i].push_back(i);
  for (const auto& [a, b] : edges) {
    if (a >= num_nodes || b >= num_nodes) throw ShapeError("edge endpoint out of range");
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  Topology t;
  t.num_nodes = num_nodes;
  t.row_ptr.assign(1, 0);
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    t.col_idx.insert(t.col_idx.end(), nbrs.begin(), nbrs.end());
    t.row_ptr.push_back(t.col_idx.size());
  }
  t.rank.resize(num_nodes);
  std::iota(t.rank.begin(), t.rank.end(), std::size_t{0});
  return t;
}

bool Topology::has_edge(std::size_t i, std::size_t j) const {
  const auto n = neighbors(i);
  return std::binary_search(n.begin(), n.end(), j);
}

std::vector<std::size_t> Topology::entry_rows() const {
  std::vector<std::size_t> rows(col_idx.size());
  for (std::size_t i = 0; i < num_nodes; ++i)
    for (std::size_t e = row_ptr[i]; e < row_ptr[i + 1]; ++e) rows[e] = i;
  return rows;
}

Mask Topology::dense_mask() const {
  Mask m(num_nodes, num_nodes);
  for (std::size_t i = 0; i < num_nodes; ++i)
    for (std::size_t j : neighbors(i)) m.set(i, j, true);
  return m;
}

std::size_t Topology::undirected_edge_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < num_nodes; ++i)
    for (std::size_t j : neighbors(i))
      if (i < j) ++n;
  return n;
}

bool Topology::is_symmetric() const {
  for (std::size_t i = 0; i < num_nodes; ++i) {
    if (!has_edge(i, i)) return false;
    for (std::size_t j : neighbors(i))
      if (!has_edge(j, i)) return false;
  }
  return true;
}

std::size_t InteractionGraph::count(NodeKind kind) const {
  return static_cast<std::size_t>(std::count(kinds.begin(), kinds.end(), kind));
}

InteractionGraph build_graph(const MultimodalRecord& record, const EmbeddingStore& store, std::size_t dim,
                             const GraphOptions& options) {
  if (store.dim() != dim) {
    throw ShapeError("embedding store dim " + std::to_string(store.dim()) + " does not match expected " +
                     std::to_string(dim));
  }
  auto lookup = [&](const std::string& key) {
    const auto row = store.find(key);
    if (!row) throw DataError("record '" + record.id + "': no embedding for key '" + key + "'");
    return *row;
  };

  InteractionGraph g;
  g.id = record.id;
  g.label = record.label;
  std::vector<std::span<const double>> rows;
  const std::vector<double> zeros(dim, 0.0);

  rows.push_back(lookup(post_key(record.id)));
  g.kinds.push_back(NodeKind::kPost);

  std::optional<std::size_t> image_node;
  if (options.include_image) {
    rows.push_back(record.image_ref ? lookup(image_key(record.id)) : std::span<const double>(zeros));
    image_node = g.kinds.size();
    g.kinds.push_back(NodeKind::kImage);
  }
  const std::size_t first_comment = g.kinds.size();
  for (std::size_t c = 0; c < record.comments.size(); ++c) {
    rows.push_back(lookup(comment_key(record.id, c)));
    g.kinds.push_back(NodeKind::kComment);
  }

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  if (image_node) edges.emplace_back(0, *image_node);
  for (std::size_t k = first_comment; k < g.kinds.size(); ++k) {
    edges.emplace_back(0, k);
    if (options.comment_links == CommentLinks::kChain && k + 1 < g.kinds.size()) edges.emplace_back(k, k + 1);
    if (options.image_comment_edges && image_node) edges.emplace_back(*image_node, k);
  }

  g.features = Tensor(rows.size(), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), g.features.row(r).begin());
  g.adjacency = Topology::from_edges(g.kinds.size(), edges);
  return g;
}

InteractionGraph permute_nodes(const InteractionGraph& graph, std::span<const std::size_t> perm) {
  const std::size_t n = graph.num_nodes();
  if (perm.size() != n) throw ShapeError("permutation length does not match node count");
  std::vector<std::size_t> inverse(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (perm[i] >= n || inverse[perm[i]] != n) throw ShapeError("not a permutation");
    inverse[perm[i]] = i;
  }
  InteractionGraph out;
  out.id = graph.id;
  out.label = graph.label;
  out.features = Tensor(n, graph.features.cols());
  for (std::size_t i = 0; i < n; ++i) {
    out.kinds.push_back(graph.kinds[perm[i]]);
    std::copy(graph.features.row(perm[i]).begin(), graph.features.row(perm[i]).end(), out.features.row(i).begin());
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : graph.adjacency.neighbors(i))
      if (i < j) edges.emplace_back(inverse[i], inverse[j]);
  out.adjacency = Topology::from_edges(n, edges);
  for (std::size_t i = 0; i < n; ++i) out.adjacency.rank[i] = graph.adjacency.rank[perm[i]];
  return out;
}

GraphBatch batch(std::span<const InteractionGraph> graphs, std::span<const std::size_t> index) {
  if (index.empty()) throw ShapeError("cannot batch an empty list of graphs");
  const std::size_t dim = graphs[index.front()].features.cols();
  std::size_t total = 0;
  for (std::size_t k : index) {
    const InteractionGraph& g = graphs[k];
    if (g.features.cols() != dim) throw ShapeError("graph '" + g.id + "' has a different feature dimension");
    if (g.features.rows() != g.num_nodes() || g.adjacency.num_nodes != g.num_nodes()) {
      throw ShapeError("graph '" + g.id + "' is internally inconsistent");
    }
    total += g.num_nodes();
  }

  GraphBatch b;
  b.features = Tensor(total, dim);
  Topology& t = b.adjacency;
  t.num_nodes = total;
  t.row_ptr.assign(1, 0);
  t.graph_offsets.clear();
  std::size_t base = 0;
  for (std::size_t k : index) {
    const InteractionGraph& g = graphs[k];
    t.graph_offsets.push_back(base);
    std::copy(g.features.data().begin(), g.features.data().end(), b.features.data().begin() + base * dim);
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      for (std::size_t j : g.adjacency.neighbors(i)) t.col_idx.push_back(base + j);
      t.row_ptr.push_back(t.col_idx.size());
      t.rank.push_back(g.adjacency.rank[i]);
    }
    b.labels.push_back(g.label);
    base += g.num_nodes();
  }
  return b;
}

GraphBatch batch(std::span<const InteractionGraph> graphs) {
  std::vector<std::size_t> all(graphs.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return batch(graphs, all);
}

}  // namespace magic
