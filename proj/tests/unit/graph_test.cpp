// Copyright 2026 The magic-gat Authors
// SPDX-License-Identifier: Apache-2.0

#include <numeric>

#include <gtest/gtest.h>

#include "magic/embedding.hpp"
#include "magic/error.hpp"
#include "magic/graph.hpp"
#include "synthetic.hpp"

namespace magic {
namespace {

MultimodalRecord record(std::size_t comments, bool image) {
  MultimodalRecord r;
  r.id = "r";
  r.post_text = "post";
  for (std::size_t c = 0; c < comments; ++c) r.comments.push_back("comment " + std::to_string(c));
  if (image) r.image_ref = "img";
  return r;
}

EmbeddingStore store_for(const MultimodalRecord& r, std::size_t dim) {
  RawRecord raw{r.id, "real", r.post_text, r.comments, r.image_ref};
  return fallback_store(std::span<const RawRecord>(&raw, 1), dim, 0);
}

TEST(BuildGraph, PostImageThreeComments) {
  const auto r = record(3, true);
  const InteractionGraph g = build_graph(r, store_for(r, 8), 8);
  EXPECT_EQ(g.num_nodes(), 5u);
  EXPECT_EQ(g.adjacency.undirected_edge_count(), 4u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_TRUE(g.adjacency.has_edge(i, i));
  EXPECT_EQ(g.adjacency.num_entries(), 4u * 2 + 5);
  EXPECT_EQ(g.count(NodeKind::kPost), 1u);
  EXPECT_EQ(g.count(NodeKind::kImage), 1u);
  EXPECT_EQ(g.count(NodeKind::kComment), 3u);
  EXPECT_TRUE(g.adjacency.is_symmetric());
}

TEST(BuildGraph, PostOnlyGetsZeroImageNode) {
  const auto r = record(0, false);
  const InteractionGraph g = build_graph(r, store_for(r, 8), 8);
  ASSERT_EQ(g.num_nodes(), 2u);
  EXPECT_EQ(g.kinds[1], NodeKind::kImage);
  for (double v : g.features.row(1)) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(g.adjacency.undirected_edge_count(), 1u);

  GraphOptions no_image;
  no_image.include_image = false;
  const InteractionGraph solo = build_graph(r, store_for(r, 8), 8, no_image);
  EXPECT_EQ(solo.num_nodes(), 1u);
  EXPECT_EQ(solo.adjacency.num_entries(), 1u);
}

TEST(BuildGraph, ExcludingImageRemovesImageKind) {
  const auto r = record(2, true);
  GraphOptions o;
  o.include_image = false;
  const InteractionGraph g = build_graph(r, store_for(r, 8), 8, o);
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.count(NodeKind::kImage), 0u);
}

TEST(BuildGraph, StarHasNoCommentToCommentEdges) {
  const auto r = record(3, true);
  const InteractionGraph g = build_graph(r, store_for(r, 8), 8);
  for (std::size_t i = 1; i < 5; ++i)
    for (std::size_t j = 1; j < 5; ++j)
      if (i != j) EXPECT_FALSE(g.adjacency.has_edge(i, j));
}

TEST(BuildGraph, ChainAndImageCommentOptions) {
  const auto r = record(3, true);
  GraphOptions o;
  o.comment_links = CommentLinks::kChain;
  const InteractionGraph chain = build_graph(r, store_for(r, 8), 8, o);
  EXPECT_EQ(chain.adjacency.undirected_edge_count(), 4u + 2);
  EXPECT_TRUE(chain.adjacency.has_edge(2, 3));
  EXPECT_TRUE(chain.adjacency.has_edge(4, 3));

  GraphOptions ic;
  ic.image_comment_edges = true;
  const InteractionGraph linked = build_graph(r, store_for(r, 8), 8, ic);
  EXPECT_EQ(linked.adjacency.undirected_edge_count(), 4u + 3);
  EXPECT_TRUE(linked.adjacency.has_edge(1, 4));
}

TEST(BuildGraph, MissingEmbeddingAndDimMismatch) {
  const auto r = record(2, true);
  EmbeddingStore partial(8);
  partial.add("post:r", std::vector<double>(8, 1.0));
  EXPECT_THROW(build_graph(r, partial, 8), DataError);
  EXPECT_THROW(build_graph(r, store_for(r, 8), 16), ShapeError);
}

TEST(BuildGraph, Deterministic) {
  const auto r = record(4, true);
  const auto s = store_for(r, 16);
  const InteractionGraph a = build_graph(r, s, 16), b = build_graph(r, s, 16);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.adjacency.col_idx, b.adjacency.col_idx);
  EXPECT_EQ(a.adjacency.row_ptr, b.adjacency.row_ptr);
}

TEST(Topology, FromEdgesSymmetrizesAndDeduplicates) {
  const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}, {1, 0}, {1, 2}, {2, 2}};
  const Topology t = Topology::from_edges(3, edges);
  EXPECT_TRUE(t.is_symmetric());
  EXPECT_EQ(t.undirected_edge_count(), 2u);
  EXPECT_EQ(t.num_entries(), 2u * 2 + 3);
  EXPECT_THROW(Topology::from_edges(2, std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}}), ShapeError);
}

TEST(Batch, SingleGraphIsUnchanged) {
  Rng rng(1);
  const InteractionGraph g = testing::random_graph(rng, 4, 3, 2);
  const GraphBatch b = batch(std::span<const InteractionGraph>(&g, 1));
  EXPECT_EQ(b.features, g.features);
  EXPECT_EQ(b.adjacency.col_idx, g.adjacency.col_idx);
  EXPECT_EQ(std::vector<std::size_t>(b.graph_offsets().begin(), b.graph_offsets().end()),
            std::vector<std::size_t>{0});
  EXPECT_EQ(b.labels, std::vector<std::size_t>{g.label});
}

TEST(Batch, BlockDiagonalMerge) {
  Rng rng(2);
  std::vector<InteractionGraph> gs{testing::random_graph(rng, 3, 4, 2), testing::random_graph(rng, 2, 4, 2)};
  const GraphBatch b = batch(gs);
  EXPECT_EQ(b.features.rows(), 5u);
  EXPECT_EQ(std::vector<std::size_t>(b.graph_offsets().begin(), b.graph_offsets().end()),
            (std::vector<std::size_t>{0, 3}));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j : b.adjacency.neighbors(i)) EXPECT_EQ(i < 3, j < 3) << "edge crosses graphs";
  EXPECT_TRUE(b.adjacency.is_symmetric());
  EXPECT_EQ(b.adjacency.rank.size(), 5u);
}

TEST(Batch, ErrorsOnEmptyAndDimensionMismatch) {
  Rng rng(3);
  EXPECT_THROW(batch(std::vector<InteractionGraph>{}), ShapeError);
  std::vector<InteractionGraph> gs{testing::random_graph(rng, 3, 4, 2), testing::random_graph(rng, 3, 5, 2)};
  EXPECT_THROW(batch(gs), ShapeError);
}

TEST(Batch, IndexSelectsSubset) {
  Rng rng(4);
  std::vector<InteractionGraph> gs;
  for (int i = 0; i < 4; ++i) gs.push_back(testing::random_graph(rng, 2 + i, 3, 2));
  const std::vector<std::size_t> idx{2, 0};
  const GraphBatch b = batch(gs, idx);
  EXPECT_EQ(b.features.rows(), gs[2].num_nodes() + gs[0].num_nodes());
  EXPECT_EQ(b.labels, (std::vector<std::size_t>{gs[2].label, gs[0].label}));
}

TEST(PermuteNodes, CarriesRankAndEdges) {
  Rng rng(5);
  const InteractionGraph g = testing::random_graph(rng, 6, 3, 2);
  std::vector<std::size_t> perm{3, 1, 5, 0, 2, 4};
  const InteractionGraph p = permute_nodes(g, perm);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(p.adjacency.rank[i], g.adjacency.rank[perm[i]]);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(p.adjacency.has_edge(i, j), g.adjacency.has_edge(perm[i], perm[j]));
  }
  EXPECT_THROW(permute_nodes(g, std::vector<std::size_t>{0, 0, 1, 2, 3, 4}), ShapeError);
}

}  // namespace
}  // namespace magic
