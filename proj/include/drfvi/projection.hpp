/*
 * Copyright 2026 The drfvi Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <algorithm>
#include <span>
#include <unordered_map>
#include <vector>

#include "drfvi/common.hpp"
#include "drfvi/forest.hpp"
#include "drfvi/kernel.hpp"

namespace drfvi {

// Leaves reached from x when both branches are followed at every split on
// `dropped`. Sorted, never empty.
inline std::vector<std::int32_t> reached_leaves(const Tree& tree, std::span<const double> x,
                                                std::size_t dropped) {
  std::vector<std::int32_t> out;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const std::int32_t id = stack.back();
    stack.pop_back();
    const auto& nd = tree.nodes[static_cast<std::size_t>(id)];
    if (nd.is_leaf()) {
      out.push_back(id);
    } else if (static_cast<std::size_t>(nd.split_variable) == dropped) {
      stack.push_back(nd.right);
      stack.push_back(nd.left);
    } else {
      stack.push_back(x[static_cast<std::size_t>(nd.split_variable)] <= nd.threshold ? nd.left : nd.right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ProjectedWeights {
  WeightVector weights;
  // Trees where no estimation row shared the query's reached-leaf set exactly.
  std::size_t fallback_trees = 0;
};

namespace detail {

struct LeafSetHash {
  std::size_t operator()(const std::vector<std::int32_t>& v) const noexcept {
    std::uint64_t h = v.size();
    for (auto x : v) h = mix_seed(h, static_cast<std::uint64_t>(x));
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

// Projected forest for one dropped variable. Per tree, estimation rows are
// grouped by their reached-leaf set once; a query then receives uniform mass
// over the group whose reached set equals its own. Trees without a split on
// the dropped variable route exactly as the original forest.
class ProjectedForest {
 public:
  ProjectedForest(const Forest& forest, std::size_t dropped) : forest_(&forest), dropped_(dropped) {
    if (dropped >= forest.data().p()) throw InvalidInput("projection: variable out of range");
    const Matrix& x = forest.data().x;
    groups_.resize(forest.num_trees());
    uses_dropped_.assign(forest.num_trees(), false);
    for (std::size_t t = 0; t < forest.num_trees(); ++t) {
      const Tree& tree = forest.trees()[t];
      for (const auto& nd : tree.nodes)
        if (!nd.is_leaf() && static_cast<std::size_t>(nd.split_variable) == dropped) uses_dropped_[t] = true;
      if (!uses_dropped_[t]) continue;
      for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
        if (!tree.nodes[k].is_leaf()) continue;
        for (auto r : tree.leaf(static_cast<std::int32_t>(k)))
          groups_[t][reached_leaves(tree, row_span(x, r), dropped)].push_back(r);
      }
      for (auto& [key, members] : groups_[t]) std::sort(members.begin(), members.end());
    }
  }

  std::size_t dropped() const noexcept { return dropped_; }
  const Forest& forest() const noexcept { return *forest_; }
  bool tree_uses_dropped(std::size_t t) const { return uses_dropped_[t]; }

  ProjectedWeights weights(std::span<const double> x, std::span<const std::uint32_t> tree_ids) const {
    forest_->check_query(x);
    ProjectedWeights out;
    auto& acc = detail::Accumulator::local(forest_->num_train());
    const double per_tree = 1.0 / static_cast<double>(tree_ids.size());
    for (auto t : tree_ids) {
      if (uses_dropped_[t]) {
        out.fallback_trees += add_projected(t, x, per_tree, acc);
      } else {
        const Tree& tree = forest_->trees()[t];
        const auto members = tree.leaf(tree.find_leaf(x));
        const double mass = per_tree / static_cast<double>(members.size());
        for (auto r : members) acc.add(r, mass);
      }
    }
    out.weights = acc.take();
    return out;
  }

  ProjectedWeights weights(std::span<const double> x) const {
    return weights(x, forest_->all_tree_ids());
  }

  // w(x) - w_proj(x) over the same trees. Trees without a split on the
  // dropped variable cancel, so only the others are visited.
  ProjectedWeights difference(std::span<const double> x, std::span<const std::uint32_t> tree_ids) const {
    forest_->check_query(x);
    ProjectedWeights out;
    auto& acc = detail::Accumulator::local(forest_->num_train());
    const double per_tree = 1.0 / static_cast<double>(tree_ids.size());
    for (auto t : tree_ids) {
      if (!uses_dropped_[t]) continue;
      const Tree& tree = forest_->trees()[t];
      const auto members = tree.leaf(tree.find_leaf(x));
      const double mass = per_tree / static_cast<double>(members.size());
      for (auto r : members) acc.add(r, mass);
      out.fallback_trees += add_projected(t, x, -per_tree, acc);
    }
    out.weights = acc.take();
    return out;
  }

 private:
  // Adds tree t's projected mass scaled by per_tree; returns 1 when the
  // fallback was used.
  std::size_t add_projected(std::size_t t, std::span<const double> x, double per_tree,
                            detail::Accumulator& acc) const {
    const Tree& tree = forest_->trees()[t];
    const auto reached = reached_leaves(tree, x, dropped_);
    const auto it = groups_[t].find(reached);
    if (it != groups_[t].end()) {
      const double mass = per_tree / static_cast<double>(it->second.size());
      for (auto r : it->second) acc.add(r, mass);
      return 0;
    }
    std::size_t total = 0;
    for (auto leaf : reached) total += tree.leaf(leaf).size();
    const double mass = per_tree / static_cast<double>(total);
    for (auto leaf : reached)
      for (auto r : tree.leaf(leaf)) acc.add(r, mass);
    return 1;
  }

  const Forest* forest_;
  std::size_t dropped_;
  std::vector<std::unordered_map<std::vector<std::int32_t>, std::vector<std::uint32_t>, detail::LeafSetHash>> groups_;
  std::vector<bool> uses_dropped_;
};

inline WeightVector projected_weights(const Forest& forest, std::span<const double> x, std::size_t dropped) {
  return ProjectedForest(forest, dropped).weights(x).weights;
}

// |mu(x) - mu^(-j)(x)|_H^2 = (w - w_proj)^T K (w - w_proj).
inline double projected_embedding_distance(const Forest& forest, std::span<const double> x,
                                           std::size_t dropped, const KernelMatrix& kernel) {
  if (kernel.size() != forest.num_train())
    throw InvalidInput("projected_embedding_distance: kernel matrix size does not match training set");
  forest.check_query(x);
  return kernel.quadratic(ProjectedForest(forest, dropped).difference(x, forest.all_tree_ids()).weights);
}

}  // namespace drfvi
