#pragma once

#include <Eigen/Dense>

#include <vector>

#include "tcmarket/errors.hpp"

namespace tcmarket {

// Finite event tree over times 0..T.  Node ids are contiguous 0..N-1 with the
// root at id 0; every leaf sits at time T.  `cond_prob` is the probability of
// reaching a node from its parent; `prob` is the unconditional path
// probability (product along the path), always strictly positive.
struct EventTree {
  struct Node {
    int id = 0;
    int time = 0;
    int parent = -1;  // -1 for the root
    double cond_prob = 1.0;
    double prob = 1.0;
    std::vector<int> children;
  };

  std::vector<Node> nodes;
  int horizon = 0;  // T

  int size() const { return static_cast<int>(nodes.size()); }
  bool is_leaf(int id) const { return nodes[id].children.empty(); }
  const std::vector<int>& leaves() const { return leaves_; }

  // Ids of all nodes in the subtree rooted at `id`, preorder.
  std::vector<int> subtree(int id) const;

  // Validates structure (root at id 0 and time 0, parent times, children's
  // conditional probabilities summing to 1 within 1e-12, all leaves at the
  // common horizon, probabilities in (0,1]), fills children lists,
  // unconditional probabilities, and the leaf index.  Throws Error
  // ("ValidationError") naming the first violated invariant and node id.
  static EventTree build(std::vector<Node> nodes);

private:
  std::vector<int> leaves_;
};

// Probability-weighted average of `values` over the children of `node`.
// Throws Error("LeafNode") when node has no children.
Eigen::VectorXd conditional_expectation(const EventTree& tree,
                                        const std::vector<Eigen::VectorXd>& values, int node);
double conditional_expectation(const EventTree& tree, const std::vector<double>& values, int node);

}  // namespace tcmarket
