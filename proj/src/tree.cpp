#include "tcmarket/tree.hpp"

#include <cmath>
#include <string>

namespace tcmarket {
namespace {

[[noreturn]] void invalid(const std::string& what, int node) {
  fail("ValidationError", what + " (node " + std::to_string(node) + ")");
}

}  // namespace

EventTree EventTree::build(std::vector<Node> in) {
  EventTree t;
  const int n = static_cast<int>(in.size());
  if (n == 0) fail("ValidationError", "tree has no nodes");
  for (int i = 0; i < n; ++i) {
    if (in[i].id != i) invalid("node ids must be contiguous and sorted", in[i].id);
    in[i].children.clear();
  }
  if (in[0].parent != -1 || in[0].time != 0) invalid("root must have id 0, time 0, no parent", 0);

  for (int i = 1; i < n; ++i) {
    int p = in[i].parent;
    if (p < 0 || p >= n || p == i) invalid("bad parent id", i);
    if (in[i].time != in[p].time + 1) invalid("node time must be parent time + 1", i);
    in[p].children.push_back(i);
  }
  for (int i = 0; i < n; ++i) {
    double q = in[i].cond_prob;
    if (!(q > 0.0) || !(q <= 1.0) || !std::isfinite(q))
      invalid("conditional probability must lie in (0,1]", i);
  }
  if (in[0].cond_prob != 1.0) invalid("root probability must be 1", 0);
  for (int i = 0; i < n; ++i) {
    if (in[i].children.empty()) continue;
    double sum = 0.0;
    for (int c : in[i].children) sum += in[c].cond_prob;
    if (std::abs(sum - 1.0) > 1e-12)
      invalid("children probabilities sum to " + std::to_string(sum) + ", not 1", i);
  }

  // Unconditional probabilities and the common horizon.
  in[0].prob = 1.0;
  int horizon = 0;
  for (int i = 1; i < n; ++i) {
    in[i].prob = in[in[i].parent].prob * in[i].cond_prob;
    if (!(in[i].prob > 0.0)) invalid("unconditional probability underflows to 0", i);
    horizon = std::max(horizon, in[i].time);
  }
  for (int i = 0; i < n; ++i)
    if (in[i].children.empty() && in[i].time != horizon)
      invalid("leaf not at the terminal time", i);

  t.nodes = std::move(in);
  t.horizon = horizon;
  for (int i = 0; i < n; ++i)
    if (t.nodes[i].children.empty()) t.leaves_.push_back(i);
  return t;
}

std::vector<int> EventTree::subtree(int id) const {
  std::vector<int> out, stack{id};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    out.push_back(v);
    for (auto it = nodes[v].children.rbegin(); it != nodes[v].children.rend(); ++it)
      stack.push_back(*it);
  }
  return out;
}

Eigen::VectorXd conditional_expectation(const EventTree& tree,
                                        const std::vector<Eigen::VectorXd>& values, int node) {
  if (tree.is_leaf(node)) fail("LeafNode", "node " + std::to_string(node) + " has no children");
  const auto& kids = tree.nodes[node].children;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(values[kids.front()].size());
  for (int c : kids) acc += tree.nodes[c].cond_prob * values[c];
  return acc;
}

double conditional_expectation(const EventTree& tree, const std::vector<double>& values, int node) {
  if (tree.is_leaf(node)) fail("LeafNode", "node " + std::to_string(node) + " has no children");
  double acc = 0.0;
  for (int c : tree.nodes[node].children) acc += tree.nodes[c].cond_prob * values[c];
  return acc;
}

}  // namespace tcmarket
