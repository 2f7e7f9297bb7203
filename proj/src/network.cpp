#include "steer/network.hpp"

#include <algorithm>
#include <map>

#include "steer/errors.hpp"

namespace steer {
namespace {

void check_edge(const Edge& e, int n_agents) {
  if (e.from < 1 || e.from > n_agents || e.to < 1 || e.to > n_agents) {
    throw InvalidEdge("edge (" + std::to_string(e.from) + "," +
                      std::to_string(e.to) + ") has an endpoint outside 1.." +
                      std::to_string(n_agents));
  }
  if (e.from == e.to) {
    throw PartitionError(
        "agent " + std::to_string(e.to) +
        " has a self-loop; self-influence is the openness anchor, not an "
        "edge");
  }
}

// Partition agents by in-degree and relabel regular-first. Returns the
// network with in_neighbors filled and weight_matrix zeroed.
SocialNetwork partition_and_relabel(
    const std::vector<std::set<int>>& original_in, int n_agents) {
  std::vector<int> regular, stubborn;
  for (int id = 1; id <= n_agents; ++id) {
    if (original_in[id].empty())
      stubborn.push_back(id);
    else
      regular.push_back(id);
  }
  if (regular.empty()) throw EmptyGraph("graph has no regular agents");

  SocialNetwork net;
  net.n_agents = n_agents;
  net.n_regular = static_cast<int>(regular.size());
  net.internal_to_original.reserve(n_agents);
  net.original_to_internal.assign(n_agents + 1, -1);
  for (int id : regular) net.internal_to_original.push_back(id);
  for (int id : stubborn) net.internal_to_original.push_back(id);
  for (int i = 0; i < n_agents; ++i)
    net.original_to_internal[net.internal_to_original[i]] = i;

  net.in_neighbors.resize(net.n_regular);
  for (int i = 0; i < net.n_regular; ++i) {
    for (int j : original_in[regular[i]])
      net.in_neighbors[i].insert(net.original_to_internal[j]);
  }
  net.weight_matrix = Eigen::MatrixXd::Zero(net.n_regular, n_agents);
  return net;
}

}  // namespace

SocialNetwork build_network(const std::vector<Edge>& edges, int n_agents) {
  if (n_agents < 1) throw EmptyGraph("network needs at least one agent");
  std::vector<std::set<int>> original_in(n_agents + 1);
  for (const Edge& e : edges) {
    check_edge(e, n_agents);
    original_in[e.to].insert(e.from);
  }
  SocialNetwork net = partition_and_relabel(original_in, n_agents);
  for (int i = 0; i < net.n_regular; ++i) {
    const double w = 1.0 / static_cast<double>(net.in_neighbors[i].size());
    for (int j : net.in_neighbors[i]) net.weight_matrix(i, j) = w;
  }
  return net;
}

SocialNetwork build_network_explicit(const std::vector<Edge>& edges,
                                     const std::vector<double>& edge_weights,
                                     int n_agents) {
  if (edges.size() != edge_weights.size())
    throw DimensionMismatch("one weight per edge required");
  if (n_agents < 1) throw EmptyGraph("network needs at least one agent");

  std::vector<std::set<int>> original_in(n_agents + 1);
  std::map<std::pair<int, int>, double> weight_of;
  for (std::size_t m = 0; m < edges.size(); ++m) {
    const Edge& e = edges[m];
    check_edge(e, n_agents);
    if (edge_weights[m] <= 0.0)
      throw ConfigError("edge (" + std::to_string(e.from) + "," +
                        std::to_string(e.to) + ") has non-positive weight");
    original_in[e.to].insert(e.from);
    weight_of[{e.from, e.to}] = edge_weights[m];
  }

  SocialNetwork net = partition_and_relabel(original_in, n_agents);
  for (int i = 0; i < net.n_regular; ++i) {
    const int to = net.internal_to_original[i];
    double row_sum = 0.0;
    for (int j : net.in_neighbors[i]) {
      const double w = weight_of.at({net.internal_to_original[j], to});
      net.weight_matrix(i, j) = w;
      row_sum += w;
    }
    if (std::abs(row_sum - 1.0) > 1e-12)
      throw ConfigError("influence weights of agent " + std::to_string(to) +
                        " sum to " + std::to_string(row_sum) +
                        ", expected 1");
  }
  return net;
}

AnchorReport validate_anchors(const SocialNetwork& network,
                              const Eigen::VectorXd& v0) {
  if (v0.size() != network.n_stubborn())
    throw DimensionMismatch("anchor vector length does not match the number "
                            "of stubborn agents");
  if (network.n_stubborn() < 2)
    return {false, "need at least two stubborn agents, have " +
                       std::to_string(network.n_stubborn())};
  if (v0.minCoeff() >= 0.0)
    return {false, "no stubborn agent anchored below 0"};
  if (v0.maxCoeff() <= 0.0)
    return {false, "no stubborn agent anchored above 0"};
  return {true, ""};
}

}  // namespace steer
