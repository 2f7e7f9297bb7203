#pragma once

#include <Eigen/Dense>
#include <set>
#include <string>
#include <vector>

namespace steer {

// Directed edge: `from` influences `to`.
struct Edge {
  int from = 0;
  int to = 0;
};

// A social graph split into regular agents (nonempty in-neighborhood) and
// stubborn agents (no in-edges), with the row-stochastic influence matrix W.
//
// Agent ids are 1-based in every external format. Internally agents are
// relabeled so regular agents occupy rows/columns 0..n_regular-1 and stubborn
// agents follow; the permutation is kept so i/o can stay in original ids.
// Instances are immutable after construction and safe to share across
// concurrently running simulations.
struct SocialNetwork {
  int n_agents = 0;
  int n_regular = 0;
  std::vector<std::set<int>> in_neighbors;  // internal ids, regular rows only
  Eigen::MatrixXd weight_matrix;            // n_regular x n_agents, rows sum to 1
  std::vector<int> internal_to_original;    // size n_agents, values 1..N
  std::vector<int> original_to_internal;    // size n_agents + 1, slot 0 unused

  int n_stubborn() const { return n_agents - n_regular; }
};

// Builds the partition and W with equal weights 1/|N_i| per regular row.
// Self-loops are rejected: self-influence is modeled by the openness anchor,
// not an edge. Throws InvalidEdge, PartitionError, EmptyGraph.
SocialNetwork build_network(const std::vector<Edge>& edges, int n_agents);

// Same graph with caller-supplied per-edge weights (testing escape hatch).
// Each weight must be positive and each regular row must sum to 1 within
// 1e-12.
SocialNetwork build_network_explicit(const std::vector<Edge>& edges,
                                     const std::vector<double>& edge_weights,
                                     int n_agents);

struct AnchorReport {
  bool ok = false;
  std::string detail;
};

// The stubborn anchors must straddle the consensus target: at least two
// stubborn agents with min(v0) < 0 < max(v0). Reports instead of throwing so
// callers can decide whether a violation is fatal.
AnchorReport validate_anchors(const SocialNetwork& network,
                              const Eigen::VectorXd& v0);

}  // namespace steer
