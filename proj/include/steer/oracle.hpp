#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "steer/follower_qp.hpp"
#include "steer/leader_dp.hpp"

namespace steer::oracle {

// Regular lattice over a box: lower + i * resolution per coordinate.
// Deliberately dumb; the point of everything in this header is exhaustive
// certification of the closed-form solvers on small instances. Grid
// evaluation is order-deterministic (lexicographic, first minimum wins).
struct GridSpec {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double resolution = 0.0;

  static constexpr double kMaxPoints = 2e9;

  // Number of lattice points per coordinate; validates the spec and the
  // total-point guard. Throws GridTooLarge / BoundsError.
  std::vector<long long> points_per_dim() const;
};

struct GridOptimum {
  Eigen::VectorXd point;
  double objective = 0.0;
};

// Exhaustive minimization of the QP objective over the grid intersected
// with the [0,1] box. Guarded to size() <= 4.
GridOptimum qp_grid_oracle(const QpProblem& problem, const GridSpec& grid);

// A frozen-matrix control problem: minimize the accumulated stage cost plus
// terminal value over open-loop control sequences of length
// final_time - start_time.
struct DpInstance {
  SystemMatrices mats;
  LeaderWeights weights;
  Eigen::VectorXd x;
  int start_time = 0;
  int final_time = 1;

  int steps() const { return final_time - start_time; }
  int control_dims() const {
    return steps() * static_cast<int>(mats.b.cols());
  }
};

// Cost of one open-loop control sequence (rollout; no recursion involved).
double open_loop_cost(const DpInstance& instance,
                      const std::vector<Eigen::VectorXd>& controls);

struct DpGridOptimum {
  std::vector<Eigen::VectorXd> controls;
  double objective = 0.0;
};

// Exhaustive search over control sequences on the grid (one grid coordinate
// per control entry per step). Guarded to control_dims() <= 6.
DpGridOptimum dp_grid_oracle(const DpInstance& instance, const GridSpec& grid);

// Rollout cost under the gains of backward_recursion with the given variant.
double closed_loop_cost(const DpInstance& instance, S12Variant variant);

// L * D * resolution^2 / 8 with L the largest eigenvalue of the exact
// Hessian of the open-loop cost in the stacked controls: any point is at
// most that far above the true optimum if the optimizer lies on the grid's
// box. Computed per instance, never assumed.
double grid_gap_bound(const DpInstance& instance, const GridSpec& grid);

// ---- seeded instance generators and sweep drivers -------------------------
// Shared by the `oracle` CLI subcommand and the acceptance suite so recorded
// values stay regenerable.

QpProblem random_qp_instance(std::uint64_t seed, int n);

struct QpSweepRecord {
  int size = 0;
  double solver_objective = 0.0;
  double oracle_objective = 0.0;
  double kkt_residual = 0.0;
};

struct QpSweepResult {
  std::vector<QpSweepRecord> records;
  double max_gap = 0.0;  // max over records of oracle - solver (clamped at 0)
  double max_overshoot = 0.0;  // max of solver - oracle
  double max_kkt = 0.0;
};

QpSweepResult run_qp_sweep(std::uint64_t seed, const std::vector<int>& sizes,
                           double resolution);

DpInstance random_dp_instance(std::uint64_t seed, int n_regular,
                              int n_stubborn, int horizon,
                              bool nonzero_terminal);

struct DpSweepRecord {
  int dims = 0;
  double closed_loop = 0.0;
  double oracle_objective = 0.0;
  double gap_bound = 0.0;
  bool within_bound = false;
  // recursion diagnostics for the instance, for invariant reporting
  double s12_asymmetry = 0.0;
  double min_s11_eigenvalue = 0.0;
};

struct DpSweepResult {
  std::vector<DpSweepRecord> records;
  bool all_within = true;
};

DpSweepResult run_dp_sweep(std::uint64_t seed, int n_instances,
                           S12Variant variant);

struct AdjudicationRecord {
  int instance = 0;
  S12Variant variant{};
  double cost = 0.0;
  double excess = 0.0;  // cost - best cost among variants on this instance
};

struct AdjudicationReport {
  std::vector<AdjudicationRecord> records;
  std::vector<double> mean_excess;  // indexed by variant
  S12Variant winner{};
  bool winner_matches_oracle = false;  // winner sandwiched by the grid oracle
  std::string to_text() const;
};

std::vector<DpInstance> make_adjudication_instances(std::uint64_t seed,
                                                    int count);
AdjudicationReport adjudicate_s12_variants(
    const std::vector<DpInstance>& instances);

}  // namespace steer::oracle
