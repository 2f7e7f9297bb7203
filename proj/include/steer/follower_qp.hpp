#pragma once

#include <Eigen/Dense>
#include <vector>

#include "steer/dynamics.hpp"
#include "steer/network.hpp"

namespace steer {

// How the next-step opinions couple inside the follower objective:
// kIdentity penalizes sum_i x_i(k+1)^2, kAllOnes penalizes (sum_i x_i(k+1))^2.
enum class Coupling { kIdentity, kAllOnes };

// min 0.5 y'P y + f y  over the box [0,1]^n, written as Z y <= b.
// P = H'MH + eps*I is positive definite for eps > 0, with M the coupling
// matrix (I or the all-ones matrix) and H the diagonal plant from qp_plant.
struct QpProblem {
  Eigen::MatrixXd p;
  Eigen::RowVectorXd f;
  double epsilon = 0.0;
  Coupling coupling = Coupling::kIdentity;

  int size() const { return static_cast<int>(p.rows()); }
  Eigen::MatrixXd constraint_z() const;  // [I; -I], 2n x n
  Eigen::VectorXd constraint_b() const;  // [1...1, 0...0]
};

struct QpSolution {
  Eigen::VectorXd y;
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::vector<int> active_lower;  // coordinates pinned at 0
  std::vector<int> active_upper;  // coordinates pinned at 1
};

// Assembles P and f from the diagonal plant h and the anchor x0.
QpProblem make_qp(const Eigen::VectorXd& h_diag, const Eigen::VectorXd& x0,
                  double epsilon, Coupling coupling);

// Full pipeline from the current state and leader control.
QpProblem build_qp(const OpinionState& state, const StubbornControl& u,
                   const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                   const SocialNetwork& network, double epsilon,
                   Coupling coupling);

double qp_objective(const QpProblem& problem, const Eigen::VectorXd& y);

// Worst per-coordinate KKT violation of y for the box problem: |g_i| on
// interior coordinates, max(0,-g_i) at the lower bound, max(0,g_i) at the
// upper bound, where g = P y + f'.
double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& y);

// Primal active-set solver for the strictly convex box QP. Returns the
// unique minimizer; bound values in the solution are exact 0/1. A warm
// start, when given, is projected onto the box and seeds the working set.
// Throws NotPositiveDefinite or MaxIterations.
QpSolution solve_box_qp(const QpProblem& problem, double tolerance = 1e-10,
                        const Eigen::VectorXd* warm_start = nullptr);

}  // namespace steer
