#pragma once

#include <Eigen/Dense>

#include "steer/network.hpp"

namespace steer {

// Opinions at discrete time k. x holds the regular agents, v the stubborn
// agents (v(k) = v0 + u(k-1) once a control has been applied).
struct OpinionState {
  Eigen::VectorXd x;
  Eigen::VectorXd v;
  int k = 0;
};

// Openness of the regular agents, y in [0,1]^{n_regular}.
struct OpennessVector {
  Eigen::VectorXd y;
};

// Opinion change of the stubborn agents relative to their anchor v0.
struct StubbornControl {
  Eigen::VectorXd u;
};

// Openness-scaled influence split into the regular block A, the stubborn
// block B and the offset d = B v0 + (I - diag(y)) x0, so that
// x(k+1) = A x(k) + B u(k) + d.
struct SystemMatrices {
  Eigen::MatrixXd a;  // n_regular x n_regular
  Eigen::MatrixXd b;  // n_regular x n_stubborn
  Eigen::VectorXd d;  // n_regular
};

// diag(y) as a dense matrix.
Eigen::MatrixXd openness_matrix(const OpennessVector& y);

SystemMatrices assemble(const OpennessVector& y, const SocialNetwork& network,
                        const Eigen::VectorXd& x0, const Eigen::VectorXd& v0);

// One step of the matrix-form dynamics. The stubborn opinions move to
// v0 + u, the value the regular update already sees through B u + d.
OpinionState step_matrix(const OpinionState& state, const StubbornControl& u,
                         const SystemMatrices& mats,
                         const Eigen::VectorXd& v0);

// Reference implementation that walks agents one by one:
//   regular:  x_i' = y_i * sum_j w_ij * o_j + (1 - y_i) * x0_i
//   stubborn: v_i' = v0_i + u_i
// where the stubborn entries in the neighbor sum are the post-decision
// opinions v0 + u. Must agree with step_matrix on all inputs.
OpinionState step_per_agent(const OpinionState& state, const StubbornControl& u,
                            const OpennessVector& y,
                            const SocialNetwork& network,
                            const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& v0);

// Diagonal of H(x,u) = diag(W [x; u+v0] - x0), the per-agent swing between
// full influence and the anchor. For matrices assembled from the same y,
// h.*y + x0 == A x + B u + d identically.
Eigen::VectorXd qp_plant(const OpinionState& state, const StubbornControl& u,
                         const SocialNetwork& network,
                         const Eigen::VectorXd& x0, const Eigen::VectorXd& v0);

}  // namespace steer
