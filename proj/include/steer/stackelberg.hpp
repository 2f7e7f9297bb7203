#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "steer/follower_qp.hpp"
#include "steer/leader_dp.hpp"
#include "steer/network.hpp"

namespace steer {

// Per-step game parameters. gamma is the fixed-point tolerance on
// |y_bar - y*|_inf that terminates the inner loop.
struct GameConfig {
  int horizon = 1;
  double gamma = 1e-6;
  int max_inner_iterations = 100;
  double epsilon = 1.0;
  Coupling coupling = Coupling::kIdentity;
  LeaderWeights weights;
  S12Variant s12_variant = S12Variant::kStateClosedLoop;
  bool warm_start_inner = false;  // seed y_bar with the previous step's y*
  bool best_effort = false;       // keep the last iterate at the cap

  void validate(int n_regular, int n_stubborn) const;
};

// Outcome of one time step's inner fixed-point loop.
struct StepResult {
  Eigen::VectorXd y_star;
  Eigen::VectorXd u_star;
  int inner_iterations = 0;  // QP solves performed
  bool converged = true;
  double leader_value = 0.0;       // V_k at (x, d(y*))
  double follower_objective = 0.0; // QP objective at y*
  double qp_residual = 0.0;        // follower KKT residual at (y*, u*)
  double dp_residual = 0.0;        // |Bellman gradient|_2 at (u*, y*)
  double max_s12_asymmetry = 0.0;  // worst over the step's recursions
  double min_s11_eigenvalue = 0.0;
  std::vector<double> delta_history;
};

struct GameTrace {
  std::vector<Eigen::VectorXd> x;  // length horizon + 1
  std::vector<Eigen::VectorXd> v;  // length horizon + 1
  std::vector<Eigen::VectorXd> u;  // length horizon
  std::vector<Eigen::VectorXd> y;  // length horizon
  std::vector<int> inner_iterations;
  std::vector<double> leader_value;
  std::vector<double> follower_objective;
  std::vector<double> qp_residual;
  std::vector<double> dp_residual;
  std::vector<bool> converged;

  double max_s12_asymmetry = 0.0;
  double min_s11_eigenvalue = 0.0;
  std::vector<std::string> warnings;

  int horizon() const { return static_cast<int>(u.size()); }
  bool all_converged() const;
};

// One round of the per-step game at time k for current opinions (x, v):
// alternate follower QP solves and leader backward sweeps until the openness
// iterate moves less than gamma. The carried-in v supplies the control
// candidate (u = v - v0) for the first QP build; y_bar starts at zero unless
// ybar_init is given. Throws FixedPointDivergence at the iteration cap unless
// config.best_effort is set.
StepResult solve_step(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                      const GameConfig& config, const SocialNetwork& network,
                      const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                      const Eigen::VectorXd* ybar_init = nullptr);

// Full horizon run: solve_step at k = 0..horizon-1, advancing the opinions
// with the converged pair after each step. An anchor violation is downgraded
// to a trace warning here; the validate CLI path treats it as a failure.
GameTrace simulate(const GameConfig& config, const SocialNetwork& network,
                   const Eigen::VectorXd& x0, const Eigen::VectorXd& v0);

struct BestResponseResiduals {
  double qp_residual = 0.0;
  double dp_residual = 0.0;
};

// Equilibrium certificate for a candidate pair: the follower KKT residual of
// y_star given u_star, and the 2-norm of the leader's Bellman gradient at
// u_star given y_star.
BestResponseResiduals mutual_best_response_residual(
    int k, const Eigen::VectorXd& x, const Eigen::VectorXd& y_star,
    const Eigen::VectorXd& u_star, const GameConfig& config,
    const SocialNetwork& network, const Eigen::VectorXd& x0,
    const Eigen::VectorXd& v0);

}  // namespace steer
