#include "steer/stackelberg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "steer/errors.hpp"

namespace steer {
namespace {

std::string short_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Gradient in u of 0.5(x'Qx + u'Ru) + V(t+1)(Ax + Bu + d), with the value
// blocks taken from a recursion run on the same frozen matrices.
Eigen::VectorXd bellman_gradient(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& u,
                                 const SystemMatrices& mats,
                                 const LeaderWeights& weights,
                                 const ValueFunction& vf, int t) {
  const Eigen::VectorXd x_next = mats.a * x + mats.b * u + mats.d;
  return weights.r * u +
         mats.b.transpose() *
             (vf.s11_at(t + 1) * x_next + vf.s12_at(t + 1) * mats.d);
}

}  // namespace

void GameConfig::validate(int n_regular, int n_stubborn) const {
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  if (gamma <= 0.0) throw ConfigError("gamma must be positive");
  if (max_inner_iterations < 1)
    throw ConfigError("max_inner_iterations must be at least 1");
  if (epsilon <= 0.0) throw InvalidEpsilon("epsilon must be positive");
  if (weights.q.rows() != n_regular || weights.r.rows() != n_stubborn)
    throw DimensionMismatch("weights do not match the network partition");
  weights.validate();
}

bool GameTrace::all_converged() const {
  return std::all_of(converged.begin(), converged.end(),
                     [](bool b) { return b; });
}

StepResult solve_step(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                      const GameConfig& config, const SocialNetwork& network,
                      const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                      const Eigen::VectorXd* ybar_init) {
  const int nr = network.n_regular;
  if (k < 0 || k >= config.horizon)
    throw TimeOutOfRange("solve_step: k outside [0, horizon)");

  StepResult res;
  res.min_s11_eigenvalue = std::numeric_limits<double>::infinity();

  Eigen::VectorXd u_current = v - v0;
  Eigen::VectorXd y_bar =
      ybar_init != nullptr ? *ybar_init : Eigen::VectorXd::Zero(nr);

  OpinionState state{x, v, k};
  QpSolution qp_sol;
  bool converged = false;

  for (int iter = 0; iter < config.max_inner_iterations; ++iter) {
    const QpProblem qp = build_qp(state, {u_current}, x0, v0, network,
                                  config.epsilon, config.coupling);
    qp_sol = solve_box_qp(qp);
    res.inner_iterations = iter + 1;

    const double delta = (y_bar - qp_sol.y).lpNorm<Eigen::Infinity>();
    res.delta_history.push_back(delta);
    if (delta <= config.gamma) {
      converged = true;
      break;
    }

    const SystemMatrices mats =
        assemble({qp_sol.y}, network, x0, v0);
    const DpSolution dp = backward_recursion(mats, config.weights, k,
                                             config.horizon, config.s12_variant);
    res.max_s12_asymmetry =
        std::max(res.max_s12_asymmetry, dp.value.max_s12_asymmetry);
    res.min_s11_eigenvalue =
        std::min(res.min_s11_eigenvalue, dp.value.min_s11_eigenvalue);

    u_current = optimal_control(dp.policy, x, mats.d, k).u;
    state.v = v0 + u_current;
    y_bar = qp_sol.y;
  }

  if (!converged && !config.best_effort) {
    throw FixedPointDivergence(
        "inner loop at k = " + std::to_string(k) + " still moved " +
            short_double(res.delta_history.back()) + " after " +
            std::to_string(res.inner_iterations) + " iterations (gamma = " +
            short_double(config.gamma) + ")",
        k, qp_sol.y, res.delta_history);
  }

  res.converged = converged;
  res.y_star = qp_sol.y;
  res.u_star = u_current;
  res.follower_objective = qp_sol.objective;
  res.qp_residual = qp_sol.kkt_residual;
  if (!converged) {
    // the cap-exit control is the response to the last openness, so the
    // stored residual no longer describes the returned pair
    const QpProblem qp = build_qp({x, v0 + u_current, k}, {u_current}, x0, v0,
                                  network, config.epsilon, config.coupling);
    res.qp_residual = kkt_residual(qp, res.y_star);
    res.follower_objective = qp_objective(qp, res.y_star);
  }

  // Value function at the converged openness, for the reported cost-to-go
  // and the leader-side certificate.
  const SystemMatrices mats = assemble({res.y_star}, network, x0, v0);
  const DpSolution dp = backward_recursion(mats, config.weights, k,
                                           config.horizon, config.s12_variant);
  res.max_s12_asymmetry =
      std::max(res.max_s12_asymmetry, dp.value.max_s12_asymmetry);
  res.min_s11_eigenvalue =
      std::min(res.min_s11_eigenvalue, dp.value.min_s11_eigenvalue);
  res.leader_value = value_at(dp.value, x, mats.d, k);
  res.dp_residual =
      bellman_gradient(x, res.u_star, mats, config.weights, dp.value, k)
          .norm();
  return res;
}

GameTrace simulate(const GameConfig& config, const SocialNetwork& network,
                   const Eigen::VectorXd& x0, const Eigen::VectorXd& v0) {
  config.validate(network.n_regular, network.n_stubborn());
  if (x0.size() != network.n_regular || v0.size() != network.n_stubborn())
    throw DimensionMismatch("x0/v0 lengths do not match the network");

  GameTrace trace;
  trace.min_s11_eigenvalue = std::numeric_limits<double>::infinity();
  const AnchorReport anchors = validate_anchors(network, v0);
  if (!anchors.ok)
    trace.warnings.push_back("anchor check failed: " + anchors.detail);

  Eigen::VectorXd x = x0;
  Eigen::VectorXd v = v0;
  trace.x.push_back(x);
  trace.v.push_back(v);

  for (int k = 0; k < config.horizon; ++k) {
    const Eigen::VectorXd* ybar_init =
        (config.warm_start_inner && k > 0) ? &trace.y.back() : nullptr;
    const StepResult res =
        solve_step(k, x, v, config, network, x0, v0, ybar_init);

    trace.u.push_back(res.u_star);
    trace.y.push_back(res.y_star);
    trace.inner_iterations.push_back(res.inner_iterations);
    trace.leader_value.push_back(res.leader_value);
    trace.follower_objective.push_back(res.follower_objective);
    trace.qp_residual.push_back(res.qp_residual);
    trace.dp_residual.push_back(res.dp_residual);
    trace.converged.push_back(res.converged);
    trace.max_s12_asymmetry =
        std::max(trace.max_s12_asymmetry, res.max_s12_asymmetry);
    trace.min_s11_eigenvalue =
        std::min(trace.min_s11_eigenvalue, res.min_s11_eigenvalue);
    if (!res.converged)
      trace.warnings.push_back("step " + std::to_string(k) +
                               " accepted a non-converged iterate");

    const SystemMatrices mats = assemble({res.y_star}, network, x0, v0);
    const OpinionState next =
        step_matrix({x, v, k}, {res.u_star}, mats, v0);
    x = next.x;
    v = next.v;
    trace.x.push_back(x);
    trace.v.push_back(v);
  }
  return trace;
}

BestResponseResiduals mutual_best_response_residual(
    int k, const Eigen::VectorXd& x, const Eigen::VectorXd& y_star,
    const Eigen::VectorXd& u_star, const GameConfig& config,
    const SocialNetwork& network, const Eigen::VectorXd& x0,
    const Eigen::VectorXd& v0) {
  BestResponseResiduals out;

  const OpinionState state{x, v0 + u_star, k};
  const QpProblem qp = build_qp(state, {u_star}, x0, v0, network,
                                config.epsilon, config.coupling);
  out.qp_residual = kkt_residual(qp, y_star);

  const SystemMatrices mats = assemble({y_star}, network, x0, v0);
  const DpSolution dp = backward_recursion(mats, config.weights, k,
                                           config.horizon, config.s12_variant);
  out.dp_residual =
      bellman_gradient(x, u_star, mats, config.weights, dp.value, k).norm();
  return out;
}

}  // namespace steer
