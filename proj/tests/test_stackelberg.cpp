#include <doctest.h>

#include <cmath>
#include <cstring>

#include "steer/errors.hpp"
#include "steer/scenario.hpp"
#include "steer/stackelberg.hpp"
#include "test_support.hpp"

using namespace steer;

namespace {

GameConfig basic_config(int nr, int ns, int horizon) {
  GameConfig cfg;
  cfg.horizon = horizon;
  cfg.gamma = 1e-8;
  cfg.epsilon = 1.0;
  cfg.weights = LeaderWeights::diagonal(nr, ns, 0.1, 1.0);
  return cfg;
}

SocialNetwork bipartite22() {
  return build_network({{3, 1}, {4, 1}, {3, 2}, {4, 2}}, 4);
}

}  // namespace

TEST_CASE("loose tolerance exits after a single qp solve") {
  const SocialNetwork net = bipartite22();
  const Eigen::Vector2d x0(0, 0), v0(-1, 1);
  GameConfig cfg = basic_config(2, 2, 3);
  cfg.gamma = 1.0;

  // symmetric anchors make the plant vanish at x = x0 = 0, so y* = 0 and the
  // first convergence check already passes with the carried-in control
  const StepResult res = solve_step(0, x0, v0, cfg, net, x0, v0);
  CHECK(res.inner_iterations == 1);
  CHECK(res.converged);
  CHECK(res.y_star.isZero(0));
  CHECK(res.u_star.isZero(0));
  CHECK(res.delta_history.size() == 1);
}

TEST_CASE("tight tolerance yields a mutual best response") {
  const SocialNetwork net = bipartite22();
  const Eigen::Vector2d x0(0.6, -0.3), v0(-1, 1);
  const GameConfig cfg = basic_config(2, 2, 4);

  const StepResult res = solve_step(0, x0, v0, cfg, net, x0, v0);
  CHECK(res.converged);
  CHECK(res.qp_residual <= 1e-6);
  CHECK(res.dp_residual <= 1e-6);

  const BestResponseResiduals check = mutual_best_response_residual(
      0, x0, res.y_star, res.u_star, cfg, net, x0, v0);
  CHECK(check.qp_residual <= 1e-6);
  CHECK(check.dp_residual <= 1e-6);
}

TEST_CASE("random pairs are far from equilibrium") {
  const SocialNetwork net = bipartite22();
  const Eigen::Vector2d x0(0.6, -0.3), v0(-1, 1);
  const GameConfig cfg = basic_config(2, 2, 4);

  const BestResponseResiduals bad = mutual_best_response_residual(
      0, x0, Eigen::Vector2d(0.9, 0.1), Eigen::Vector2d(1.5, -2.0), cfg, net,
      x0, v0);
  CHECK(std::max(bad.qp_residual, bad.dp_residual) > 0.01);
}

TEST_CASE("perturbing the control moves the bellman gradient") {
  const SocialNetwork net = bipartite22();
  const Eigen::Vector2d x0(0.6, -0.3), v0(-1, 1);
  const GameConfig cfg = basic_config(2, 2, 4);
  const StepResult res = solve_step(0, x0, v0, cfg, net, x0, v0);

  Eigen::VectorXd delta(2);
  delta << 1.0, -0.5;
  delta *= 0.1 / delta.norm();
  const BestResponseResiduals out = mutual_best_response_residual(
      0, x0, res.y_star, res.u_star + delta, cfg, net, x0, v0);
  // curvature in u is at least R, so a 0.1 push moves the gradient by 0.1
  CHECK(out.dp_residual >= 0.1 * 1.0 - 1e-9);
}

TEST_CASE("indifferent leader keeps anchors still") {
  const SocialNetwork net = bipartite22();
  const Eigen::Vector2d x0(0.4, -0.1), v0(-1, 1);
  GameConfig cfg = basic_config(2, 2, 1);
  cfg.weights.q.setZero();

  const GameTrace trace = simulate(cfg, net, x0, v0);
  CHECK(trace.x.size() == 2);
  CHECK(trace.u.size() == 1);
  CHECK(trace.u[0].isZero(0));
  CHECK(trace.v[1].isApprox(v0));
  CHECK(trace.leader_value[0] == 0.0);
}

TEST_CASE("symmetric scenario keeps the mean at zero") {
  const SocialNetwork net = build_network(generate_ring_topology(6, 2, 2), 8);
  X0Spec spec;
  spec.mode = X0Spec::Mode::kLinspace;
  const Eigen::VectorXd x0 = generate_x0(spec, 6);
  const Eigen::Vector2d v0(-1, 1);
  const GameConfig cfg = basic_config(6, 2, 5);

  const GameTrace trace = simulate(cfg, net, x0, v0);
  for (const Eigen::VectorXd& x : trace.x)
    CHECK(std::abs(x.mean()) <= 1e-9);
  for (const Eigen::VectorXd& y : trace.y) {
    CHECK(y.minCoeff() >= 0.0);
    CHECK(y.maxCoeff() <= 1.0);
    CHECK(std::abs(y(0) - y(5)) <= 1e-9);  // reversal symmetry
  }
}

TEST_CASE("converged openness beats alternatives on the true game cost") {
  Rng rng(611);
  const SocialNetwork net = build_network(generate_ring_topology(5, 2, 2), 7);
  const Eigen::VectorXd x0 = rng.vector(5, -1, 1);
  const Eigen::Vector2d v0(-1, 1);
  const GameConfig cfg = basic_config(5, 2, 3);

  const GameTrace trace = simulate(cfg, net, x0, v0);
  for (int k = 0; k < trace.horizon(); ++k) {
    // follower cost via the actual dynamics, not the qp rewrite
    auto follower_cost = [&](const Eigen::VectorXd& y) {
      const SystemMatrices mats = assemble({y}, net, x0, v0);
      const OpinionState next =
          step_matrix({trace.x[k], trace.v[k], k}, {trace.u[k]}, mats, v0);
      return 0.5 * (next.x.squaredNorm() +
                    cfg.epsilon * y.squaredNorm());
    };
    const double at_star = follower_cost(trace.y[k]);
    for (int probe = 0; probe < 20; ++probe)
      CHECK(at_star <= follower_cost(rng.vector(5, 0, 1)) + 1e-10);
  }
}

TEST_CASE("trace replays through the per-agent stepper") {
  Rng rng(333);
  const SocialNetwork net = testing::random_network(rng, 5, 2);
  const Eigen::VectorXd x0 = rng.vector(5, -1, 1);
  const Eigen::Vector2d v0(-0.8, 0.9);
  const GameConfig cfg = basic_config(5, 2, 4);

  const GameTrace trace = simulate(cfg, net, x0, v0);
  OpinionState state{x0, v0, 0};
  for (int k = 0; k < trace.horizon(); ++k) {
    state = step_per_agent(state, {trace.u[k]}, {trace.y[k]}, net, x0, v0);
    CHECK((state.x - trace.x[k + 1]).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK((state.v - trace.v[k + 1]).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("identical runs are bit identical") {
  const SocialNetwork net = build_network(generate_ring_topology(6, 2, 2), 8);
  X0Spec spec;
  spec.mode = X0Spec::Mode::kUniform;
  spec.seed = 5;
  const Eigen::VectorXd x0 = generate_x0(spec, 6);
  const Eigen::Vector2d v0(-1, 1);
  const GameConfig cfg = basic_config(6, 2, 4);

  const GameTrace a = simulate(cfg, net, x0, v0);
  const GameTrace b = simulate(cfg, net, x0, v0);
  for (std::size_t k = 0; k < a.x.size(); ++k)
    CHECK(memcmp(a.x[k].data(), b.x[k].data(), sizeof(double) * a.x[k].size())
          == 0);
  for (int k = 0; k < a.horizon(); ++k) {
    CHECK(a.leader_value[k] == b.leader_value[k]);
    CHECK(memcmp(a.y[k].data(), b.y[k].data(), sizeof(double) * 6) == 0);
  }
}

TEST_CASE("iteration cap raises or marks depending on policy") {
  const SocialNetwork net = bipartite22();
  const Eigen::Vector2d x0(0.6, -0.3), v0(-1, 1);
  GameConfig cfg = basic_config(2, 2, 3);
  cfg.gamma = 1e-14;
  cfg.max_inner_iterations = 1;

  CHECK_THROWS_AS(solve_step(0, x0, v0, cfg, net, x0, v0),
                  FixedPointDivergence);
  try {
    solve_step(0, x0, v0, cfg, net, x0, v0);
  } catch (const FixedPointDivergence& e) {
    CHECK(e.time_step == 0);
    CHECK(e.delta_history.size() == 1);
    CHECK(e.last_openness.size() == 2);
  }

  cfg.best_effort = true;
  const GameTrace trace = simulate(cfg, net, x0, v0);
  CHECK_FALSE(trace.all_converged());
  bool marked = false;
  for (const std::string& w : trace.warnings)
    marked = marked || w.find("non-converged") != std::string::npos;
  CHECK(marked);
}

TEST_CASE("warm started inner loop still lands in the box") {
  const SocialNetwork net = build_network(generate_ring_topology(6, 2, 2), 8);
  X0Spec spec;
  spec.mode = X0Spec::Mode::kUniform;
  spec.seed = 12;
  const Eigen::VectorXd x0 = generate_x0(spec, 6);
  const Eigen::Vector2d v0(-1, 1);
  GameConfig cfg = basic_config(6, 2, 5);
  cfg.warm_start_inner = true;

  const GameTrace trace = simulate(cfg, net, x0, v0);
  CHECK(trace.all_converged());
  for (const Eigen::VectorXd& y : trace.y) {
    CHECK(y.minCoeff() >= 0.0);
    CHECK(y.maxCoeff() <= 1.0);
  }
}

TEST_CASE("config validation rejects bad parameters") {
  GameConfig cfg = basic_config(2, 2, 3);
  cfg.gamma = 0.0;
  CHECK_THROWS_AS(cfg.validate(2, 2), ConfigError);

  cfg = basic_config(2, 2, 0);
  CHECK_THROWS_AS(cfg.validate(2, 2), ConfigError);

  cfg = basic_config(2, 2, 3);
  cfg.weights.r.setZero();
  CHECK_THROWS_AS(cfg.validate(2, 2), NotPositiveDefinite);

  cfg = basic_config(3, 2, 3);
  CHECK_THROWS_AS(cfg.validate(2, 2), DimensionMismatch);
}

TEST_CASE("anchor violation only warns in simulate") {
  const SocialNetwork net = bipartite22();
  const Eigen::Vector2d x0(0.2, -0.2), v0(0.5, 1.0);
  const GameConfig cfg = basic_config(2, 2, 2);
  const GameTrace trace = simulate(cfg, net, x0, v0);
  REQUIRE_FALSE(trace.warnings.empty());
  CHECK(trace.warnings.front().find("anchor") != std::string::npos);
}
