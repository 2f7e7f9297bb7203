#include "steer/dynamics.hpp"

#include "steer/errors.hpp"

namespace steer {
namespace {

void check_openness(const Eigen::VectorXd& y, int n_regular) {
  if (y.size() != n_regular)
    throw DimensionMismatch("openness vector has length " +
                            std::to_string(y.size()) + ", expected " +
                            std::to_string(n_regular));
  if (y.size() > 0 && (y.minCoeff() < -1e-12 || y.maxCoeff() > 1.0 + 1e-12))
    throw BoundsError("openness values must lie in [0,1]");
}

void check_lengths(const SocialNetwork& net, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& u_or_v0, const char* what) {
  if (x.size() != net.n_regular)
    throw DimensionMismatch(std::string(what) + ": regular vector has length " +
                            std::to_string(x.size()) + ", expected " +
                            std::to_string(net.n_regular));
  if (u_or_v0.size() != net.n_stubborn())
    throw DimensionMismatch(std::string(what) +
                            ": stubborn vector has length " +
                            std::to_string(u_or_v0.size()) + ", expected " +
                            std::to_string(net.n_stubborn()));
}

}  // namespace

Eigen::MatrixXd openness_matrix(const OpennessVector& y) {
  return Eigen::MatrixXd(y.y.asDiagonal());
}

SystemMatrices assemble(const OpennessVector& y, const SocialNetwork& network,
                        const Eigen::VectorXd& x0, const Eigen::VectorXd& v0) {
  const int nr = network.n_regular;
  check_openness(y.y, nr);
  check_lengths(network, x0, v0, "assemble");

  SystemMatrices mats;
  // [A B] = diag(y) * W, column-partitioned at the regular/stubborn boundary.
  const Eigen::MatrixXd scaled =
      y.y.asDiagonal() * network.weight_matrix;
  mats.a = scaled.leftCols(nr);
  mats.b = scaled.rightCols(network.n_stubborn());
  mats.d = mats.b * v0 +
           (Eigen::VectorXd::Ones(nr) - y.y).cwiseProduct(x0);
  return mats;
}

OpinionState step_matrix(const OpinionState& state, const StubbornControl& u,
                         const SystemMatrices& mats,
                         const Eigen::VectorXd& v0) {
  if (state.x.size() != mats.a.rows() || u.u.size() != mats.b.cols() ||
      v0.size() != u.u.size())
    throw DimensionMismatch("step_matrix: inconsistent dimensions");
  OpinionState next;
  next.x = mats.a * state.x + mats.b * u.u + mats.d;
  next.v = v0 + u.u;
  next.k = state.k + 1;
  return next;
}

OpinionState step_per_agent(const OpinionState& state, const StubbornControl& u,
                            const OpennessVector& y,
                            const SocialNetwork& network,
                            const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& v0) {
  const int nr = network.n_regular;
  check_openness(y.y, nr);
  check_lengths(network, state.x, state.v, "step_per_agent");
  check_lengths(network, x0, u.u, "step_per_agent");

  const Eigen::VectorXd v_next = v0 + u.u;
  OpinionState next;
  next.x.resize(nr);
  for (int i = 0; i < nr; ++i) {
    double influence = 0.0;
    for (int j : network.in_neighbors[i]) {
      const double opinion =
          j < nr ? state.x(j) : v_next(j - nr);
      influence += network.weight_matrix(i, j) * opinion;
    }
    next.x(i) = y.y(i) * influence + (1.0 - y.y(i)) * x0(i);
  }
  next.v = v_next;
  next.k = state.k + 1;
  return next;
}

Eigen::VectorXd qp_plant(const OpinionState& state, const StubbornControl& u,
                         const SocialNetwork& network,
                         const Eigen::VectorXd& x0,
                         const Eigen::VectorXd& v0) {
  check_lengths(network, state.x, u.u, "qp_plant");
  check_lengths(network, x0, v0, "qp_plant");
  Eigen::VectorXd stacked(network.n_agents);
  stacked.head(network.n_regular) = state.x;
  stacked.tail(network.n_stubborn()) = u.u + v0;
  return network.weight_matrix * stacked - x0;
}

}  // namespace steer
