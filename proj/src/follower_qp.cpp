#include "steer/follower_qp.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "steer/errors.hpp"

namespace steer {
namespace {

constexpr double kActivityTol = 1e-9;

enum class BoundState { kFree, kLower, kUpper };

Eigen::VectorXd gradient(const QpProblem& qp, const Eigen::VectorXd& y) {
  return qp.p * y + qp.f.transpose();
}

}  // namespace

Eigen::MatrixXd QpProblem::constraint_z() const {
  const int n = size();
  Eigen::MatrixXd z(2 * n, n);
  z.topRows(n) = Eigen::MatrixXd::Identity(n, n);
  z.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
  return z;
}

Eigen::VectorXd QpProblem::constraint_b() const {
  const int n = size();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * n);
  b.head(n).setOnes();
  return b;
}

QpProblem make_qp(const Eigen::VectorXd& h_diag, const Eigen::VectorXd& x0,
                  double epsilon, Coupling coupling) {
  if (epsilon <= 0.0)
    throw InvalidEpsilon("epsilon must be positive, got " +
                         std::to_string(epsilon));
  if (h_diag.size() != x0.size())
    throw DimensionMismatch("plant diagonal and x0 length differ");

  const int n = static_cast<int>(h_diag.size());
  QpProblem qp;
  qp.epsilon = epsilon;
  qp.coupling = coupling;
  if (coupling == Coupling::kIdentity) {
    qp.p = Eigen::MatrixXd::Zero(n, n);
    qp.p.diagonal() = h_diag.array().square() + epsilon;
    qp.f = (x0.cwiseProduct(h_diag)).transpose();
  } else {
    qp.p = h_diag * h_diag.transpose();
    qp.p.diagonal().array() += epsilon;
    qp.f = (x0.sum() * h_diag).transpose();
  }
  return qp;
}

QpProblem build_qp(const OpinionState& state, const StubbornControl& u,
                   const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                   const SocialNetwork& network, double epsilon,
                   Coupling coupling) {
  return make_qp(qp_plant(state, u, network, x0, v0), x0, epsilon, coupling);
}

double qp_objective(const QpProblem& problem, const Eigen::VectorXd& y) {
  return 0.5 * y.dot(problem.p * y) + problem.f.dot(y);
}

double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& y) {
  if (y.size() != problem.size())
    throw DimensionMismatch("kkt_residual: wrong openness length");
  const Eigen::VectorXd g = gradient(problem, y);
  double worst = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    double violation;
    if (y(i) <= kActivityTol)
      violation = std::max(0.0, -g(i));
    else if (y(i) >= 1.0 - kActivityTol)
      violation = std::max(0.0, g(i));
    else
      violation = std::abs(g(i));
    worst = std::max(worst, violation);
  }
  return worst;
}

QpSolution solve_box_qp(const QpProblem& problem, double tolerance,
                        const Eigen::VectorXd* warm_start) {
  const int n = problem.size();
  if ((problem.p - problem.p.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw NotPositiveDefinite("QP matrix is not symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(problem.p).info() != Eigen::Success)
    throw NotPositiveDefinite("QP matrix has no Cholesky factorization");

  QpSolution sol;

  // Zero linear term: the unconstrained minimizer is the origin, which is
  // feasible. Covers the degenerate H = 0 plant.
  if (problem.f.isZero(0.0)) {
    sol.y = Eigen::VectorXd::Zero(n);
    sol.objective = 0.0;
    sol.kkt_residual = 0.0;
    for (int i = 0; i < n; ++i) sol.active_lower.push_back(i);
    return sol;
  }

  Eigen::VectorXd y(n);
  std::vector<BoundState> state(n);
  if (warm_start != nullptr) {
    if (warm_start->size() != n)
      throw DimensionMismatch("warm start has wrong length");
    for (int i = 0; i < n; ++i) {
      const double yi = std::clamp((*warm_start)(i), 0.0, 1.0);
      if (yi <= kActivityTol) {
        y(i) = 0.0;
        state[i] = BoundState::kLower;
      } else if (yi >= 1.0 - kActivityTol) {
        y(i) = 1.0;
        state[i] = BoundState::kUpper;
      } else {
        y(i) = yi;
        state[i] = BoundState::kFree;
      }
    }
  } else {
    y.setZero();
    std::fill(state.begin(), state.end(), BoundState::kLower);
  }

  const int max_iterations = std::max(10 * n, 30);
  for (int iter = 0; iter < max_iterations; ++iter) {
    std::vector<int> free_idx;
    for (int i = 0; i < n; ++i)
      if (state[i] == BoundState::kFree) free_idx.push_back(i);
    const int nf = static_cast<int>(free_idx.size());

    const Eigen::VectorXd g = gradient(problem, y);

    // Newton step on the free coordinates, zero elsewhere.
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
    if (nf > 0) {
      Eigen::MatrixXd pff(nf, nf);
      Eigen::VectorXd gf(nf);
      for (int r = 0; r < nf; ++r) {
        gf(r) = g(free_idx[r]);
        for (int c = 0; c < nf; ++c)
          pff(r, c) = problem.p(free_idx[r], free_idx[c]);
      }
      Eigen::LLT<Eigen::MatrixXd> llt(pff);
      if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("free-coordinate block lost definiteness");
      const Eigen::VectorXd pf = llt.solve(-gf);
      for (int r = 0; r < nf; ++r) step(free_idx[r]) = pf(r);
    }

    if (step.lpNorm<Eigen::Infinity>() <= 1e-13) {
      // Stationary on the free set; look for a bound worth releasing.
      int release = -1;
      double most_negative = -tolerance;
      for (int i = 0; i < n; ++i) {
        double multiplier = 0.0;
        if (state[i] == BoundState::kLower)
          multiplier = g(i);  // for -y_i <= 0
        else if (state[i] == BoundState::kUpper)
          multiplier = -g(i);  // for y_i <= 1
        else
          continue;
        if (multiplier < most_negative) {
          most_negative = multiplier;
          release = i;
        }
      }
      if (release < 0) {
        // roundoff from clipped steps can leave free coordinates a few ulp
        // outside the box
        sol.y = y.cwiseMax(0.0).cwiseMin(1.0);
        sol.objective = qp_objective(problem, sol.y);
        sol.kkt_residual = kkt_residual(problem, sol.y);
        for (int i = 0; i < n; ++i) {
          if (state[i] == BoundState::kLower) sol.active_lower.push_back(i);
          if (state[i] == BoundState::kUpper) sol.active_upper.push_back(i);
        }
        return sol;
      }
      state[release] = BoundState::kFree;
      continue;
    }

    // Longest feasible slice of the step.
    double alpha = 1.0;
    int blocking = -1;
    bool blocking_upper = false;
    for (int i : free_idx) {
      double limit = std::numeric_limits<double>::infinity();
      bool upper = false;
      if (step(i) > 1e-14) {
        limit = (1.0 - y(i)) / step(i);
        upper = true;
      } else if (step(i) < -1e-14) {
        limit = -y(i) / step(i);
      }
      if (limit < alpha) {
        alpha = limit;
        blocking = i;
        blocking_upper = upper;
      }
    }
    y += alpha * step;
    if (blocking >= 0) {
      y(blocking) = blocking_upper ? 1.0 : 0.0;
      state[blocking] = blocking_upper ? BoundState::kUpper : BoundState::kLower;
    }
  }
  throw MaxIterations("box QP did not converge in " +
                      std::to_string(max_iterations) + " active-set steps");
}

}  // namespace steer
