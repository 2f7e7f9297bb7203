#include "steer/leader_dp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "steer/errors.hpp"

namespace steer {
namespace {

bool is_psd(const Eigen::MatrixXd& m, double tol) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

}  // namespace

const char* variant_name(S12Variant variant) {
  switch (variant) {
    case S12Variant::kStateClosedLoop: return "state-closed-loop";
    case S12Variant::kIdentityMinusBk: return "identity-minus-bk";
    case S12Variant::kIdentityMinusBg: return "identity-minus-bg";
  }
  return "unknown";
}

void LeaderWeights::validate() const {
  const auto nr = q.rows();
  const auto ns = r.rows();
  if (q.cols() != nr || r.cols() != ns)
    throw DimensionMismatch("Q and R must be square");
  if (s11n.rows() != nr || s11n.cols() != nr || s12n.rows() != nr ||
      s12n.cols() != nr || s22n.rows() != nr || s22n.cols() != nr)
    throw DimensionMismatch("terminal blocks must match the regular count");
  if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-10 ||
      Eigen::LLT<Eigen::MatrixXd>(r).info() != Eigen::Success)
    throw NotPositiveDefinite("R must be symmetric positive definite");
  if (!is_psd(q, 1e-10))
    throw NotPositiveDefinite("Q must be symmetric positive semi-definite");
  Eigen::MatrixXd terminal(2 * nr, 2 * nr);
  terminal << s11n, s12n, s12n.transpose(), s22n;
  if (!is_psd(terminal, 1e-10))
    throw NotPositiveDefinite(
        "terminal block matrix must be positive semi-definite");
}

LeaderWeights LeaderWeights::diagonal(int n_regular, int n_stubborn,
                                      double q_scale, double r_scale) {
  LeaderWeights w;
  w.q = q_scale * Eigen::MatrixXd::Identity(n_regular, n_regular);
  w.r = r_scale * Eigen::MatrixXd::Identity(n_stubborn, n_stubborn);
  w.s11n = Eigen::MatrixXd::Zero(n_regular, n_regular);
  w.s12n = w.s11n;
  w.s22n = w.s11n;
  return w;
}

int ValueFunction::index(int t) const {
  if (t < start_time || t > final_time)
    throw TimeOutOfRange("time " + std::to_string(t) + " outside [" +
                         std::to_string(start_time) + "," +
                         std::to_string(final_time) + "]");
  return t - start_time;
}

DpSolution backward_recursion(const SystemMatrices& mats,
                              const LeaderWeights& weights, int start_time,
                              int final_time, S12Variant variant) {
  const int nr = static_cast<int>(mats.a.rows());
  const int ns = static_cast<int>(mats.b.cols());
  if (start_time >= final_time)
    throw TimeOutOfRange("backward recursion needs start_time < final_time");
  if (mats.a.cols() != nr || mats.d.size() != nr || mats.b.rows() != nr)
    throw DimensionMismatch("system matrices are inconsistent");
  if (weights.q.rows() != nr || weights.r.rows() != ns)
    throw DimensionMismatch("weights do not match the system matrices");

  const int steps = final_time - start_time;
  DpSolution out;
  out.value.start_time = start_time;
  out.value.final_time = final_time;
  out.value.s11.assign(steps + 1, Eigen::MatrixXd());
  out.value.s12.assign(steps + 1, Eigen::MatrixXd());
  out.value.s22.assign(steps + 1, Eigen::MatrixXd());
  out.policy.start_time = start_time;
  out.policy.final_time = final_time;
  out.policy.gain_state.assign(steps, Eigen::MatrixXd());
  out.policy.gain_offset.assign(steps, Eigen::MatrixXd());
  out.policy.mats = mats;

  out.value.s11[steps] = 0.5 * (weights.s11n + weights.s11n.transpose());
  out.value.s12[steps] = weights.s12n;
  out.value.s22[steps] = 0.5 * (weights.s22n + weights.s22n.transpose());

  // S21 is propagated by its own mirrored update; with exact arithmetic it
  // stays the transpose of S12, so the gap between the two measures the
  // recursion's numerical drift.
  Eigen::MatrixXd s21 = weights.s12n.transpose();

  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(nr, nr);
  double max_asym = 0.0;
  double min_eig = std::numeric_limits<double>::infinity();
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.value.s11[steps],
                                                      Eigen::EigenvaluesOnly);
    min_eig = es.eigenvalues().minCoeff();
  }

  for (int t = final_time - 1; t >= start_time; --t) {
    const int i = t - start_time;
    const Eigen::MatrixXd& s11_next = out.value.s11[i + 1];
    const Eigen::MatrixXd& s12_next = out.value.s12[i + 1];
    const Eigen::MatrixXd& s22_next = out.value.s22[i + 1];

    const Eigen::MatrixXd bt_s11 = mats.b.transpose() * s11_next;
    Eigen::MatrixXd m = bt_s11 * mats.b + weights.r;
    m = 0.5 * (m + m.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
      throw SingularStep("B'S11B + R is not invertible at t = " +
                         std::to_string(t));

    const Eigen::MatrixXd gain_k = llt.solve(bt_s11 * mats.a);
    const Eigen::MatrixXd gain_g =
        llt.solve(mats.b.transpose() * (s11_next + s12_next));

    const Eigen::MatrixXd a_cl = mats.a - mats.b * gain_k;   // A - B K
    const Eigen::MatrixXd d_cl = identity - mats.b * gain_g; // I - B G

    const Eigen::MatrixXd s11_acl = s11_next * a_cl;
    const Eigen::MatrixXd s11_dcl = s11_next * d_cl;

    Eigen::MatrixXd s11 = a_cl.transpose() * s11_acl +
                          gain_k.transpose() * weights.r * gain_k + weights.q;
    s11 = 0.5 * (s11 + s11.transpose());

    Eigen::MatrixXd s22 = d_cl.transpose() * s11_dcl +
                          gain_g.transpose() * weights.r * gain_g + s22_next +
                          d_cl.transpose() * s12_next +
                          s12_next.transpose() * d_cl;
    s22 = 0.5 * (s22 + s22.transpose());

    Eigen::MatrixXd factor;  // multiplies S12(t+1) / S21(t+1)
    switch (variant) {
      case S12Variant::kStateClosedLoop: factor = a_cl; break;
      case S12Variant::kIdentityMinusBk: factor = identity - mats.b * gain_k; break;
      case S12Variant::kIdentityMinusBg: factor = d_cl; break;
    }
    const Eigen::MatrixXd s12 = a_cl.transpose() * s11_dcl +
                                factor.transpose() * s12_next +
                                gain_k.transpose() * weights.r * gain_g;
    s21 = d_cl.transpose() * s11_acl + s21 * factor +
          gain_g.transpose() * weights.r * gain_k;

    out.value.s11[i] = s11;
    out.value.s12[i] = s12;
    out.value.s22[i] = s22;
    out.policy.gain_state[i] = gain_k;
    out.policy.gain_offset[i] = gain_g;

    max_asym = std::max(max_asym,
                        (s12 - s21.transpose()).cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s11,
                                                      Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }

  out.value.max_s12_asymmetry = max_asym;
  out.value.min_s11_eigenvalue = min_eig;
  return out;
}

StubbornControl optimal_control(const LeaderPolicy& policy,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& d, int t) {
  if (t < policy.start_time || t >= policy.final_time)
    throw TimeOutOfRange("no control gains at time " + std::to_string(t));
  const int i = t - policy.start_time;
  if (x.size() != policy.gain_state[i].cols() ||
      d.size() != policy.gain_offset[i].cols())
    throw DimensionMismatch("optimal_control: wrong state length");
  return {-policy.gain_state[i] * x - policy.gain_offset[i] * d};
}

double value_at(const ValueFunction& vf, const Eigen::VectorXd& x,
                const Eigen::VectorXd& d, int t) {
  const int i = vf.index(t);
  if (x.size() != vf.s11[i].rows() || d.size() != vf.s22[i].rows())
    throw DimensionMismatch("value_at: wrong vector length");
  return 0.5 * x.dot(vf.s11[i] * x) + x.dot(vf.s12[i] * d) +
         0.5 * d.dot(vf.s22[i] * d);
}

double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                  const LeaderWeights& weights) {
  if (x.size() != weights.q.rows() || u.size() != weights.r.rows())
    throw DimensionMismatch("stage_cost: wrong vector length");
  return 0.5 * (x.dot(weights.q * x) + u.dot(weights.r * u));
}

}  // namespace steer
