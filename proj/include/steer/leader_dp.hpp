#pragma once

#include <Eigen/Dense>
#include <vector>

#include "steer/dynamics.hpp"

namespace steer {

// Cost weights for the stubborn agents: running state weight Q (PSD),
// control weight R (PD) and the terminal value blocks over [x; d].
struct LeaderWeights {
  Eigen::MatrixXd q;     // n_regular x n_regular
  Eigen::MatrixXd r;     // n_stubborn x n_stubborn
  Eigen::MatrixXd s11n;  // terminal blocks, each n_regular x n_regular
  Eigen::MatrixXd s12n;
  Eigen::MatrixXd s22n;

  // Throws NotPositiveDefinite / DimensionMismatch when the PD/PSD
  // requirements do not hold.
  void validate() const;

  static LeaderWeights diagonal(int n_regular, int n_stubborn, double q_scale,
                                double r_scale);
};

// Which factor multiplies the time-(t+1) cross block inside the S12 update.
// kStateClosedLoop, (A - B K)', is what expanding the Bellman step yields and
// is the adjudicated default; the other two are kept so the brute-force
// oracle can compare all of them on small instances.
enum class S12Variant {
  kStateClosedLoop,   // (A - B K(t))' S12(t+1)
  kIdentityMinusBk,   // (I - B K(t))' S12(t+1)
  kIdentityMinusBg,   // (I - B G(t))' S12(t+1)
};

const char* variant_name(S12Variant variant);

// Quadratic cost-to-go over the stacked vector [x; d]:
//   V(t) = 0.5 x'S11(t)x + x'S12(t)d + 0.5 d'S22(t)d.
// Blocks are indexed by t in [start_time, final_time]. The asymmetry and
// eigenvalue fields are recorded while the recursion runs: S21 is propagated
// by its own mirrored update and compared against S12'.
struct ValueFunction {
  int start_time = 0;
  int final_time = 0;
  std::vector<Eigen::MatrixXd> s11, s12, s22;

  double max_s12_asymmetry = 0.0;
  double min_s11_eigenvalue = 0.0;

  const Eigen::MatrixXd& s11_at(int t) const { return s11[index(t)]; }
  const Eigen::MatrixXd& s12_at(int t) const { return s12[index(t)]; }
  const Eigen::MatrixXd& s22_at(int t) const { return s22[index(t)]; }
  int index(int t) const;  // throws TimeOutOfRange
};

// Gains of u*(t) = -K(t) x(t) - G(t) d for t in [start_time, final_time-1],
// computed for one frozen (A, B, d) triple.
struct LeaderPolicy {
  int start_time = 0;
  int final_time = 0;
  std::vector<Eigen::MatrixXd> gain_state;   // K(t), n_stubborn x n_regular
  std::vector<Eigen::MatrixXd> gain_offset;  // G(t), n_stubborn x n_regular
  SystemMatrices mats;
};

struct DpSolution {
  ValueFunction value;
  LeaderPolicy policy;
};

// Backward sweep from final_time down to start_time with frozen matrices:
//   K(t) = (B'S11(t+1)B + R)^-1 B'S11(t+1)A
//   G(t) = (B'S11(t+1)B + R)^-1 B'(S11(t+1) + S12(t+1))
//   S11(t) = (A-BK)'S11(t+1)(A-BK) + K'RK + Q
//   S22(t) = (I-BG)'S11(t+1)(I-BG) + G'RG + S22(t+1)
//            + (I-BG)'S12(t+1) + S12(t+1)'(I-BG)
//   S12(t) = (A-BK)'S11(t+1)(I-BG) + K'RG + <variant factor>'S12(t+1)
// S11 and S22 are re-symmetrized after every step. The caller is expected to
// have validated the weights; numerically unusable steps throw SingularStep.
// Pure function, safe to call concurrently.
DpSolution backward_recursion(const SystemMatrices& mats,
                              const LeaderWeights& weights, int start_time,
                              int final_time,
                              S12Variant variant = S12Variant::kStateClosedLoop);

// u*(t) = -K(t) x - G(t) d. Throws TimeOutOfRange outside the policy range.
StubbornControl optimal_control(const LeaderPolicy& policy,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& d, int t);

// 0.5 [x; d]' S(t) [x; d].
double value_at(const ValueFunction& vf, const Eigen::VectorXd& x,
                const Eigen::VectorXd& d, int t);

// 0.5 (x'Qx + u'Ru).
double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                  const LeaderWeights& weights);

}  // namespace steer
