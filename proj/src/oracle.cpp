#include "steer/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "steer/errors.hpp"
#include "steer/random.hpp"

namespace steer::oracle {
namespace {

constexpr double kGridTol = 1e-12;

double terminal_cost(const DpInstance& inst, const Eigen::VectorXd& x_final) {
  const Eigen::VectorXd& d = inst.mats.d;
  return 0.5 * x_final.dot(inst.weights.s11n * x_final) +
         x_final.dot(inst.weights.s12n * d) + 0.5 * d.dot(inst.weights.s22n * d);
}

// Rollout cost for a stacked control sequence (steps * n_stubborn entries).
double stacked_cost(const DpInstance& inst, const Eigen::VectorXd& stacked) {
  const int ns = static_cast<int>(inst.mats.b.cols());
  Eigen::VectorXd x = inst.x;
  double total = 0.0;
  for (int s = 0; s < inst.steps(); ++s) {
    const auto u = stacked.segment(s * ns, ns);
    total += 0.5 * (x.dot(inst.weights.q * x) + u.dot(inst.weights.r * u));
    x = inst.mats.a * x + inst.mats.b * u + inst.mats.d;
  }
  return total + terminal_cost(inst, x);
}

double spectral_radius(const Eigen::MatrixXd& m) {
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

double max_closed_loop_control(const DpInstance& inst) {
  const DpSolution dp = backward_recursion(inst.mats, inst.weights,
                                           inst.start_time, inst.final_time);
  Eigen::VectorXd x = inst.x;
  double peak = 0.0;
  for (int t = inst.start_time; t < inst.final_time; ++t) {
    const Eigen::VectorXd u = optimal_control(dp.policy, x, inst.mats.d, t).u;
    peak = std::max(peak, u.lpNorm<Eigen::Infinity>());
    x = inst.mats.a * x + inst.mats.b * u + inst.mats.d;
  }
  return peak;
}

}  // namespace

std::vector<long long> GridSpec::points_per_dim() const {
  if (resolution <= 0.0) throw BoundsError("grid resolution must be positive");
  if (lower.size() != upper.size())
    throw DimensionMismatch("grid bounds have different lengths");
  std::vector<long long> counts(lower.size());
  double total = 1.0;
  for (int j = 0; j < lower.size(); ++j) {
    if (upper(j) < lower(j))
      throw BoundsError("grid upper bound below lower bound");
    counts[j] =
        static_cast<long long>(std::floor((upper(j) - lower(j)) / resolution +
                                          kGridTol)) +
        1;
    total *= static_cast<double>(counts[j]);
  }
  if (total > kMaxPoints)
    throw GridTooLarge("grid has " + std::to_string(total) +
                       " points, cap is " + std::to_string(kMaxPoints));
  return counts;
}

GridOptimum qp_grid_oracle(const QpProblem& problem, const GridSpec& grid) {
  const int n = problem.size();
  if (n > 4)
    throw GridTooLarge("qp_grid_oracle is guarded to 4 variables, got " +
                       std::to_string(n));
  if (grid.lower.size() != n)
    throw DimensionMismatch("grid dimension does not match the problem");
  const std::vector<long long> counts = grid.points_per_dim();

  // Admissible values per coordinate: the lattice cut down to [0,1].
  std::vector<std::vector<double>> values(n);
  for (int j = 0; j < n; ++j) {
    for (long long i = 0; i < counts[j]; ++i) {
      const double v = grid.lower(j) + static_cast<double>(i) * grid.resolution;
      if (v >= -kGridTol && v <= 1.0 + kGridTol)
        values[j].push_back(std::clamp(v, 0.0, 1.0));
    }
    if (values[j].empty())
      throw BoundsError("grid does not intersect [0,1] in coordinate " +
                        std::to_string(j));
  }

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd best_y = y;
  double best = std::numeric_limits<double>::infinity();

  // Lexicographic scan; the last coordinate is a scalar quadratic
  // a z^2 + b z + c swept in one tight loop.
  const int last = n - 1;
  const double a = 0.5 * problem.p(last, last);
  std::function<void(int)> scan = [&](int depth) {
    if (depth == last) {
      double b = problem.f(last);
      double c = 0.0;
      for (int j = 0; j < last; ++j) {
        b += problem.p(last, j) * y(j);
        c += problem.f(j) * y(j);
        for (int l = 0; l < last; ++l) c += 0.5 * problem.p(j, l) * y(j) * y(l);
      }
      for (double z : values[last]) {
        const double obj = (a * z + b) * z + c;
        if (obj < best) {
          best = obj;
          y(last) = z;
          best_y = y;
        }
      }
      return;
    }
    for (double z : values[depth]) {
      y(depth) = z;
      scan(depth + 1);
    }
  };
  scan(0);

  return {best_y, qp_objective(problem, best_y)};
}

double open_loop_cost(const DpInstance& instance,
                      const std::vector<Eigen::VectorXd>& controls) {
  if (static_cast<int>(controls.size()) != instance.steps())
    throw DimensionMismatch("need one control per step");
  const int ns = static_cast<int>(instance.mats.b.cols());
  Eigen::VectorXd stacked(instance.control_dims());
  for (int s = 0; s < instance.steps(); ++s) {
    if (controls[s].size() != ns)
      throw DimensionMismatch("control has wrong length");
    stacked.segment(s * ns, ns) = controls[s];
  }
  return stacked_cost(instance, stacked);
}

DpGridOptimum dp_grid_oracle(const DpInstance& instance, const GridSpec& grid) {
  const int dims = instance.control_dims();
  const int ns = static_cast<int>(instance.mats.b.cols());
  const int steps = instance.steps();
  if (dims > 6)
    throw GridTooLarge("dp_grid_oracle is guarded to 6 control entries, got " +
                       std::to_string(dims));
  if (grid.lower.size() != dims)
    throw DimensionMismatch("grid dimension does not match the instance");
  const std::vector<long long> counts = grid.points_per_dim();

  // Odometer scan with a prefix rollout cache: when coordinate j advances,
  // only blocks j/ns onward need recomputing.
  std::vector<long long> idx(dims, 0);
  Eigen::VectorXd stacked(dims);
  for (int j = 0; j < dims; ++j) stacked(j) = grid.lower(j);

  std::vector<Eigen::VectorXd> x_at(steps + 1);
  std::vector<double> cost_at(steps + 1, 0.0);
  x_at[0] = instance.x;
  const Eigen::VectorXd s12d = instance.weights.s12n * instance.mats.d;
  const double d_term =
      0.5 * instance.mats.d.dot(instance.weights.s22n * instance.mats.d);

  auto recompute_from = [&](int block) {
    for (int s = block; s < steps; ++s) {
      const auto u = stacked.segment(s * ns, ns);
      cost_at[s + 1] = cost_at[s] +
                       0.5 * (x_at[s].dot(instance.weights.q * x_at[s]) +
                              u.dot(instance.weights.r * u));
      x_at[s + 1] = instance.mats.a * x_at[s] + instance.mats.b * u +
                    instance.mats.d;
    }
  };
  recompute_from(0);

  Eigen::VectorXd best_stacked = stacked;
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    const double total = cost_at[steps] +
                         0.5 * x_at[steps].dot(instance.weights.s11n * x_at[steps]) +
                         x_at[steps].dot(s12d) + d_term;
    if (total < best) {
      best = total;
      best_stacked = stacked;
    }
    int j = dims - 1;
    while (j >= 0 && idx[j] + 1 >= counts[j]) {
      idx[j] = 0;
      stacked(j) = grid.lower(j);
      --j;
    }
    if (j < 0) break;
    ++idx[j];
    stacked(j) = grid.lower(j) + static_cast<double>(idx[j]) * grid.resolution;
    recompute_from(j / ns);
  }

  DpGridOptimum out;
  out.controls.resize(steps);
  for (int s = 0; s < steps; ++s)
    out.controls[s] = best_stacked.segment(s * ns, ns);
  out.objective = stacked_cost(instance, best_stacked);
  return out;
}

double closed_loop_cost(const DpInstance& instance, S12Variant variant) {
  const DpSolution dp =
      backward_recursion(instance.mats, instance.weights, instance.start_time,
                         instance.final_time, variant);
  Eigen::VectorXd x = instance.x;
  double total = 0.0;
  for (int t = instance.start_time; t < instance.final_time; ++t) {
    const Eigen::VectorXd u =
        optimal_control(dp.policy, x, instance.mats.d, t).u;
    total += 0.5 * (x.dot(instance.weights.q * x) + u.dot(instance.weights.r * u));
    x = instance.mats.a * x + instance.mats.b * u + instance.mats.d;
  }
  return total + terminal_cost(instance, x);
}

double grid_gap_bound(const DpInstance& instance, const GridSpec& grid) {
  const int dims = instance.control_dims();
  // Exact Hessian of the (quadratic) open-loop cost by central second
  // differences; h = 0.5 is exact for quadratics.
  const double h = 0.5;
  Eigen::MatrixXd hess(dims, dims);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dims);
  for (int i = 0; i < dims; ++i) {
    for (int j = 0; j < dims; ++j) {
      Eigen::VectorXd pp = e, pm = e, mp = e, mm = e;
      pp(i) += h; pp(j) += h;
      pm(i) += h; pm(j) -= h;
      mp(i) -= h; mp(j) += h;
      mm(i) -= h; mm(j) -= h;
      hess(i, j) = (stacked_cost(instance, pp) - stacked_cost(instance, pm) -
                    stacked_cost(instance, mp) + stacked_cost(instance, mm)) /
                   (4.0 * h * h);
    }
  }
  hess = 0.5 * (hess + hess.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess,
                                                    Eigen::EigenvaluesOnly);
  const double curvature = std::max(0.0, es.eigenvalues().maxCoeff());
  return curvature * dims * grid.resolution * grid.resolution / 8.0;
}

QpProblem random_qp_instance(std::uint64_t seed, int n) {
  Rng rng(seed);
  switch (seed % 3) {
    case 0: {  // generic dense positive definite
      const Eigen::MatrixXd m = rng.matrix(n, n, -1.0, 1.0);
      QpProblem qp;
      qp.p = m.transpose() * m +
             0.1 * Eigen::MatrixXd::Identity(n, n);
      qp.f = rng.vector(n, -2.0, 2.0).transpose();
      qp.epsilon = 0.1;
      return qp;
    }
    case 1:
      return make_qp(rng.vector(n, -2.0, 2.0), rng.vector(n, -1.0, 1.0),
                     rng.uniform(0.5, 2.0), Coupling::kIdentity);
    default:
      return make_qp(rng.vector(n, -2.0, 2.0), rng.vector(n, -1.0, 1.0),
                     rng.uniform(0.5, 2.0), Coupling::kAllOnes);
  }
}

QpSweepResult run_qp_sweep(std::uint64_t seed, const std::vector<int>& sizes,
                           double resolution) {
  QpSweepResult out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const int n = sizes[i];
    const QpProblem qp = random_qp_instance(seed + i, n);
    const QpSolution sol = solve_box_qp(qp);
    GridSpec grid{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n),
                  resolution};
    const GridOptimum ref = qp_grid_oracle(qp, grid);

    QpSweepRecord rec;
    rec.size = n;
    rec.solver_objective = sol.objective;
    rec.oracle_objective = ref.objective;
    rec.kkt_residual = sol.kkt_residual;
    out.records.push_back(rec);
    out.max_gap = std::max(out.max_gap, ref.objective - sol.objective);
    out.max_overshoot =
        std::max(out.max_overshoot, sol.objective - ref.objective);
    out.max_kkt = std::max(out.max_kkt, sol.kkt_residual);
  }
  return out;
}

DpInstance random_dp_instance(std::uint64_t seed, int n_regular,
                              int n_stubborn, int horizon,
                              bool nonzero_terminal) {
  Rng rng(seed);
  DpInstance inst;
  inst.start_time = 0;
  inst.final_time = horizon;

  inst.mats.a = rng.matrix(n_regular, n_regular, -1.0, 1.0);
  const double rho = spectral_radius(inst.mats.a);
  if (rho > 1e-9) inst.mats.a *= rng.uniform(0.3, 1.25) / rho;
  inst.mats.b = rng.matrix(n_regular, n_stubborn, -1.0, 1.0);
  inst.mats.d = rng.vector(n_regular, -0.6, 0.6);
  inst.x = rng.vector(n_regular, -1.0, 1.0);

  const Eigen::MatrixXd mq = rng.matrix(n_regular, n_regular, -0.7, 0.7);
  const Eigen::MatrixXd mr = rng.matrix(n_stubborn, n_stubborn, -0.5, 0.5);
  inst.weights.q = mq.transpose() * mq;
  inst.weights.r = mr.transpose() * mr +
                   0.5 * Eigen::MatrixXd::Identity(n_stubborn, n_stubborn);
  if (nonzero_terminal) {
    const Eigen::MatrixXd t = rng.matrix(2 * n_regular, 2 * n_regular, -0.5, 0.5);
    const Eigen::MatrixXd psd = 0.4 * t.transpose() * t;
    inst.weights.s11n = psd.topLeftCorner(n_regular, n_regular);
    inst.weights.s12n = psd.topRightCorner(n_regular, n_regular);
    inst.weights.s22n = psd.bottomRightCorner(n_regular, n_regular);
  } else {
    inst.weights.s11n = Eigen::MatrixXd::Zero(n_regular, n_regular);
    inst.weights.s12n = inst.weights.s11n;
    inst.weights.s22n = inst.weights.s11n;
  }

  // Keep the optimal controls comfortably inside the oracle's [-2,2] box.
  for (int shrink = 0; shrink < 8 && max_closed_loop_control(inst) > 1.2;
       ++shrink) {
    inst.x *= 0.5;
    inst.mats.d *= 0.5;
  }
  return inst;
}

DpSweepResult run_dp_sweep(std::uint64_t seed, int n_instances,
                           S12Variant variant) {
  struct Shape { int nr, ns, horizon; double resolution; };
  const Shape shapes[] = {
      {2, 1, 1, 0.002},  // 1 control entry
      {3, 1, 2, 0.002},  // 2
      {1, 1, 2, 0.002},  // 2
      {2, 2, 1, 0.002},  // 2
      {2, 1, 3, 0.02},   // 3
      {3, 2, 2, 0.1},    // 4
  };
  DpSweepResult out;
  for (int i = 0; i < n_instances; ++i) {
    const Shape& sh = shapes[i % std::size(shapes)];
    const DpInstance inst = random_dp_instance(seed + i, sh.nr, sh.ns,
                                               sh.horizon, i % 2 == 0);
    const int dims = inst.control_dims();
    GridSpec grid{Eigen::VectorXd::Constant(dims, -2.0),
                  Eigen::VectorXd::Constant(dims, 2.0), sh.resolution};

    DpSweepRecord rec;
    rec.dims = dims;
    rec.closed_loop = closed_loop_cost(inst, variant);
    rec.oracle_objective = dp_grid_oracle(inst, grid).objective;
    rec.gap_bound = grid_gap_bound(inst, grid);
    rec.within_bound =
        rec.closed_loop <= rec.oracle_objective + 1e-9 &&
        rec.oracle_objective - rec.closed_loop <= rec.gap_bound;
    const DpSolution dp = backward_recursion(inst.mats, inst.weights,
                                             inst.start_time, inst.final_time,
                                             variant);
    rec.s12_asymmetry = dp.value.max_s12_asymmetry;
    rec.min_s11_eigenvalue = dp.value.min_s11_eigenvalue;
    out.all_within = out.all_within && rec.within_bound;
    out.records.push_back(rec);
  }
  return out;
}

std::vector<DpInstance> make_adjudication_instances(std::uint64_t seed,
                                                    int count) {
  std::vector<DpInstance> out;
  for (int i = 0; i < count; ++i) {
    const int nr = 1 + i % 3;
    const int horizon = 2 + i % 2;
    DpInstance inst = random_dp_instance(seed + 17 * i, nr, 1, horizon, true);
    // The cross block only matters when the offset is alive.
    if (inst.mats.d.lpNorm<Eigen::Infinity>() < 0.25)
      inst.mats.d.array() += 0.3;
    out.push_back(inst);
  }
  return out;
}

AdjudicationReport adjudicate_s12_variants(
    const std::vector<DpInstance>& instances) {
  constexpr S12Variant variants[] = {S12Variant::kStateClosedLoop,
                                     S12Variant::kIdentityMinusBk,
                                     S12Variant::kIdentityMinusBg};
  AdjudicationReport report;
  report.mean_excess.assign(3, 0.0);
  report.winner_matches_oracle = true;

  for (std::size_t i = 0; i < instances.size(); ++i) {
    double costs[3];
    double best = std::numeric_limits<double>::infinity();
    for (int v = 0; v < 3; ++v) {
      costs[v] = closed_loop_cost(instances[i], variants[v]);
      best = std::min(best, costs[v]);
    }
    for (int v = 0; v < 3; ++v) {
      report.records.push_back({static_cast<int>(i), variants[v], costs[v],
                                costs[v] - best});
      report.mean_excess[v] += (costs[v] - best) / instances.size();
    }
  }

  int winner = 0;
  for (int v = 1; v < 3; ++v)
    if (report.mean_excess[v] < report.mean_excess[winner]) winner = v;
  report.winner = variants[winner];

  // Sandwich the winner against the dumb oracle on every instance small
  // enough to grid finely.
  for (const DpInstance& inst : instances) {
    const int dims = inst.control_dims();
    if (dims > 3) continue;
    const double res = dims <= 2 ? 0.002 : 0.02;
    GridSpec grid{Eigen::VectorXd::Constant(dims, -2.0),
                  Eigen::VectorXd::Constant(dims, 2.0), res};
    const double cost = closed_loop_cost(inst, report.winner);
    const double ref = dp_grid_oracle(inst, grid).objective;
    const double bound = grid_gap_bound(inst, grid);
    if (!(cost <= ref + 1e-9 && ref - cost <= bound))
      report.winner_matches_oracle = false;
  }
  return report;
}

std::string AdjudicationReport::to_text() const {
  std::ostringstream os;
  os << "instance  variant              cost                excess\n";
  for (const AdjudicationRecord& rec : records) {
    os << rec.instance << "  " << variant_name(rec.variant) << "  ";
    os.precision(12);
    os << rec.cost << "  " << rec.excess << "\n";
  }
  constexpr S12Variant variants[] = {S12Variant::kStateClosedLoop,
                                     S12Variant::kIdentityMinusBk,
                                     S12Variant::kIdentityMinusBg};
  os << "\nmean excess by variant:\n";
  for (int v = 0; v < 3; ++v)
    os << "  " << variant_name(variants[v]) << ": " << mean_excess[v] << "\n";
  os << "winner: " << variant_name(winner)
     << (winner_matches_oracle ? " (confirmed by grid oracle)\n"
                               : " (oracle confirmation FAILED)\n");
  return os.str();
}

}  // namespace steer::oracle
