#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace steer {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct InvalidEdge : Error { using Error::Error; };
struct EmptyGraph : Error { using Error::Error; };
struct PartitionError : Error { using Error::Error; };
struct InvalidEpsilon : Error { using Error::Error; };
struct NotPositiveDefinite : Error { using Error::Error; };
struct MaxIterations : Error { using Error::Error; };
struct SingularStep : Error { using Error::Error; };
struct TimeOutOfRange : Error { using Error::Error; };
struct GridTooLarge : Error { using Error::Error; };
struct BoundsError : Error { using Error::Error; };
struct InvalidDegree : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IOError : Error { using Error::Error; };

// The per-step follower/leader fixed-point loop hit its iteration cap.
// Carries the last openness iterate and the |dy|_inf history so callers can
// inspect how the iteration behaved.
class FixedPointDivergence : public Error {
 public:
  FixedPointDivergence(const std::string& what, int time_step,
                       Eigen::VectorXd last_openness,
                       std::vector<double> delta_history)
      : Error(what),
        time_step(time_step),
        last_openness(std::move(last_openness)),
        delta_history(std::move(delta_history)) {}

  int time_step;  // -1 when not yet attached to a simulation step
  Eigen::VectorXd last_openness;
  std::vector<double> delta_history;
};

}  // namespace steer
