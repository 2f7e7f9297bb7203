#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "steer/network.hpp"
#include "steer/stackelberg.hpp"

namespace steer {

// Initial regular opinions. Linspace places n points evenly inside (lo, hi)
// with the endpoints excluded; uniform draws i.i.d. with the given seed;
// explicit passes values through after a bounds check.
struct X0Spec {
  enum class Mode { kLinspace, kUniform, kExplicit };
  Mode mode = Mode::kLinspace;
  double lo = -1.0;
  double hi = 1.0;
  std::uint64_t seed = 0;
  Eigen::VectorXd values;
};

Eigen::VectorXd generate_x0(const X0Spec& spec, int n_regular);

// Every regular agent listens to all stubborn agents plus its ring_degree
// nearest regular neighbors (ring_degree/2 on each side). Deterministic.
// ring_degree must be even, non-negative and < n_regular.
std::vector<Edge> generate_ring_topology(int n_regular, int n_stubborn,
                                         int ring_degree);

struct TopologySpec {
  bool use_generator = true;
  // generator parameters
  int n_regular = 0;
  int n_stubborn = 0;
  int ring_degree = 2;
  // explicit edge list (1-based ids), optional per-edge weights
  std::vector<Edge> edges;
  int n_agents = 0;
  std::vector<double> edge_weights;
};

// A cost matrix given either as scale * identity or verbatim.
struct MatrixSpec {
  bool is_scalar = true;
  double scalar = 1.0;
  Eigen::MatrixXd matrix;

  Eigen::MatrixXd resolve(int dim) const;
};

struct TerminalSpec {
  bool zero = true;
  Eigen::MatrixXd s11, s12, s22;
};

struct ScenarioConfig {
  TopologySpec topology;
  X0Spec x0;
  Eigen::VectorXd v0;

  int horizon = 1;
  double gamma = 1e-6;
  double epsilon = 1.0;
  Coupling coupling = Coupling::kIdentity;
  int max_inner_iterations = 100;
  bool warm_start = false;
  bool best_effort = false;
  S12Variant s12_variant = S12Variant::kStateClosedLoop;

  MatrixSpec q_spec{true, 0.1, {}};
  MatrixSpec r_spec{true, 1.0, {}};
  TerminalSpec terminal_spec;

  std::array<double, 2> opinion_interval{-1.0, 1.0};  // recorded, not enforced
  std::string output_dir = "out";

  SocialNetwork build_network_from_topology() const;
  GameConfig make_game_config(int n_regular, int n_stubborn) const;
  // Canonical echo of every field, defaults included. Hashing this is how
  // run manifests detect config changes.
  nlohmann::json resolved() const;
};

// Accepts a scenario document or a run manifest (unwraps its "config").
ScenarioConfig parse_scenario(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::string& path);

struct ValidationReport {
  struct Check {
    std::string name;
    bool ok = false;
    bool fatal = true;  // the anchor straddle is advisory for simulation runs
    std::string detail;
  };
  std::vector<Check> checks;
  bool all_ok() const;
  bool fatal_failure() const;
};

ValidationReport validate_scenario(const ScenarioConfig& config);

void write_trace_csv(std::ostream& os, const GameTrace& trace);
GameTrace read_trace_csv(std::istream& is);

std::string sha1_hex(std::string_view bytes);

struct RunArtifacts {
  std::filesystem::path trace_csv;
  std::vector<std::filesystem::path> figure_csv;
  std::filesystem::path manifest;
  GameTrace trace;
};

// Validates, simulates and writes trace.csv, the four figure files and
// manifest.json into the output directory. Fatal validation failures throw
// ConfigError before any compute.
RunArtifacts run_scenario(const ScenarioConfig& config,
                          const std::string& output_dir_override = {});

}  // namespace steer
