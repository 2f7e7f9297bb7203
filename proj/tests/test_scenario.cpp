#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "steer/errors.hpp"
#include "steer/scenario.hpp"

using namespace steer;
using nlohmann::json;

namespace {

json toy_doc() {
  return json::parse(R"({
    "topology": {"generator": {"n_regular": 4, "n_stubborn": 2, "ring_degree": 2}},
    "x0": {"mode": "linspace", "interval": [-1.0, 1.0]},
    "v0": [-1.0, 1.0],
    "horizon": 1,
    "gamma": 1e-8,
    "epsilon": 1.0,
    "weights": {"Q": {"scalar": 0.1}, "R": {"scalar": 1.0}, "terminal": "zero"},
    "output_dir": "out/toy"
  })");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("ring generator shapes") {
  // degree zero collapses to the stubborn-only bipartite graph
  const auto bipartite = generate_ring_topology(2, 2, 0);
  CHECK(bipartite.size() == 4);
  const SocialNetwork net = build_network(bipartite, 4);
  CHECK(net.weight_matrix(0, 2) == 0.5);
  CHECK(net.weight_matrix(0, 3) == 0.5);

  const SocialNetwork mid = build_network(generate_ring_topology(4, 2, 2), 6);
  for (int i = 0; i < 4; ++i) {
    CHECK(mid.in_neighbors[i].size() == 4);
    CHECK(std::abs(mid.weight_matrix.row(i).sum() - 1.0) <= 1e-12);
  }

  CHECK_THROWS_AS(generate_ring_topology(4, 2, 3), InvalidDegree);
  CHECK_THROWS_AS(generate_ring_topology(4, 2, -2), InvalidDegree);
  CHECK_THROWS_AS(generate_ring_topology(4, 2, 4), InvalidDegree);
  CHECK_THROWS_AS(generate_ring_topology(4, 1, 2), ConfigError);
}

TEST_CASE("x0 generation modes") {
  X0Spec spec;
  spec.mode = X0Spec::Mode::kLinspace;
  const Eigen::VectorXd lin = generate_x0(spec, 3);
  CHECK(lin(0) == -0.5);
  CHECK(lin(1) == 0.0);
  CHECK(lin(2) == 0.5);

  spec.mode = X0Spec::Mode::kUniform;
  spec.seed = 7;
  const Eigen::VectorXd u1 = generate_x0(spec, 10);
  const Eigen::VectorXd u2 = generate_x0(spec, 10);
  CHECK(u1.isApprox(u2, 0));
  CHECK(u1.minCoeff() >= -1.0);
  CHECK(u1.maxCoeff() <= 1.0);

  spec.mode = X0Spec::Mode::kExplicit;
  spec.values = Eigen::Vector2d(0.2, -0.2);
  CHECK(generate_x0(spec, 2).isApprox(Eigen::Vector2d(0.2, -0.2)));
  spec.values = Eigen::Vector2d(1.5, 0);
  CHECK_THROWS_AS(generate_x0(spec, 2), BoundsError);
  spec.values = Eigen::Vector2d(0.2, -0.2);
  CHECK_THROWS_AS(generate_x0(spec, 3), DimensionMismatch);

  spec.mode = X0Spec::Mode::kLinspace;
  spec.lo = 1.0;
  spec.hi = -1.0;
  CHECK_THROWS_AS(generate_x0(spec, 3), BoundsError);
}

TEST_CASE("scenario parsing and canonical echo") {
  const ScenarioConfig cfg = parse_scenario(toy_doc());
  CHECK(cfg.topology.use_generator);
  CHECK(cfg.topology.n_regular == 4);
  CHECK(cfg.horizon == 1);
  CHECK(cfg.gamma == 1e-8);
  CHECK(cfg.coupling == Coupling::kIdentity);
  CHECK(cfg.q_spec.is_scalar);
  CHECK(cfg.q_spec.scalar == 0.1);

  // canonicalization is idempotent, so the hash is stable
  const json echo = cfg.resolved();
  const ScenarioConfig reparsed = parse_scenario(echo);
  CHECK(reparsed.resolved() == echo);
  CHECK(sha1_hex(reparsed.resolved().dump()) == sha1_hex(echo.dump()));

  // any field change moves the hash
  const std::string base_hash = sha1_hex(echo.dump());
  ScenarioConfig tweaked = cfg;
  tweaked.gamma = 2e-8;
  CHECK(sha1_hex(tweaked.resolved().dump()) != base_hash);
  tweaked = cfg;
  tweaked.coupling = Coupling::kAllOnes;
  CHECK(sha1_hex(tweaked.resolved().dump()) != base_hash);
  tweaked = cfg;
  tweaked.q_spec.scalar = 0.2;
  CHECK(sha1_hex(tweaked.resolved().dump()) != base_hash);
  tweaked = cfg;
  tweaked.topology.ring_degree = 0;
  CHECK(sha1_hex(tweaked.resolved().dump()) != base_hash);
}

TEST_CASE("parsing failures name the offender") {
  json doc = toy_doc();
  doc.erase("horizon");
  CHECK_THROWS_WITH_AS(parse_scenario(doc),
                       doctest::Contains("horizon"), ConfigError);

  doc = toy_doc();
  doc["coupling"] = "both";
  CHECK_THROWS_AS(parse_scenario(doc), ConfigError);

  doc = toy_doc();
  doc["topology"] = json::object();
  CHECK_THROWS_AS(parse_scenario(doc), ConfigError);

  doc = toy_doc();
  doc["weights"].erase("R");
  CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("R"),
                       ConfigError);
}

TEST_CASE("explicit topology with weights parses") {
  json doc = toy_doc();
  doc["topology"] = {{"edges", json::array({json::array({3, 1}),
                                            json::array({4, 1}),
                                            json::array({3, 2}),
                                            json::array({4, 2})})},
                     {"n_agents", 4}};
  doc["x0"] = {{"mode", "explicit"},
               {"interval", json::array({-1.0, 1.0})},
               {"values", json::array({0.2, -0.2})}};
  const ScenarioConfig cfg = parse_scenario(doc);
  const SocialNetwork net = cfg.build_network_from_topology();
  CHECK(net.n_regular == 2);

  doc["topology"]["weights"] =
      json::array({json::array({3, 1, 0.25}), json::array({4, 1, 0.75}),
                   json::array({3, 2, 0.5}), json::array({4, 2, 0.5})});
  const ScenarioConfig weighted = parse_scenario(doc);
  const SocialNetwork wnet = weighted.build_network_from_topology();
  CHECK(wnet.weight_matrix(0, 2) == 0.25);
  CHECK(wnet.weight_matrix(0, 3) == 0.75);
}

TEST_CASE("validation report separates fatal and advisory checks") {
  ScenarioConfig cfg = parse_scenario(toy_doc());
  ValidationReport report = validate_scenario(cfg);
  CHECK(report.all_ok());

  // anchors on one side: advisory failure
  cfg.v0 = Eigen::Vector2d(1.0, 2.0);
  report = validate_scenario(cfg);
  CHECK_FALSE(report.all_ok());
  CHECK_FALSE(report.fatal_failure());

  // non-stochastic explicit weights: fatal
  ScenarioConfig bad = parse_scenario(toy_doc());
  bad.topology.use_generator = false;
  bad.topology.n_agents = 3;
  bad.topology.edges = {{2, 1}, {3, 1}};
  bad.topology.edge_weights = {0.3, 0.6};
  report = validate_scenario(bad);
  CHECK(report.fatal_failure());
  bool found = false;
  for (const auto& check : report.checks)
    if (!check.ok && check.detail.find("sum") != std::string::npos)
      found = true;
  CHECK(found);

  // R not positive definite: fatal, named
  ScenarioConfig bad_r = parse_scenario(toy_doc());
  bad_r.r_spec.scalar = -1.0;
  report = validate_scenario(bad_r);
  CHECK(report.fatal_failure());
  CHECK_THROWS_WITH_AS(run_scenario(bad_r, "out/should_not_exist"),
                       doctest::Contains("positive definite"), ConfigError);
}

TEST_CASE("toy run writes artifacts that round-trip") {
  ScenarioConfig cfg = parse_scenario(toy_doc());
  const std::filesystem::path dir =
      std::filesystem::path("test_out") / "toy_run";
  std::filesystem::remove_all(dir);
  const RunArtifacts artifacts = run_scenario(cfg, dir.string());

  CHECK(std::filesystem::exists(artifacts.trace_csv));
  CHECK(artifacts.figure_csv.size() == 4);
  for (const auto& p : artifacts.figure_csv)
    CHECK(std::filesystem::exists(p));

  // state figures carry horizon+1 rows, per-step figures carry horizon rows
  const auto line_count = [&](const std::filesystem::path& p) {
    const std::string body = slurp(p);
    return std::count(body.begin(), body.end(), '\n');
  };
  CHECK(line_count(artifacts.figure_csv[0]) == 3);  // stubborn opinions
  CHECK(line_count(artifacts.figure_csv[1]) == 2);  // cost-to-go
  CHECK(line_count(artifacts.figure_csv[2]) == 2);  // openness
  CHECK(line_count(artifacts.figure_csv[3]) == 3);  // regular opinions

  // n = 1: header, two state rows; the final row has empty control cells
  const std::string csv = slurp(artifacts.trace_csv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find(",,") != std::string::npos);

  // parse + re-emit is byte identical
  std::istringstream in(csv);
  const GameTrace parsed = read_trace_csv(in);
  std::ostringstream out;
  write_trace_csv(out, parsed);
  CHECK(out.str() == csv);

  // manifest echoes the config and hashes it
  const json manifest = json::parse(slurp(artifacts.manifest));
  CHECK(manifest.contains("config"));
  CHECK(manifest["config_hash"] == sha1_hex(manifest["config"].dump()));
  CHECK(manifest["diagnostics"]["converged"].get<bool>());

  // replaying the manifest reproduces the trace bit for bit
  const ScenarioConfig replay = load_scenario(artifacts.manifest.string());
  const std::filesystem::path dir2 =
      std::filesystem::path("test_out") / "toy_replay";
  std::filesystem::remove_all(dir2);
  const RunArtifacts again = run_scenario(replay, dir2.string());
  CHECK(slurp(again.trace_csv) == csv);
}

TEST_CASE("trace csv reader rejects garbage") {
  std::istringstream bad("this,is,not,a,trace\n1,2,3\n");
  CHECK_THROWS_AS(read_trace_csv(bad), IOError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_trace_csv(empty), IOError);
  std::istringstream bad_cell(
      "k,x_1,v_1,u_1,y_1,V_k,inner_iterations\n0,abc,1,0,0,0,1\n");
  CHECK_THROWS_AS(read_trace_csv(bad_cell), IOError);
}

TEST_CASE("sha1 known answers") {
  CHECK(sha1_hex("") == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(sha1_hex("The quick brown fox jumps over the lazy dog") ==
        "2fd4e1c67a2d28fced849ee1bb76e7391b93eb12");
}

TEST_CASE("bundled scenarios parse and validate") {
  const ScenarioConfig toy = load_scenario(std::string(SCENARIO_DIR) +
                                           "/toy.json");
  CHECK(validate_scenario(toy).all_ok());

  const ScenarioConfig big = load_scenario(std::string(SCENARIO_DIR) +
                                           "/society98.json");
  CHECK(big.topology.n_regular == 96);
  CHECK(big.coupling == Coupling::kAllOnes);
  CHECK(validate_scenario(big).all_ok());
}
