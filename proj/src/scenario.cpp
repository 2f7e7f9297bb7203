#include "steer/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "steer/errors.hpp"
#include "steer/random.hpp"

namespace steer {
namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const json& require(const json& doc, const char* key) {
  if (!doc.contains(key))
    throw ConfigError(std::string("missing config key \"") + key + "\"");
  return doc.at(key);
}

Eigen::VectorXd vector_from(const json& arr, const char* what) {
  if (!arr.is_array())
    throw ConfigError(std::string(what) + " must be an array of numbers");
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from(const json& arr, const char* what) {
  if (!arr.is_array() || arr.empty() || !arr[0].is_array())
    throw ConfigError(std::string(what) + " must be an array of arrays");
  const std::size_t cols = arr[0].size();
  Eigen::MatrixXd m(arr.size(), cols);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (arr[i].size() != cols)
      throw ConfigError(std::string(what) + " rows have unequal lengths");
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = arr[i][j].get<double>();
  }
  return m;
}

json vector_to(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json matrix_to(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    arr.push_back(row);
  }
  return arr;
}

MatrixSpec parse_matrix_spec(const json& doc, const char* what) {
  MatrixSpec spec;
  if (doc.is_number()) {
    spec.is_scalar = true;
    spec.scalar = doc.get<double>();
  } else if (doc.contains("scalar")) {
    spec.is_scalar = true;
    spec.scalar = doc.at("scalar").get<double>();
  } else if (doc.contains("explicit")) {
    spec.is_scalar = false;
    spec.matrix = matrix_from(doc.at("explicit"), what);
  } else {
    throw ConfigError(std::string(what) +
                      " must be a number, {\"scalar\": s} or {\"explicit\": "
                      "[[...]]}");
  }
  return spec;
}

json matrix_spec_to(const MatrixSpec& spec) {
  if (spec.is_scalar) return json{{"scalar", spec.scalar}};
  return json{{"explicit", matrix_to(spec.matrix)}};
}

S12Variant parse_variant(const std::string& name) {
  for (S12Variant v : {S12Variant::kStateClosedLoop,
                       S12Variant::kIdentityMinusBk,
                       S12Variant::kIdentityMinusBg})
    if (name == variant_name(v)) return v;
  throw ConfigError("unknown s12_variant \"" + name + "\"");
}

}  // namespace

Eigen::VectorXd generate_x0(const X0Spec& spec, int n_regular) {
  if (spec.mode != X0Spec::Mode::kExplicit && spec.lo >= spec.hi)
    throw BoundsError("x0 interval is empty");
  switch (spec.mode) {
    case X0Spec::Mode::kLinspace: {
      Eigen::VectorXd x(n_regular);
      const double span = spec.hi - spec.lo;
      for (int i = 0; i < n_regular; ++i)
        x(i) = spec.lo + span * static_cast<double>(i + 1) /
                             static_cast<double>(n_regular + 1);
      return x;
    }
    case X0Spec::Mode::kUniform:
      return Rng(spec.seed).vector(n_regular, spec.lo, spec.hi);
    case X0Spec::Mode::kExplicit:
      if (spec.values.size() != n_regular)
        throw DimensionMismatch("explicit x0 has length " +
                                std::to_string(spec.values.size()) +
                                ", expected " + std::to_string(n_regular));
      if (spec.values.size() > 0 && (spec.values.minCoeff() < spec.lo ||
                                     spec.values.maxCoeff() > spec.hi))
        throw BoundsError("explicit x0 leaves the configured interval");
      return spec.values;
  }
  throw ConfigError("unreachable x0 mode");
}

std::vector<Edge> generate_ring_topology(int n_regular, int n_stubborn,
                                         int ring_degree) {
  if (n_regular < 1 || n_stubborn < 2)
    throw ConfigError("ring topology needs n_regular >= 1, n_stubborn >= 2");
  if (ring_degree < 0 || ring_degree % 2 != 0 || ring_degree >= n_regular)
    throw InvalidDegree("ring_degree must be even, >= 0 and < n_regular");

  std::vector<Edge> edges;
  for (int i = 1; i <= n_regular; ++i) {
    for (int s = 0; s < n_stubborn; ++s)
      edges.push_back({n_regular + 1 + s, i});
    for (int m = 1; m <= ring_degree / 2; ++m) {
      const int left = (i - 1 - m + n_regular) % n_regular + 1;
      const int right = (i - 1 + m) % n_regular + 1;
      edges.push_back({left, i});
      edges.push_back({right, i});
    }
  }
  return edges;
}

Eigen::MatrixXd MatrixSpec::resolve(int dim) const {
  if (is_scalar)
    return scalar * Eigen::MatrixXd::Identity(dim, dim);
  if (matrix.rows() != dim || matrix.cols() != dim)
    throw DimensionMismatch("explicit matrix is " +
                            std::to_string(matrix.rows()) + "x" +
                            std::to_string(matrix.cols()) + ", expected " +
                            std::to_string(dim) + "x" + std::to_string(dim));
  return matrix;
}

SocialNetwork ScenarioConfig::build_network_from_topology() const {
  if (topology.use_generator) {
    return build_network(
        generate_ring_topology(topology.n_regular, topology.n_stubborn,
                               topology.ring_degree),
        topology.n_regular + topology.n_stubborn);
  }
  if (!topology.edge_weights.empty())
    return build_network_explicit(topology.edges, topology.edge_weights,
                                  topology.n_agents);
  return build_network(topology.edges, topology.n_agents);
}

GameConfig ScenarioConfig::make_game_config(int n_regular,
                                            int n_stubborn) const {
  GameConfig game;
  game.horizon = horizon;
  game.gamma = gamma;
  game.epsilon = epsilon;
  game.coupling = coupling;
  game.max_inner_iterations = max_inner_iterations;
  game.warm_start_inner = warm_start;
  game.best_effort = best_effort;
  game.s12_variant = s12_variant;
  game.weights.q = q_spec.resolve(n_regular);
  game.weights.r = r_spec.resolve(n_stubborn);
  if (terminal_spec.zero) {
    game.weights.s11n = Eigen::MatrixXd::Zero(n_regular, n_regular);
    game.weights.s12n = game.weights.s11n;
    game.weights.s22n = game.weights.s11n;
  } else {
    game.weights.s11n = terminal_spec.s11;
    game.weights.s12n = terminal_spec.s12;
    game.weights.s22n = terminal_spec.s22;
  }
  return game;
}

json ScenarioConfig::resolved() const {
  json doc;
  if (topology.use_generator) {
    doc["topology"]["generator"] = {{"n_regular", topology.n_regular},
                                    {"n_stubborn", topology.n_stubborn},
                                    {"ring_degree", topology.ring_degree}};
  } else {
    json edges = json::array();
    for (const Edge& e : topology.edges)
      edges.push_back(json::array({e.from, e.to}));
    doc["topology"]["edges"] = edges;
    doc["topology"]["n_agents"] = topology.n_agents;
    if (!topology.edge_weights.empty()) {
      json w = json::array();
      for (std::size_t i = 0; i < topology.edge_weights.size(); ++i)
        w.push_back(json::array({topology.edges[i].from, topology.edges[i].to,
                                 topology.edge_weights[i]}));
      doc["topology"]["weights"] = w;
    }
  }

  switch (x0.mode) {
    case X0Spec::Mode::kLinspace: doc["x0"]["mode"] = "linspace"; break;
    case X0Spec::Mode::kUniform: doc["x0"]["mode"] = "uniform"; break;
    case X0Spec::Mode::kExplicit: doc["x0"]["mode"] = "explicit"; break;
  }
  doc["x0"]["interval"] = json::array({x0.lo, x0.hi});
  if (x0.mode == X0Spec::Mode::kUniform) doc["x0"]["seed"] = x0.seed;
  if (x0.mode == X0Spec::Mode::kExplicit)
    doc["x0"]["values"] = vector_to(x0.values);

  doc["v0"] = vector_to(v0);
  doc["horizon"] = horizon;
  doc["gamma"] = gamma;
  doc["epsilon"] = epsilon;
  doc["coupling"] = coupling == Coupling::kIdentity ? "identity" : "all-ones";
  doc["max_inner_iterations"] = max_inner_iterations;
  doc["warm_start"] = warm_start;
  doc["best_effort"] = best_effort;
  doc["s12_variant"] = variant_name(s12_variant);
  doc["weights"]["Q"] = matrix_spec_to(q_spec);
  doc["weights"]["R"] = matrix_spec_to(r_spec);
  if (terminal_spec.zero) {
    doc["weights"]["terminal"] = "zero";
  } else {
    doc["weights"]["terminal"] = {{"S11", matrix_to(terminal_spec.s11)},
                                  {"S12", matrix_to(terminal_spec.s12)},
                                  {"S22", matrix_to(terminal_spec.s22)}};
  }
  doc["opinion_interval"] = json::array({opinion_interval[0],
                                         opinion_interval[1]});
  doc["output_dir"] = output_dir;
  return doc;
}

ScenarioConfig parse_scenario(const json& input) {
  const json& doc = input.contains("config") ? input.at("config") : input;
  ScenarioConfig cfg;

  const json& topo = require(doc, "topology");
  if (topo.contains("generator")) {
    const json& gen = topo.at("generator");
    cfg.topology.use_generator = true;
    cfg.topology.n_regular = require(gen, "n_regular").get<int>();
    cfg.topology.n_stubborn = require(gen, "n_stubborn").get<int>();
    cfg.topology.ring_degree =
        gen.contains("ring_degree") ? gen.at("ring_degree").get<int>() : 2;
  } else if (topo.contains("edges")) {
    cfg.topology.use_generator = false;
    cfg.topology.n_agents = require(topo, "n_agents").get<int>();
    for (const json& e : topo.at("edges")) {
      if (!e.is_array() || e.size() != 2)
        throw ConfigError("edges must be [from, to] pairs");
      cfg.topology.edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    if (topo.contains("weights")) {
      cfg.topology.edges.clear();
      for (const json& e : topo.at("weights")) {
        if (!e.is_array() || e.size() != 3)
          throw ConfigError("explicit weights must be [from, to, w] triples");
        cfg.topology.edges.push_back({e[0].get<int>(), e[1].get<int>()});
        cfg.topology.edge_weights.push_back(e[2].get<double>());
      }
    }
  } else {
    throw ConfigError("topology needs either \"generator\" or \"edges\"");
  }

  const json& x0 = require(doc, "x0");
  const std::string mode = require(x0, "mode").get<std::string>();
  if (mode == "linspace")
    cfg.x0.mode = X0Spec::Mode::kLinspace;
  else if (mode == "uniform")
    cfg.x0.mode = X0Spec::Mode::kUniform;
  else if (mode == "explicit")
    cfg.x0.mode = X0Spec::Mode::kExplicit;
  else
    throw ConfigError("x0 mode must be linspace, uniform or explicit");
  if (x0.contains("interval")) {
    cfg.x0.lo = x0.at("interval").at(0).get<double>();
    cfg.x0.hi = x0.at("interval").at(1).get<double>();
  }
  if (cfg.x0.mode == X0Spec::Mode::kUniform)
    cfg.x0.seed = require(x0, "seed").get<std::uint64_t>();
  if (cfg.x0.mode == X0Spec::Mode::kExplicit)
    cfg.x0.values = vector_from(require(x0, "values"), "x0 values");

  cfg.v0 = vector_from(require(doc, "v0"), "v0");
  cfg.horizon = require(doc, "horizon").get<int>();
  if (doc.contains("gamma")) cfg.gamma = doc.at("gamma").get<double>();
  if (doc.contains("epsilon")) cfg.epsilon = doc.at("epsilon").get<double>();
  if (doc.contains("coupling")) {
    const std::string c = doc.at("coupling").get<std::string>();
    if (c == "identity")
      cfg.coupling = Coupling::kIdentity;
    else if (c == "all-ones")
      cfg.coupling = Coupling::kAllOnes;
    else
      throw ConfigError("coupling must be \"identity\" or \"all-ones\"");
  }
  if (doc.contains("max_inner_iterations"))
    cfg.max_inner_iterations = doc.at("max_inner_iterations").get<int>();
  if (doc.contains("warm_start"))
    cfg.warm_start = doc.at("warm_start").get<bool>();
  if (doc.contains("best_effort"))
    cfg.best_effort = doc.at("best_effort").get<bool>();
  if (doc.contains("s12_variant"))
    cfg.s12_variant = parse_variant(doc.at("s12_variant").get<std::string>());

  const json& weights = require(doc, "weights");
  cfg.q_spec = parse_matrix_spec(require(weights, "Q"), "Q");
  cfg.r_spec = parse_matrix_spec(require(weights, "R"), "R");
  if (weights.contains("terminal") && weights.at("terminal") != "zero") {
    const json& t = weights.at("terminal");
    cfg.terminal_spec.zero = false;
    cfg.terminal_spec.s11 = matrix_from(require(t, "S11"), "terminal S11");
    cfg.terminal_spec.s12 = matrix_from(require(t, "S12"), "terminal S12");
    cfg.terminal_spec.s22 = matrix_from(require(t, "S22"), "terminal S22");
  }

  if (doc.contains("opinion_interval")) {
    cfg.opinion_interval[0] = doc.at("opinion_interval").at(0).get<double>();
    cfg.opinion_interval[1] = doc.at("opinion_interval").at(1).get<double>();
  }
  if (doc.contains("output_dir"))
    cfg.output_dir = doc.at("output_dir").get<std::string>();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open config file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_scenario(doc);
}

bool ValidationReport::all_ok() const {
  for (const Check& c : checks)
    if (!c.ok) return false;
  return true;
}

bool ValidationReport::fatal_failure() const {
  for (const Check& c : checks)
    if (!c.ok && c.fatal) return true;
  return false;
}

ValidationReport validate_scenario(const ScenarioConfig& config) {
  ValidationReport report;
  auto add = [&](std::string name, bool ok, std::string detail,
                 bool fatal = true) {
    report.checks.push_back({std::move(name), ok, fatal, std::move(detail)});
  };

  SocialNetwork net;
  bool have_net = false;
  try {
    net = config.build_network_from_topology();
    have_net = true;
    add("topology builds", true, "");
  } catch (const Error& e) {
    add("topology builds", false, e.what());
  }

  if (have_net) {
    const Eigen::VectorXd row_sums =
        net.weight_matrix.rowwise().sum();
    const double worst =
        (row_sums - Eigen::VectorXd::Ones(net.n_regular)).cwiseAbs().maxCoeff();
    add("influence rows sum to 1", worst <= 1e-12,
        "max deviation " + format_double(worst));

    if (config.v0.size() != net.n_stubborn()) {
      add("v0 length matches stubborn count", false,
          std::to_string(config.v0.size()) + " vs " +
              std::to_string(net.n_stubborn()));
    } else {
      add("v0 length matches stubborn count", true, "");
      const AnchorReport anchors = validate_anchors(net, config.v0);
      add("stubborn anchors straddle 0", anchors.ok, anchors.detail,
          /*fatal=*/false);
    }

    try {
      generate_x0(config.x0, net.n_regular);
      add("x0 resolves", true, "");
    } catch (const Error& e) {
      add("x0 resolves", false, e.what());
    }

    try {
      const GameConfig game =
          config.make_game_config(net.n_regular, net.n_stubborn());
      game.validate(net.n_regular, net.n_stubborn());
      add("game parameters valid (R PD, Q PSD, terminal PSD)", true, "");
    } catch (const Error& e) {
      add("game parameters valid (R PD, Q PSD, terminal PSD)", false,
          e.what());
    }
  }
  return report;
}

void write_trace_csv(std::ostream& os, const GameTrace& trace) {
  const int n = trace.horizon();
  const int nr = static_cast<int>(trace.x.front().size());
  const int ns = static_cast<int>(trace.v.front().size());

  os << "k";
  for (int i = 1; i <= nr; ++i) os << ",x_" << i;
  for (int i = 1; i <= ns; ++i) os << ",v_" << i;
  for (int i = 1; i <= ns; ++i) os << ",u_" << i;
  for (int i = 1; i <= nr; ++i) os << ",y_" << i;
  os << ",V_k,inner_iterations\n";

  for (int k = 0; k <= n; ++k) {
    os << k;
    for (int i = 0; i < nr; ++i) os << ',' << format_double(trace.x[k](i));
    for (int i = 0; i < ns; ++i) os << ',' << format_double(trace.v[k](i));
    if (k < n) {
      for (int i = 0; i < ns; ++i) os << ',' << format_double(trace.u[k](i));
      for (int i = 0; i < nr; ++i) os << ',' << format_double(trace.y[k](i));
      os << ',' << format_double(trace.leader_value[k]);
      os << ',' << trace.inner_iterations[k];
    } else {
      for (int i = 0; i < ns + nr + 2; ++i) os << ',';
    }
    os << '\n';
  }
}

namespace {

double parse_cell(const std::string& cell) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw IOError("trailing junk in cell " + cell);
    return v;
  } catch (const std::logic_error&) {
    throw IOError("unparseable trace cell \"" + cell + "\"");
  }
}

}  // namespace

GameTrace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IOError("trace csv is empty");

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  int nr = 0, ns = 0;
  for (const std::string& h : header) {
    if (h.rfind("x_", 0) == 0) ++nr;
    if (h.rfind("v_", 0) == 0) ++ns;
  }
  if (nr == 0 || header.size() != 2u * (nr + ns) + 3u)
    throw IOError("unrecognized trace csv header");

  GameTrace trace;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    cells.resize(header.size());  // trailing empties drop out of getline

    int pos = 1;
    Eigen::VectorXd x(nr), v(ns);
    for (int i = 0; i < nr; ++i) x(i) = parse_cell(cells[pos++]);
    for (int i = 0; i < ns; ++i) v(i) = parse_cell(cells[pos++]);
    trace.x.push_back(x);
    trace.v.push_back(v);
    if (!cells[pos].empty()) {
      Eigen::VectorXd u(ns), y(nr);
      for (int i = 0; i < ns; ++i) u(i) = parse_cell(cells[pos++]);
      for (int i = 0; i < nr; ++i) y(i) = parse_cell(cells[pos++]);
      trace.u.push_back(u);
      trace.y.push_back(y);
      trace.leader_value.push_back(parse_cell(cells[pos++]));
      trace.inner_iterations.push_back(
          static_cast<int>(parse_cell(cells[pos++])));
      trace.converged.push_back(true);
    }
  }
  if (trace.x.size() != trace.u.size() + 1)
    throw IOError("trace csv has inconsistent row structure");
  return trace;
}

std::string sha1_hex(std::string_view bytes) {
  std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u,
                        0xC3D2E1F0u};
  std::vector<unsigned char> msg(bytes.begin(), bytes.end());
  const std::uint64_t bit_length = static_cast<std::uint64_t>(msg.size()) * 8;
  msg.push_back(0x80);
  while (msg.size() % 64 != 56) msg.push_back(0);
  for (int i = 7; i >= 0; --i)
    msg.push_back(static_cast<unsigned char>((bit_length >> (8 * i)) & 0xff));

  auto rotl = [](std::uint32_t x, int s) {
    return (x << s) | (x >> (32 - s));
  };
  for (std::size_t chunk = 0; chunk + 64 <= msg.size(); chunk += 64) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i) {
      w[i] = (static_cast<std::uint32_t>(msg[chunk + 4 * i]) << 24) |
             (static_cast<std::uint32_t>(msg[chunk + 4 * i + 1]) << 16) |
             (static_cast<std::uint32_t>(msg[chunk + 4 * i + 2]) << 8) |
             static_cast<std::uint32_t>(msg[chunk + 4 * i + 3]);
    }
    for (int i = 16; i < 80; ++i)
      w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);

    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const std::uint32_t temp = rotl(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rotl(b, 30);
      b = a;
      a = temp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  char out[41];
  std::snprintf(out, sizeof out, "%08x%08x%08x%08x%08x", h[0], h[1], h[2],
                h[3], h[4]);
  return out;
}

RunArtifacts run_scenario(const ScenarioConfig& config,
                          const std::string& output_dir_override) {
  ScenarioConfig cfg = config;
  if (!output_dir_override.empty()) cfg.output_dir = output_dir_override;

  const ValidationReport report = validate_scenario(cfg);
  if (report.fatal_failure()) {
    std::string what = "scenario rejected:";
    for (const auto& check : report.checks)
      if (!check.ok && check.fatal)
        what += " [" + check.name + ": " + check.detail + "]";
    throw ConfigError(what);
  }

  const SocialNetwork net = cfg.build_network_from_topology();
  const Eigen::VectorXd x0 = generate_x0(cfg.x0, net.n_regular);
  const GameConfig game = cfg.make_game_config(net.n_regular, net.n_stubborn());

  const auto t_start = std::chrono::steady_clock::now();
  GameTrace trace = simulate(game, net, x0, cfg.v0);
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IOError("cannot create output directory " + dir.string());

  auto open = [&](const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IOError("cannot write " + p.string());
    return os;
  };

  RunArtifacts artifacts;
  artifacts.trace_csv = dir / "trace.csv";
  {
    std::ofstream os = open(artifacts.trace_csv);
    write_trace_csv(os, trace);
  }

  const int n = trace.horizon();
  const int nr = net.n_regular;
  const int ns = net.n_stubborn();

  {
    const fs::path p = dir / "fig1_stubborn_opinions.csv";
    std::ofstream os = open(p);
    os << "k";
    for (int i = 1; i <= ns; ++i) os << ",v_" << i;
    for (int i = 1; i <= ns; ++i) os << ",vref_" << i;
    os << "\n";
    for (int k = 0; k <= n; ++k) {
      os << k;
      for (int i = 0; i < ns; ++i) os << ',' << format_double(trace.v[k](i));
      for (int i = 0; i < ns; ++i) os << ',' << format_double(cfg.v0(i));
      os << '\n';
    }
    artifacts.figure_csv.push_back(p);
  }
  {
    const fs::path p = dir / "fig2_optimal_cost.csv";
    std::ofstream os = open(p);
    os << "k,V_k\n";
    for (int k = 0; k < n; ++k)
      os << k << ',' << format_double(trace.leader_value[k]) << '\n';
    artifacts.figure_csv.push_back(p);
  }
  {
    const fs::path p = dir / "fig3_openness.csv";
    std::ofstream os = open(p);
    os << "k";
    for (int i = 1; i <= nr; ++i) os << ",y_" << i;
    os << "\n";
    for (int k = 0; k < n; ++k) {
      os << k;
      for (int i = 0; i < nr; ++i) os << ',' << format_double(trace.y[k](i));
      os << '\n';
    }
    artifacts.figure_csv.push_back(p);
  }
  {
    const fs::path p = dir / "fig4_regular_opinions.csv";
    std::ofstream os = open(p);
    os << "k";
    for (int i = 1; i <= nr; ++i) os << ",x_" << i;
    os << "\n";
    for (int k = 0; k <= n; ++k) {
      os << k;
      for (int i = 0; i < nr; ++i) os << ',' << format_double(trace.x[k](i));
      os << '\n';
    }
    artifacts.figure_csv.push_back(p);
  }

  nlohmann::json manifest;
  manifest["config"] = cfg.resolved();
  manifest["config_hash"] = sha1_hex(manifest["config"].dump());
  manifest["artifacts"] = {{"trace", "trace.csv"},
                           {"figures",
                            {"fig1_stubborn_opinions.csv",
                             "fig2_optimal_cost.csv", "fig3_openness.csv",
                             "fig4_regular_opinions.csv"}}};
  double max_qp = 0, max_dp = 0;
  int total_inner = 0;
  for (int k = 0; k < n; ++k) {
    max_qp = std::max(max_qp, trace.qp_residual[k]);
    max_dp = std::max(max_dp, trace.dp_residual[k]);
    total_inner += trace.inner_iterations[k];
  }
  manifest["diagnostics"] = {
      {"converged", trace.all_converged()},
      {"total_inner_iterations", total_inner},
      {"max_qp_residual", max_qp},
      {"max_dp_residual", max_dp},
      {"max_s12_asymmetry", trace.max_s12_asymmetry},
      {"min_s11_eigenvalue", trace.min_s11_eigenvalue},
      {"runtime_seconds", runtime},
      {"warnings", trace.warnings},
  };

  artifacts.manifest = dir / "manifest.json";
  {
    std::ofstream os = open(artifacts.manifest);
    os << manifest.dump(2) << '\n';
  }
  artifacts.trace = std::move(trace);
  return artifacts;
}

}  // namespace steer
