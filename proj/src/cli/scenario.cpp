#include <cmath>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "obetc/cli.hpp"

namespace obetc::cli {
namespace detail {
std::span<const std::pair<std::string_view, std::string_view>> bundled_entries();
}

namespace {

class Reader {
 public:
  Reader(std::string origin, fs::path base_dir)
      : origin_(std::move(origin)), base_dir_(std::move(base_dir)) {}

  [[noreturn]] void fail(const std::string& field, const YAML::Node& node,
                         const std::string& msg) const {
    std::ostringstream os;
    os << origin_ << ": " << field;
    if (node.IsDefined() && node.Mark().line >= 0) os << " (line " << node.Mark().line + 1 << ")";
    os << ": " << msg;
    throw Error(ErrorCode::kConfig, os.str());
  }

  void only_keys(const YAML::Node& map, const std::string& field,
                 std::initializer_list<std::string_view> allowed) const {
    if (!map.IsMap()) fail(field, map, "expected a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      bool known = false;
      for (auto a : allowed) known = known || a == key;
      if (!known) fail(field.empty() ? key : field + "." + key, kv.first, "unknown key");
    }
  }

  double number(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(field, node, "expected a number");
    const auto text = node.Scalar();
    if (text == "inf" || text == ".inf") return std::numeric_limits<double>::infinity();
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      fail(field, node, "cannot parse '" + text + "' as a number");
    }
  }

  std::size_t count(const YAML::Node& node, const std::string& field) const {
    const double v = number(node, field);
    if (!(v >= 1.0) || v != std::floor(v)) fail(field, node, "expected a positive integer");
    return static_cast<std::size_t>(v);
  }

  Vector vector(const YAML::Node& node, const std::string& field) const {
    if (!node.IsSequence()) fail(field, node, "expected a list of numbers");
    Vector v(static_cast<Eigen::Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) {
      v(static_cast<Eigen::Index>(i)) = number(node[i], field + "[" + std::to_string(i) + "]");
    }
    return v;
  }

  /// Row lists, `identity`, a bare number (scaled identity), `{identity: k}`
  /// or `{csv: path}`. `size` is the expected square size or -1 if unknown.
  Matrix matrix(const YAML::Node& node, const std::string& field, Eigen::Index size = -1) const {
    if (node.IsScalar()) {
      if (size < 0) fail(field, node, "size is not known here; give explicit rows");
      if (node.Scalar() == "identity") return Matrix::Identity(size, size);
      return number(node, field) * Matrix::Identity(size, size);
    }
    if (node.IsMap()) {
      if (node["identity"]) {
        const auto k = static_cast<Eigen::Index>(count(node["identity"], field + ".identity"));
        return Matrix::Identity(k, k);
      }
      if (node["csv"]) return csv_matrix(node["csv"], field + ".csv");
      fail(field, node, "expected rows, 'identity', {identity: k} or {csv: path}");
    }
    if (!node.IsSequence() || node.size() == 0) fail(field, node, "expected a list of rows");
    std::vector<Vector> rows;
    for (std::size_t i = 0; i < node.size(); ++i) {
      rows.push_back(vector(node[i], field + "[" + std::to_string(i) + "]"));
      if (rows.back().size() != rows.front().size()) {
        fail(field, node[i], "row " + std::to_string(i) + " has " +
                                 std::to_string(rows.back().size()) + " entries, expected " +
                                 std::to_string(rows.front().size()));
      }
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
    return m;
  }

  fs::path path(const YAML::Node& node, const std::string& field) const {
    if (!node.IsScalar()) fail(field, node, "expected a path");
    fs::path p(node.Scalar());
    return p.is_absolute() ? p : base_dir_ / p;
  }

 private:
  Matrix csv_matrix(const YAML::Node& node, const std::string& field) const {
    const auto file = path(node, field);
    std::ifstream in(file);
    if (!in) fail(field, node, "cannot open " + file.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::vector<double> row;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        try {
          std::size_t used = 0;
          row.push_back(std::stod(cell, &used));
          if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::exception();
        } catch (const std::exception&) {
          fail(field, node, file.string() + ":" + std::to_string(line_no) + ": bad number '" +
                                cell + "'");
        }
      }
      if (!rows.empty() && row.size() != rows.front().size()) {
        fail(field, node, file.string() + ":" + std::to_string(line_no) + ": ragged row");
      }
      rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(field, node, file.string() + " is empty");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows[i].size(); ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
  }

  std::string origin_;
  fs::path base_dir_;
};

void expect_shape(const Reader& rd, const YAML::Node& node, const std::string& field,
                  const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    rd.fail(field, node, "expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                             ", got " + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()));
  }
}

void parse_model(const Reader& rd, const YAML::Node& node, Scenario& s) {
  rd.only_keys(node, "model", {"A", "B", "C", "D", "identify"});
  if (node["identify"]) {
    const auto id = node["identify"];
    rd.only_keys(id, "model.identify",
                 {"dataset", "hankel_blocks", "energy_threshold", "regularization"});
    if (node["A"] || node["B"] || node["C"]) {
      rd.fail("model", node, "give either matrices or an identify directive, not both");
    }
    IdentifyDirective dir;
    if (!id["dataset"]) rd.fail("model.identify.dataset", id, "missing");
    dir.dataset = rd.path(id["dataset"], "model.identify.dataset");
    if (id["hankel_blocks"]) {
      dir.era.hankel_blocks = rd.count(id["hankel_blocks"], "model.identify.hankel_blocks");
    }
    if (id["energy_threshold"]) {
      dir.era.energy_threshold =
          rd.number(id["energy_threshold"], "model.identify.energy_threshold");
    }
    if (id["regularization"]) {
      dir.era.regularization = rd.number(id["regularization"], "model.identify.regularization");
    }
    const auto data = era::read_dataset_csv(dir.dataset);
    s.identified = era::identify(data, dir.era);
    s.model = discrete_to_continuous(s.identified->model);
    s.identify = std::move(dir);
    return;
  }
  for (const char* key : {"A", "B", "C"}) {
    if (!node[key]) rd.fail(std::string("model.") + key, node, "missing");
  }
  s.model.A = rd.matrix(node["A"], "model.A");
  const Eigen::Index n = s.model.A.rows();
  expect_shape(rd, node["A"], "model.A", s.model.A, n, n);
  s.model.B = rd.matrix(node["B"], "model.B");
  expect_shape(rd, node["B"], "model.B", s.model.B, n, s.model.B.cols());
  s.model.C = rd.matrix(node["C"], "model.C");
  expect_shape(rd, node["C"], "model.C", s.model.C, s.model.C.rows(), n);
  if (node["D"]) {
    s.model.D = rd.matrix(node["D"], "model.D");
    expect_shape(rd, node["D"], "model.D", s.model.D, s.model.C.rows(), s.model.B.cols());
  } else {
    s.model.D = Matrix::Zero(s.model.C.rows(), s.model.B.cols());
  }
  s.model.discrete = false;
}

}  // namespace

Scenario parse_scenario(std::string_view yaml, const std::string& origin,
                        const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    std::ostringstream os;
    os << origin << ": YAML syntax error at line " << e.mark.line + 1 << ": " << e.msg;
    throw Error(ErrorCode::kConfig, os.str());
  }
  const Reader rd(origin, base_dir);
  if (!root.IsMap()) rd.fail("(document)", root, "expected a mapping at the top level");
  rd.only_keys(root, "", {"name", "model", "weights", "trigger", "simulation"});

  Scenario s;
  s.name = root["name"] ? root["name"].as<std::string>() : fs::path(origin).stem().string();
  if (!root["model"]) rd.fail("model", root, "missing");
  parse_model(rd, root["model"], s);
  const Eigen::Index n = s.model.n(), m = s.model.m(), q = s.model.q();

  const auto w = root["weights"];
  if (w) rd.only_keys(w, "weights", {"Q", "R", "W", "V"});
  auto weight = [&](const char* key, Eigen::Index size) {
    const std::string field = std::string("weights.") + key;
    if (!w || !w[key]) return Matrix(Matrix::Identity(size, size));
    Matrix v = rd.matrix(w[key], field, size);
    expect_shape(rd, w[key], field, v, size, size);
    return v;
  };
  s.weights = {weight("Q", n), weight("R", m), weight("W", n), weight("V", q)};

  if (const auto t = root["trigger"]) {
    rd.only_keys(t, "trigger", {"sigma", "epsilon", "Q_tilde"});
    if (t["sigma"]) s.sigma = rd.number(t["sigma"], "trigger.sigma");
    if (t["epsilon"]) s.epsilon = rd.number(t["epsilon"], "trigger.epsilon");
    if (t["Q_tilde"]) {
      s.Q_tilde = rd.matrix(t["Q_tilde"], "trigger.Q_tilde", 2 * n);
      expect_shape(rd, t["Q_tilde"], "trigger.Q_tilde", s.Q_tilde, 2 * n, 2 * n);
    }
    if (!(s.sigma > 0.0 && s.sigma <= 1.0)) {
      rd.fail("trigger.sigma", t["sigma"], "must lie in (0, 1]");
    }
    if (!(s.epsilon >= 0.0)) rd.fail("trigger.epsilon", t["epsilon"], "must be non-negative");
  }

  s.sim.x0 = Vector::Zero(n);
  s.sim.xhat0 = Vector::Zero(n);
  if (const auto c = root["simulation"]) {
    rd.only_keys(c, "simulation", {"step", "horizon", "x0", "xhat0", "policy", "delay"});
    if (c["step"]) s.sim.step = rd.number(c["step"], "simulation.step");
    if (c["horizon"]) s.sim.horizon = rd.number(c["horizon"], "simulation.horizon");
    if (c["delay"]) s.sim.delay = rd.number(c["delay"], "simulation.delay");
    for (auto [key, target] : {std::pair{"x0", &s.sim.x0}, std::pair{"xhat0", &s.sim.xhat0}}) {
      if (!c[key]) continue;
      const std::string field = std::string("simulation.") + key;
      *target = rd.vector(c[key], field);
      if (target->size() != n) {
        rd.fail(field, c[key], "expected " + std::to_string(n) + " entries, got " +
                                   std::to_string(target->size()));
      }
    }
    if (c["policy"]) {
      try {
        s.sim.policy = sim::parse_policy(c["policy"].as<std::string>());
      } catch (const Error& e) {
        rd.fail("simulation.policy", c["policy"], e.what());
      }
    }
  }
  try {
    s.sim.validate(s.model);
    s.weights.validate(s.model);
  } catch (const Error& e) {
    rd.fail("(scenario)", root, e.what());
  }
  return s;
}

std::vector<std::string> bundled_scenario_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : detail::bundled_entries()) names.emplace_back(name);
  return names;
}

std::string_view bundled_scenario_text(std::string_view name) {
  for (const auto& [n, text] : detail::bundled_entries()) {
    if (n == name) return text;
  }
  return {};
}

Scenario load_scenario(const std::string& name_or_path) {
  if (const auto text = bundled_scenario_text(name_or_path); !text.empty()) {
    return parse_scenario(text, name_or_path, fs::current_path());
  }
  const fs::path file(name_or_path);
  std::ifstream in(file);
  if (!in) {
    std::string known;
    for (const auto& n : bundled_scenario_names()) known += (known.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::kConfig, "'" + name_or_path +
                                        "' is neither a bundled scenario (" + known +
                                        ") nor a readable file");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  auto s = parse_scenario(buf.str(), file.string(), file.parent_path());
  s.source = file;
  return s;
}

namespace {

void emit_matrix(YAML::Emitter& out, const Matrix& m) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << m(i, j);
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;
}

void emit_vector(YAML::Emitter& out, const Vector& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v(i);
  out << YAML::EndSeq;
}

}  // namespace

std::string to_yaml(const Scenario& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << s.name;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  for (auto [key, mat] : {std::pair{"A", &s.model.A}, std::pair{"B", &s.model.B},
                          std::pair{"C", &s.model.C}, std::pair{"D", &s.model.D}}) {
    out << YAML::Key << key << YAML::Value;
    emit_matrix(out, *mat);
  }
  out << YAML::EndMap;

  out << YAML::Key << "weights" << YAML::Value << YAML::BeginMap;
  for (auto [key, mat] : {std::pair{"Q", &s.weights.Q}, std::pair{"R", &s.weights.R},
                          std::pair{"W", &s.weights.W}, std::pair{"V", &s.weights.V}}) {
    out << YAML::Key << key << YAML::Value;
    emit_matrix(out, *mat);
  }
  out << YAML::EndMap;

  out << YAML::Key << "trigger" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "sigma" << YAML::Value << s.sigma;
  out << YAML::Key << "epsilon" << YAML::Value << s.epsilon;
  out << YAML::Key << "Q_tilde" << YAML::Value;
  if (s.Q_tilde.size() == 0) {
    out << "identity";
  } else {
    emit_matrix(out, s.Q_tilde);
  }
  out << YAML::EndMap;

  out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "step" << YAML::Value << s.sim.step;
  out << YAML::Key << "horizon" << YAML::Value << s.sim.horizon;
  out << YAML::Key << "x0" << YAML::Value;
  emit_vector(out, s.sim.x0);
  out << YAML::Key << "xhat0" << YAML::Value;
  emit_vector(out, s.sim.xhat0);
  out << YAML::Key << "policy" << YAML::Value << std::string(sim::to_string(s.sim.policy));
  out << YAML::Key << "delay" << YAML::Value << s.sim.delay;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void apply(const Overrides& o, Scenario& s) {
  if (o.sigma) s.sigma = *o.sigma;
  if (o.epsilon) s.epsilon = *o.epsilon;
  if (o.policy) s.sim.policy = *o.policy;
  if (o.delay) s.sim.delay = *o.delay;
  if (o.horizon) s.sim.horizon = *o.horizon;
  if (o.step) s.sim.step = *o.step;
  if (!(s.sigma > 0.0 && s.sigma <= 1.0)) {
    throw Error(ErrorCode::kConfig, "--sigma must lie in (0, 1]");
  }
  if (!(s.epsilon >= 0.0)) throw Error(ErrorCode::kConfig, "--epsilon must be non-negative");
  try {
    s.sim.validate(s.model);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("override: ") + e.what());
  }
}

}  // namespace obetc::cli
