#include "sysrisk/scenario.hpp"

#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace sysrisk {

namespace {

int line_of(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : 0;
}

// A node together with the dotted key path that reached it.
struct Cursor {
  YAML::Node node;
  std::string key;

  [[noreturn]] void fail(const std::string& message) const { throw ScenarioError(key, line_of(node), message); }

  std::string child_key(const std::string& name) const { return key.empty() ? name : key + "." + name; }

  bool has(const std::string& name) const { return node.IsMap() && node[name].IsDefined(); }

  Cursor at(const std::string& name) const {
    if (!node.IsMap()) fail("expected a mapping");
    const YAML::Node child = node[name];
    if (!child.IsDefined()) throw ScenarioError(child_key(name), line_of(node), "required key is missing");
    return {child, child_key(name)};
  }

  Cursor at(std::size_t index) const { return {node[index], key + "[" + std::to_string(index) + "]"}; }

  std::size_t size() const {
    if (!node.IsSequence()) fail("expected a list");
    return node.size();
  }

  template <class T>
  T as() const {
    if (!node.IsScalar()) fail("expected a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::BadConversion&) {
      fail("cannot convert '" + node.Scalar() + "'");
    }
  }

  std::vector<double> numbers() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i).as<double>();
    return out;
  }
};

IntensitySpec parse_intensity(const Cursor& c) {
  if (!c.node.IsMap()) c.fail("intensity must be a mapping with 'kind' and 'params'");
  const std::string kind = c.at("kind").as<std::string>();
  const Cursor params = c.at("params");
  if (kind == "constant") return IntensitySpec::constant(params.at("rate").as<double>());
  if (kind == "piecewise") {
    return IntensitySpec::piecewise(params.at("grid").numbers(), params.at("values").numbers());
  }
  if (kind == "affine") return IntensitySpec::affine(params.at("betas").numbers());
  if (kind == "destructive") {
    const Cursor k = params.at("K");
    const int banks = k.as<int>();
    if (banks < 1) k.fail("K must be a positive integer");
    return IntensitySpec::destructive(parse_intensity(params.at("base")), banks);
  }
  c.at("kind").fail("unknown intensity kind '" + kind + "' (constant, piecewise, affine, destructive)");
}

StatePath parse_path(const Cursor& c) {
  StatePath path;
  path.grid = c.at("grid").numbers();
  const Cursor values = c.at("values");
  path.values.resize(values.size());
  for (std::size_t g = 0; g < path.values.size(); ++g) path.values[g] = values.at(g).numbers();
  if (path.values.size() != path.grid.size()) values.fail("needs one state vector per grid point");
  path.horizon = c.has("horizon") ? c.at("horizon").as<double>() : (path.grid.empty() ? 0.0 : path.grid.back());
  const auto problems = check_path(path);
  if (!problems.empty()) c.fail(problems.front());
  return path;
}

simulate::PathGenerator parse_generator(const Cursor& c) {
  const std::string kind = c.at("kind").as<std::string>();
  if (kind != "mean_reverting") c.at("kind").fail("unknown generator kind '" + kind + "' (mean_reverting)");
  const Cursor p = c.at("params");
  simulate::MeanRevertingGenerator g;
  g.x0 = p.at("x0").numbers();
  g.mean = p.at("mean").numbers();
  g.speed = p.at("speed").numbers();
  g.vol = p.at("vol").numbers();
  g.horizon = p.at("horizon").as<double>();
  if (p.has("dt")) g.dt = p.at("dt").as<double>();
  const std::size_t d = g.x0.size();
  if (d == 0 || g.mean.size() != d || g.speed.size() != d || g.vol.size() != d) {
    p.fail("x0, mean, speed and vol must have the same nonzero length");
  }
  if (!(g.horizon > 0.0)) p.at("horizon").fail("must be positive");
  if (g.dt < 0.0) p.at("dt").fail("must be positive");
  return g;
}

Scenario parse_root(const YAML::Node& root) {
  const Cursor top{root, ""};
  if (!root.IsMap()) top.fail("scenario must be a mapping");
  Scenario s;
  s.model.epsilon = top.at("epsilon").as<double>();
  const Cursor banks = top.at("banks");
  for (std::size_t i = 0; i < banks.size(); ++i) s.model.bank_intensities.push_back(parse_intensity(banks.at(i)));
  s.model.stress_intensity = parse_intensity(top.at("stress"));
  if (top.has("initial_state")) s.model.initial_state = top.at("initial_state").numbers();
  if (top.has("atom_at_zero")) s.model.atom_at_zero = top.at("atom_at_zero").as<bool>();
  if (top.has("state_path")) s.path = parse_path(top.at("state_path"));
  if (top.has("generator")) s.generator = parse_generator(top.at("generator"));
  if (top.has("destructive_competition")) {
    const Cursor dc = top.at("destructive_competition");
    int k = static_cast<int>(s.model.banks());
    if (dc.has("K_override")) {
      k = dc.at("K_override").as<int>();
      if (k < 1) dc.at("K_override").fail("must be a positive integer");
    }
    for (auto& spec : s.model.bank_intensities) spec = IntensitySpec::destructive(spec, k);
  }
  return s;
}

}  // namespace

ScenarioError::ScenarioError(std::string key, int line, std::string message, const std::string& source)
    : std::runtime_error((source.empty() ? "" : source + ":") + std::to_string(line) + ": " +
                         (key.empty() ? "<root>" : key) + ": " + message),
      key_(std::move(key)),
      line_(line),
      message_(std::move(message)) {}

simulate::PathGenerator Scenario::path_generator() const {
  if (generator) return *generator;
  return simulate::default_generator(model, path ? &*path : nullptr);
}

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError("", e.mark.line + 1, e.msg);
  }
  return parse_root(root);
}

Scenario load_scenario(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open scenario file '" + file + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(e.key(), e.line(), e.message(), file);
  }
}

}  // namespace sysrisk
