#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "conjpt/catalog.hpp"
#include "conjpt/cli.hpp"
#include "conjpt/errors.hpp"
#include "conjpt/cutoff.hpp"
#include "conjpt/expr.hpp"

namespace conjpt::cli {

using nlohmann::json;

namespace {

// A JSON object together with its pointer; remembers which keys were read so
// that leftovers can be reported as unknown.
class Block {
 public:
  Block(const json& value, std::string pointer) : value_(value), pointer_(std::move(pointer)) {
    if (!value_.is_object()) throw ConfigError(pointer_, "expected an object");
  }

  std::string at(const std::string& key) const { return pointer_ + "/" + key; }
  bool has(const std::string& key) const { return value_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!value_.contains(key)) throw ConfigError(at(key), "missing required key");
    return value_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key), "expected a finite number");
    return d;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  double positive(const std::string& key, double fallback) {
    const double d = number(key, fallback);
    if (!(d > 0.0)) throw ConfigError(at(key), "must be positive");
    return d;
  }

  int integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback, int minimum) {
    const int i = has(key) ? integer(key) : fallback;
    if (i < minimum) throw ConfigError(at(key), "must be at least " + std::to_string(minimum));
    return i;
  }

  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }

  Vec vector(const std::string& key, int n) { return parse_vector(raw(key), at(key), n); }

  void finish() const {
    for (auto it = value_.begin(); it != value_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

  static Vec parse_vector(const json& v, const std::string& pointer, int n) {
    if (!v.is_array() || static_cast<int>(v.size()) != n)
      throw ConfigError(pointer, "expected an array of " + std::to_string(n) + " numbers");
    Vec out(n);
    for (int i = 0; i < n; ++i) {
      if (!v[static_cast<std::size_t>(i)].is_number())
        throw ConfigError(pointer + "/" + std::to_string(i), "expected a number");
      out[i] = v[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
  }

 private:
  const json& value_;
  std::string pointer_;
  std::set<std::string> seen_;
};

FunctionPtr expression(Block& b, const std::string& key, const std::vector<std::string>& names) {
  const std::string source = b.text(key);
  try {
    return make_expression_function(source, names);
  } catch (const ParseError& e) {
    throw ConfigError(b.at(key), e.what());
  }
}

Vec unit_direction(const Vec& v, const std::string& pointer) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw ConfigError(pointer, "direction must be nonzero");
  return v / norm;
}

void parse_problem(const json& j, RunConfig& cfg) {
  Block b(j, "/problem");
  if (b.has("builtin")) {
    const std::string name = b.text("builtin");
    CatalogEntry entry;
    try {
      entry = builtin_problem(name);
    } catch (const std::invalid_argument&) {
      std::string known;
      for (const auto& k : builtin_names()) known += (known.empty() ? "" : ", ") + k;
      throw ConfigError(b.at("builtin"), "unknown built-in '" + name + "' (known: " + known + ")");
    }
    cfg.problem_name = name;
    cfg.spec = std::move(entry.spec);
    cfg.cov = std::move(entry.cov);
    if (b.has("T")) {
      const double T = b.positive("T", 1.0);
      if (cfg.cov) {
        cfg.cov->horizon = T;
        cfg.spec = cfg.cov->to_problem_spec();
      } else {
        cfg.spec.horizon = T;
      }
    }
    b.finish();
    return;
  }

  const std::string mode = b.text("mode");
  if (mode != "cov" && mode != "general") throw ConfigError(b.at("mode"), "expected \"cov\" or \"general\"");
  const int n = b.integer("n");
  if (n < 1) throw ConfigError(b.at("n"), "must be at least 1");
  if (n > 8) throw ConfigError(b.at("n"), "at most 8 state dimensions are supported");
  const double T = b.number("T");
  if (!(T > 0.0)) throw ConfigError(b.at("T"), "must be positive");
  const auto zs = expr::numbered_names("z", n);
  cfg.problem_name = b.has("name") ? b.text("name") : mode;

  if (mode == "cov") {
    const auto us = expr::numbered_names("u", n);
    FunctionPtr L = expression(b, "L", us);
    FunctionPtr psi = expression(b, "psi", zs);
    const double cutoff = b.number("cutoff_radius", 0.0);
    if (cutoff < 0.0) throw ConfigError(b.at("cutoff_radius"), "must be nonnegative");
    if (cutoff > 0.0) psi = std::make_shared<CutoffFunction>(psi, cutoff);
    cfg.cov = CovProblem{HamiltonianModel(std::move(L)), std::move(psi), T};
    cfg.spec = cfg.cov->to_problem_spec();
  } else {
    const int m = b.integer("m");
    if (m < 1) throw ConfigError(b.at("m"), "must be at least 1");
    auto names = expr::numbered_names("x", n);
    const auto xs = names;
    for (const auto& u : expr::numbered_names("u", m)) names.push_back(u);
    ProblemSpec spec;
    spec.horizon = T;
    spec.n = n;
    spec.m = m;
    spec.cost.function = expression(b, "L", names);
    spec.terminal.function = expression(b, "psi", zs);
    const json& fields = b.raw("fields");
    if (!fields.is_array() || static_cast<int>(fields.size()) != m + 1)
      throw ConfigError(b.at("fields"), "expected " + std::to_string(m + 1) + " vector fields (drift first)");
    for (int i = 0; i <= m; ++i) {
      const std::string fp = b.at("fields") + "/" + std::to_string(i);
      const json& f = fields[static_cast<std::size_t>(i)];
      if (!f.is_array() || static_cast<int>(f.size()) != n)
        throw ConfigError(fp, "expected " + std::to_string(n) + " component expressions");
      std::vector<FunctionPtr> comps;
      for (int k = 0; k < n; ++k) {
        const json& c = f[static_cast<std::size_t>(k)];
        const std::string cp = fp + "/" + std::to_string(k);
        if (!c.is_string()) throw ConfigError(cp, "expected a string");
        try {
          comps.push_back(make_expression_function(c.get<std::string>(), xs));
        } catch (const ParseError& e) {
          throw ConfigError(cp, e.what());
        }
      }
      spec.fields.emplace_back(std::move(comps));
    }
    cfg.spec = std::move(spec);
  }
  if (b.has("convexity_modulus")) cfg.spec.cost.convexity_modulus = b.positive("convexity_modulus", 1.0);
  try {
    cfg.spec.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("/problem", e.what());
  }
  b.finish();
}

void parse_numerics(const json& j, RunConfig& cfg) {
  Block b(j, "/numerics");
  Numerics& num = cfg.numerics;
  num.steps = b.integer("steps", num.steps, 16);
  num.box_radius = b.positive("box_radius", num.box_radius);
  num.resolution = b.integer("resolution", num.resolution, 2);
  num.fd_step = b.positive("fd_step", num.fd_step);
  num.newton_tolerance = b.positive("newton_tolerance", num.newton_tolerance);
  num.singular_ratio = b.positive("singular_ratio", num.singular_ratio);
  num.coarse_ratio = b.positive("coarse_ratio", num.coarse_ratio);
  num.refine_tolerance = b.positive("refine_tolerance", num.refine_tolerance);
  if (b.has("det_method")) {
    const std::string method = b.text("det_method");
    if (method == "pontryagin") {
      num.det_method = DetMethod::pontryagin;
    } else if (method == "closed_form") {
      if (!cfg.cov) throw ConfigError(b.at("det_method"), "closed_form needs a calculus-of-variations problem");
      num.det_method = DetMethod::closed_form;
    } else {
      throw ConfigError(b.at("det_method"), "expected \"pontryagin\" or \"closed_form\"");
    }
  }
  if (b.has("seed")) {
    const json& s = b.raw("seed");
    if (!s.is_number_unsigned()) throw ConfigError(b.at("seed"), "expected a nonnegative integer");
    num.seed = s.get<std::uint64_t>();
  }
  b.finish();
}

void parse_scan(const json& j, RunConfig& cfg) {
  Block b(j, "/scan");
  const int n = cfg.spec.n;
  if (b.has("radius")) {
    if (b.has("lower") || b.has("upper")) throw ConfigError(b.at("radius"), "give either radius or lower/upper");
    cfg.scan_box = ScanBox::cube(n, b.positive("radius", 1.0));
  } else {
    cfg.scan_box.lower = b.vector("lower", n);
    cfg.scan_box.upper = b.vector("upper", n);
    for (int i = 0; i < n; ++i)
      if (!(cfg.scan_box.lower[i] < cfg.scan_box.upper[i]))
        throw ConfigError(b.at("upper") + "/" + std::to_string(i), "upper bound must exceed lower bound");
  }
  b.finish();
}

void parse_candidates(const json& j, RunConfig& cfg) {
  if (!j.is_array()) throw ConfigError("/candidates", "expected an array");
  for (std::size_t i = 0; i < j.size(); ++i) {
    Block b(j[i], "/candidates/" + std::to_string(i));
    CandidateInput c;
    c.z = b.vector("z", cfg.spec.n);
    c.v = unit_direction(b.vector("v", cfg.spec.n), b.at("v"));
    b.finish();
    cfg.candidates.push_back(std::move(c));
  }
}

void parse_omega(const json& j, RunConfig& cfg) {
  Block b(j, "/omega");
  OmegaOptions& o = cfg.omega;
  o.box_radius = b.positive("box_radius", o.box_radius);
  o.seeds_per_axis = b.integer("seeds_per_axis", o.seeds_per_axis, 2);
  o.directions = b.integer("directions", o.directions, 2);
  o.accept_residual = b.positive("accept_residual", o.accept_residual);
  o.dedup_distance = b.positive("dedup_distance", o.dedup_distance);
  o.max_iterations = b.integer("max_iterations", o.max_iterations, 1);
  o.transversality_step = b.positive("transversality_step", o.transversality_step);
  o.transversality_ratio = b.positive("transversality_ratio", o.transversality_ratio);
  cfg.trace = b.flag("trace", cfg.trace);
  if (cfg.trace && cfg.spec.n != 3) throw ConfigError(b.at("trace"), "curve tracing needs n = 3");
  cfg.trace_step = b.positive("trace_step", cfg.trace_step);
  b.finish();
}

void parse_perturb(const json& j, RunConfig& cfg) {
  Block b(j, "/perturb");
  GenericityOptions& g = cfg.genericity;
  g.trials = b.integer("trials", g.trials, 1);
  g.magnitude = b.positive("magnitude", g.magnitude);
  if (b.has("kind")) {
    const std::string kind = b.text("kind");
    if (kind == "cubic") {
      g.kind = PerturbationKind::cubic;
    } else if (kind == "full") {
      g.kind = PerturbationKind::full;
    } else {
      throw ConfigError(b.at("kind"), "expected \"cubic\" or \"full\"");
    }
  }
  if (b.has("anchors")) {
    const json& a = b.raw("anchors");
    if (!a.is_array() || a.empty()) throw ConfigError(b.at("anchors"), "expected a nonempty array of points");
    for (std::size_t i = 0; i < a.size(); ++i)
      g.anchors.push_back(Block::parse_vector(a[i], b.at("anchors") + "/" + std::to_string(i), cfg.spec.n));
  }
  b.finish();
}

void parse_boxcount(const json& j, RunConfig& cfg) {
  Block b(j, "/boxcount");
  if (b.has("epsilons")) {
    const json& e = b.raw("epsilons");
    if (!e.is_array() || e.size() < 2) throw ConfigError(b.at("epsilons"), "expected at least two box sizes");
    cfg.epsilons.clear();
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!e[i].is_number() || !(e[i].get<double>() > 0.0))
        throw ConfigError(b.at("epsilons") + "/" + std::to_string(i), "expected a positive number");
      cfg.epsilons.push_back(e[i].get<double>());
    }
  }
  b.finish();
}

}  // namespace

ConjugateOptions RunConfig::conjugate_options() const {
  ConjugateOptions o;
  o.steps = numerics.steps;
  o.method = numerics.det_method;
  o.cov = cov;
  o.singular_ratio = numerics.singular_ratio;
  o.coarse_ratio = numerics.coarse_ratio;
  o.refine_tolerance = numerics.refine_tolerance;
  return o;
}

OracleOptions RunConfig::oracle_options() const {
  OracleOptions o;
  o.h = numerics.fd_step;
  o.steps = numerics.steps;
  return o;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  Block root(j, "");
  if (root.integer("schema") != kSchemaVersion)
    throw ConfigError("/schema", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");

  RunConfig cfg;
  cfg.text = text;
  cfg.hash = fnv1a(text);
  if (root.has("description")) root.text("description");
  parse_problem(root.raw("problem"), cfg);
  if (root.has("numerics")) parse_numerics(root.raw("numerics"), cfg);
  cfg.spec.box_radius = cfg.numerics.box_radius;

  const int n = cfg.spec.n;
  cfg.scan_box = ScanBox::cube(n, cfg.numerics.box_radius);
  cfg.trace = n == 3;
  cfg.genericity.seed = cfg.numerics.seed;

  if (root.has("point")) {
    Block b(root.raw("point"), "/point");
    cfg.point = b.vector("z", n);
    if (b.has("v")) cfg.direction = unit_direction(b.vector("v", n), b.at("v"));
    b.finish();
  }
  if (root.has("scan")) parse_scan(root.raw("scan"), cfg);
  if (root.has("candidates")) parse_candidates(root.raw("candidates"), cfg);
  if (root.has("hmodel")) {
    Block b(root.raw("hmodel"), "/hmodel");
    cfg.p_radius = b.positive("p_radius", cfg.p_radius);
    cfg.p_resolution = b.integer("resolution", cfg.p_resolution, 2);
    b.finish();
  }
  if (root.has("omega")) parse_omega(root.raw("omega"), cfg);
  if (root.has("perturb")) parse_perturb(root.raw("perturb"), cfg);
  if (root.has("boxcount")) parse_boxcount(root.raw("boxcount"), cfg);
  root.finish();
  cfg.genericity.omega = cfg.omega;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace conjpt::cli
