#include "geodecomp/harness_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace geodecomp::harness {

using nlohmann::json;

namespace {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      throw ConfigError(field(key), "is required");
    }
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) {
      throw ConfigError(field(key), "must be a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      throw ConfigError(field(key), "must be finite");
    }
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : mark(key, fallback); }

  std::uint64_t unsigned_integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(field(key), "must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_integer(key) : mark(key, fallback);
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) {
      throw ConfigError(field(key), "must be a string");
    }
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : mark(key, fallback);
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) {
      throw ConfigError(field(key), "must be an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "must be a finite number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
    return has(key) ? numbers(key) : mark(key, fallback);
  }

  std::vector<std::string> strings(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) {
      throw ConfigError(field(key), "must be an array of strings");
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) {
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "must be a string");
      }
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }
  std::vector<std::string> strings(const std::string& key, const std::vector<std::string>& fallback) {
    return has(key) ? strings(key) : mark(key, fallback);
  }

  Reader child(const std::string& key) { return Reader(raw(key), field(key)); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(field(item.key()), "unknown field");
      }
    }
  }

 private:
  template <typename T>
  T mark(const std::string& key, T value) {
    seen_.insert(key);
    return value;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) {
    throw ConfigError(field, message);
  }
}

void require_positive(double x, const std::string& field) { require(x > 0.0, field, "must be positive"); }

void require_increasing(const std::vector<double>& v, const std::string& field) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    require(v[i] > v[i - 1], field, "must be strictly increasing");
  }
}

void require_distinct_positive(const std::vector<double>& v, const std::string& field) {
  require(!v.empty(), field, "must not be empty");
  std::set<double> seen;
  for (double x : v) {
    require(x > 0.0 && x < 0.5, field, "entries must lie in (0, 0.5)");
    require(seen.insert(x).second, field, "entries must be distinct");
  }
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

SpaceSpec parse_space(Reader r) {
  SpaceSpec s;
  s.kind = r.string("kind");
  if (s.kind == "euclidean") {
    s.dim = static_cast<int>(r.unsigned_integer("dim"));
    require(s.dim >= 1 && s.dim <= 3, r.field("dim"), "must be 1, 2 or 3");
  } else if (s.kind == "interval") {
    s.lo = r.number("lo");
    s.hi = r.number("hi");
    require(s.hi > s.lo, r.field("hi"), "must exceed lo");
  } else if (s.kind == "sine_power" || s.kind == "cone") {
    s.N = r.number("N");
    require(s.N >= 1.0, r.field("N"), "must be >= 1");
  } else {
    throw ConfigError(r.field("kind"), "unknown space kind '" + s.kind + "' (euclidean, interval, sine_power, cone)");
  }
  r.finish();
  return s;
}

void require_pair(const std::vector<double>& v, const std::string& field) {
  require(v.size() == 2 && v[1] > v[0], field, "must be [lo, hi] with lo < hi");
}

TransportSpec parse_transport(Reader r, const SpaceSpec& space) {
  TransportSpec t;
  t.kind = r.string("kind");
  const bool euclid = space.kind == "euclidean";
  const auto dim = static_cast<std::size_t>(space.dim);
  if (t.kind == "translation") {
    require(euclid, r.field("kind"), "translation requires a euclidean space");
    t.v = r.numbers("v");
    t.lo = r.numbers("lo");
    t.hi = r.numbers("hi");
    require(t.v.size() == dim, r.field("v"), "length must equal space.dim");
    require(t.lo.size() == dim, r.field("lo"), "length must equal space.dim");
    require(t.hi.size() == dim, r.field("hi"), "length must equal space.dim");
    double norm = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      require(t.hi[i] > t.lo[i], r.field("hi"), "must exceed lo in every coordinate");
      norm += t.v[i] * t.v[i];
    }
    require(norm > 0.0, r.field("v"), "must be nonzero");
  } else if (t.kind == "dilation") {
    require(euclid, r.field("kind"), "dilation requires a euclidean space");
    t.alpha = r.number("alpha");
    t.r_in = r.number("r_in");
    t.r_out = r.number("r_out");
    require(t.alpha > 0.0 && t.alpha < 1.0, r.field("alpha"), "must lie in (0, 1)");
    require(t.r_in > 0.0, r.field("r_in"), "must be positive");
    require(t.r_out > t.r_in, r.field("r_out"), "must exceed r_in");
  } else if (t.kind == "radial") {
    require(euclid, r.field("kind"), "radial requires a euclidean space");
    t.A = r.numbers("A");
    t.r_in = r.number("r_in");
    t.r_out = r.number("r_out");
    require(t.A.size() == dim, r.field("A"), "length must equal space.dim");
    require(t.r_in > 0.0, r.field("r_in"), "must be positive");
    require(t.r_out > t.r_in, r.field("r_out"), "must exceed r_in");
  } else if (t.kind == "reversal") {
    require(euclid && dim == 1, r.field("kind"), "reversal requires a one-dimensional euclidean space");
    t.beta = r.number("beta");
    t.c = r.number("c");
    const auto iv = r.numbers("interval");
    require_pair(iv, r.field("interval"));
    t.interval_lo = iv[0];
    t.interval_hi = iv[1];
    require(t.beta > 0.0, r.field("beta"), "must be positive");
  } else if (t.kind == "quantile") {
    require(!euclid, r.field("kind"), "quantile requires an interval, sine_power or cone space");
    t.source = r.numbers("source");
    t.target = r.numbers("target");
    t.cells = r.unsigned_integer("cells", 512);
    require_pair(t.source, r.field("source"));
    require_pair(t.target, r.field("target"));
    require(t.cells >= 16, r.field("cells"), "must be >= 16");
    double lo = space.lo;
    double hi = space.hi;
    if (space.kind == "sine_power") {
      lo = 0.0;
      hi = std::numbers::pi;
    } else if (space.kind == "cone") {
      lo = 0.0;
      hi = 1.0;
    }
    for (const auto* iv : {&t.source, &t.target}) {
      require((*iv)[0] > lo && (*iv)[1] < hi, r.field(iv == &t.source ? "source" : "target"),
              "must lie strictly inside the space");
    }
    require(t.source[1] <= t.target[0] || t.target[1] <= t.source[0], r.field("target"),
            "must not overlap the source (geodesics would have zero length)");
  } else {
    throw ConfigError(r.field("kind"),
                      "unknown transport kind '" + t.kind + "' (translation, dilation, radial, reversal, quantile)");
  }
  r.finish();
  return t;
}

GridSpec parse_grids(Reader r) {
  GridSpec g;
  g.t_grid = r.numbers("t_grid", g.t_grid);
  g.s_sequence = r.numbers("s_sequence", g.s_sequence);
  g.eps_sequence = r.numbers("eps_sequence", g.eps_sequence);
  g.geodesics_per_axis = r.unsigned_integer("geodesics_per_axis", g.geodesics_per_axis);
  g.bins = r.unsigned_integer("bins", g.bins);
  g.strip_eps = r.number("strip_eps", g.strip_eps);
  g.strip_budget = r.unsigned_integer("strip_budget", g.strip_budget);
  g.seed = r.unsigned_integer("seed", g.seed);
  g.doubling_ratio = r.number("doubling_ratio", g.doubling_ratio);
  r.finish();

  require(g.t_grid.size() >= 2, r.field("t_grid"), "needs at least two times");
  require_increasing(g.t_grid, r.field("t_grid"));
  require(g.t_grid.front() >= 0.0 && g.t_grid.back() <= 1.0, r.field("t_grid"), "must lie in [0, 1]");
  require_distinct_positive(g.s_sequence, r.field("s_sequence"));
  require_distinct_positive(g.eps_sequence, r.field("eps_sequence"));
  require(g.geodesics_per_axis >= 2, r.field("geodesics_per_axis"), "must be >= 2");
  require(g.bins >= 1, r.field("bins"), "must be >= 1");
  require(g.strip_eps > 0.0 && g.strip_eps < 0.5, r.field("strip_eps"), "must lie in (0, 0.5)");
  require(g.strip_budget >= 1000, r.field("strip_budget"), "must be >= 1000");
  require(g.doubling_ratio == 0.0 || g.doubling_ratio > 1.0, r.field("doubling_ratio"), "must be 0 or > 1");
  return g;
}

ToleranceSpec parse_tolerances(Reader r) {
  ToleranceSpec t;
  const std::vector<std::pair<const char*, double*>> fields{
      {"duality", &t.duality},         {"identity", &t.identity},
      {"doubling", &t.doubling},       {"lambda_incremental", &t.lambda_incremental},
      {"lambda_sojourn", &t.lambda_sojourn}, {"strip", &t.strip},
      {"decomposition", &t.decomposition},   {"drift_analytic", &t.drift_analytic},
      {"drift_mc", &t.drift_mc},       {"cd", &t.cd},
      {"equality", &t.equality},       {"linear", &t.linear},
      {"w2", &t.w2},                   {"mcp", &t.mcp},
      {"partition", &t.partition}};
  for (const auto& [key, slot] : fields) {
    *slot = r.number(key, *slot);
    require_positive(*slot, r.field(key));
  }
  r.finish();
  return t;
}

W2Spec parse_w2(Reader r) {
  W2Spec w;
  w.enabled = true;
  const auto first = r.numbers("first");
  const auto second = r.numbers("second");
  require_pair(first, r.field("first"));
  require_pair(second, r.field("second"));
  w.first_lo = first[0];
  w.first_hi = first[1];
  w.second_lo = second[0];
  w.second_hi = second[1];
  w.n_time = r.unsigned_integer("n_time", w.n_time);
  w.n_samples = r.unsigned_integer("n_samples", w.n_samples);
  r.finish();
  require(w.first_lo >= 0.0, r.field("first"), "offsets below the level must be nonnegative");
  const bool same = w.first_lo == w.second_lo && w.first_hi == w.second_hi;
  require(same || w.first_hi < w.second_lo, r.field("second"),
          "must lie strictly below the first interval (or equal it)");
  require(w.n_time >= 2, r.field("n_time"), "must be >= 2");
  require(w.n_samples >= 1, r.field("n_samples"), "must be >= 1");
  return w;
}

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{
      "kantorovich_duality", "geodesic_w2",   "hopf_lax",        "phi_level",    "phi_monotone",
      "assumptions",         "level_partition", "lambda_cross",  "strip_ratio",  "decomposition",
      "cd_star_reduced",     "cd_pointwise",  "cd_sharpness",    "lambda_linear", "w2_construction",
      "mcp_bound"};
  return names;
}

bool ScenarioConfig::has_check(const std::string& n) const { return contains(checks, n); }

ScenarioConfig parse_config(const json& j) {
  Reader r(j, "");
  ScenarioConfig c;
  c.schema_version = static_cast<int>(r.unsigned_integer("schema_version"));
  require(c.schema_version == kSchemaVersion, "schema_version",
          "unsupported version " + std::to_string(c.schema_version) + " (expected " +
              std::to_string(kSchemaVersion) + ")");
  c.name = r.string("name");
  require(!c.name.empty(), "name", "must not be empty");
  c.description = r.string("description", "");
  c.space = parse_space(r.child("space"));
  c.transport = parse_transport(r.child("transport"), c.space);
  c.K = r.number("K");
  c.N = r.number("N");
  require(c.N >= 1.0, "N", "must be >= 1");
  c.sharpness_K = r.number("sharpness_K", c.N + 1.0);
  c.grids = r.has("grids") ? parse_grids(r.child("grids")) : GridSpec{};
  c.tolerances = r.has("tolerances") ? parse_tolerances(r.child("tolerances")) : ToleranceSpec{};
  c.orientation = r.string("orientation", c.orientation);
  require(c.orientation == "non_decreasing" || c.orientation == "non_increasing", "orientation",
          "must be non_decreasing or non_increasing");
  c.lambda_method = r.string("lambda_method", c.lambda_method);
  require(c.lambda_method == "hessian" || c.lambda_method == "incremental" || c.lambda_method == "sojourn",
          "lambda_method", "must be hessian, incremental or sojourn");
  c.checks = r.strings("checks");
  c.expect_rejection = r.strings("expect_rejection", {});
  c.expect_equality = r.strings("expect_equality", {});
  if (r.has("w2")) {
    c.w2 = parse_w2(r.child("w2"));
  }
  r.finish();

  const auto& known = check_names();
  std::set<std::string> seen;
  for (std::size_t i = 0; i < c.checks.size(); ++i) {
    const std::string f = "checks[" + std::to_string(i) + "]";
    require(contains(known, c.checks[i]), f, "unknown check '" + c.checks[i] + "'");
    require(seen.insert(c.checks[i]).second, f, "duplicate check '" + c.checks[i] + "'");
  }
  for (const auto& n : c.expect_rejection) {
    require(c.has_check(n), "expect_rejection", "'" + n + "' is not in checks");
  }
  for (const auto& n : c.expect_equality) {
    require(c.has_check(n), "expect_equality", "'" + n + "' is not in checks");
  }
  if (c.has_check("cd_star_reduced")) {
    require(c.N >= 2.0, "N", "cd_star_reduced requires N >= 2");
  }
  if (c.has_check("mcp_bound")) {
    require(c.N > 1.0, "N", "mcp_bound requires N > 1");
  }
  if (c.has_check("w2_construction")) {
    require(c.w2.enabled, "w2", "is required by w2_construction");
  }
  if (c.has_check("strip_ratio")) {
    const bool any = std::any_of(c.grids.t_grid.begin(), c.grids.t_grid.end(),
                                 [&](double t) { return t > 0.0 && t + c.grids.strip_eps <= 1.0; });
    require(any, "grids.t_grid", "strip_ratio needs a time in (0, 1 - strip_eps]");
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("<file>", "cannot open '" + path + "'");
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ScenarioConfig& c) {
  json space{{"kind", c.space.kind}};
  if (c.space.kind == "euclidean") {
    space["dim"] = c.space.dim;
  } else if (c.space.kind == "interval") {
    space["lo"] = c.space.lo;
    space["hi"] = c.space.hi;
  } else {
    space["N"] = c.space.N;
  }
  const auto& t = c.transport;
  json tr{{"kind", t.kind}};
  if (t.kind == "translation") {
    tr["v"] = t.v;
    tr["lo"] = t.lo;
    tr["hi"] = t.hi;
  } else if (t.kind == "dilation") {
    tr["alpha"] = t.alpha;
    tr["r_in"] = t.r_in;
    tr["r_out"] = t.r_out;
  } else if (t.kind == "radial") {
    tr["A"] = t.A;
    tr["r_in"] = t.r_in;
    tr["r_out"] = t.r_out;
  } else if (t.kind == "reversal") {
    tr["beta"] = t.beta;
    tr["c"] = t.c;
    tr["interval"] = {t.interval_lo, t.interval_hi};
  } else if (t.kind == "quantile") {
    tr["source"] = t.source;
    tr["target"] = t.target;
    tr["cells"] = t.cells;
  }
  const auto& g = c.grids;
  const auto& o = c.tolerances;
  json out{{"schema_version", c.schema_version},
           {"name", c.name},
           {"description", c.description},
           {"space", space},
           {"transport", tr},
           {"K", c.K},
           {"N", c.N},
           {"sharpness_K", c.sharpness_K},
           {"grids",
            {{"t_grid", g.t_grid},
             {"s_sequence", g.s_sequence},
             {"eps_sequence", g.eps_sequence},
             {"geodesics_per_axis", g.geodesics_per_axis},
             {"bins", g.bins},
             {"strip_eps", g.strip_eps},
             {"strip_budget", g.strip_budget},
             {"seed", g.seed},
             {"doubling_ratio", g.doubling_ratio}}},
           {"tolerances",
            {{"duality", o.duality},
             {"identity", o.identity},
             {"doubling", o.doubling},
             {"lambda_incremental", o.lambda_incremental},
             {"lambda_sojourn", o.lambda_sojourn},
             {"strip", o.strip},
             {"decomposition", o.decomposition},
             {"drift_analytic", o.drift_analytic},
             {"drift_mc", o.drift_mc},
             {"cd", o.cd},
             {"equality", o.equality},
             {"linear", o.linear},
             {"w2", o.w2},
             {"mcp", o.mcp},
             {"partition", o.partition}}},
           {"orientation", c.orientation},
           {"lambda_method", c.lambda_method},
           {"checks", c.checks},
           {"expect_rejection", c.expect_rejection},
           {"expect_equality", c.expect_equality}};
  if (c.w2.enabled) {
    out["w2"] = {{"first", {c.w2.first_lo, c.w2.first_hi}},
                 {"second", {c.w2.second_lo, c.w2.second_hi}},
                 {"n_time", c.w2.n_time},
                 {"n_samples", c.w2.n_samples}};
  }
  return out;
}

std::unique_ptr<models::TransportModel> build_model(const ScenarioConfig& c) {
  const auto& t = c.transport;
  auto vec = [](const std::vector<double>& v) { return Point(Eigen::Map<const Point>(v.data(), v.size())); };
  if (t.kind == "translation") {
    return models::make_translation(c.space.dim, vec(t.v), vec(t.lo), vec(t.hi));
  }
  if (t.kind == "dilation") {
    return models::make_dilation(c.space.dim, t.alpha, t.r_in, t.r_out);
  }
  if (t.kind == "radial") {
    return models::make_radial_to_point(vec(t.A), t.r_in, t.r_out);
  }
  if (t.kind == "reversal") {
    return models::make_reversal_1d(t.beta, t.c, t.interval_lo, t.interval_hi);
  }
  if (t.kind == "quantile") {
    const auto space = c.space.kind == "sine_power" ? spaces::ModelSpace::sine_power(c.space.N)
                       : c.space.kind == "cone"
                           ? spaces::ModelSpace::cone(c.space.N)
                           : spaces::ModelSpace::interval(c.space.lo, c.space.hi, [](double) { return 1.0; });
    return models::make_quantile_1d(space, t.source[0], t.source[1], t.target[0], t.target[1], t.cells);
  }
  throw ConfigError("transport.kind", "unknown transport kind '" + t.kind + "'");
}

spaces::DynamicalPlan build_plan(const models::TransportModel& model, std::size_t per_axis) {
  const auto src = model.source_grid(per_axis);
  std::vector<spaces::Geodesic> geodesics;
  geodesics.reserve(src.points.size());
  for (const auto& x : src.points) {
    geodesics.emplace_back(x, model.map(x));
  }
  return spaces::DynamicalPlan(std::move(geodesics), src.weights);
}

}  // namespace geodecomp::harness
