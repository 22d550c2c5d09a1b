#include "fraclinf/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace fraclinf {

using nlohmann::json;

namespace {

struct Violations {
  std::vector<std::string> messages;
  bool schema = false;

  void add(const std::string& m) {
    messages.push_back(m);
    schema = true;
  }
  void hypothesis(const std::string& m) { messages.push_back(m); }
};

template <class T>
T read(const json& doc, const char* key, T fallback, Violations& v) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    v.add(std::string("field '") + key + "' has the wrong type");
    return fallback;
  }
}

bool read_point(const json& j, int n, Point& out, const std::string& where, Violations& v) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    v.add(where + " must be an array of " + std::to_string(n) + " numbers");
    return false;
  }
  for (int k = 0; k < n; ++k) {
    if (!j[k].is_number()) {
      v.add(where + " must contain numbers");
      return false;
    }
    out[k] = j[k].get<double>();
  }
  return true;
}

json point_json(const Point& p, int n) {
  json a = json::array();
  for (int k = 0; k < n; ++k) a.push_back(p[k]);
  return a;
}

const char* family_name(ExteriorData::Family f) {
  switch (f) {
    case ExteriorData::Family::smooth_bump: return "smooth_bump";
    case ExteriorData::Family::polynomial_spline: return "polynomial_spline";
    case ExteriorData::Family::custom_samples: return "custom_samples";
  }
  return "smooth_bump";
}

}  // namespace

RunConfig config_from_json(const json& doc) {
  Violations v;
  RunConfig cfg;
  if (!doc.is_object()) throw Error(ErrorCode::config_error, "config must be a JSON object");

  static const std::set<std::string> known{"scenario", "n", "s", "L", "h", "omega", "exterior_data", "weight",
                                           "p_schedule", "tolerances", "optimizer", "supremand", "seed",
                                           "allow_degenerate", "output_dir", "config_hash"};
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) v.add("unknown field '" + key + "'");

  cfg.scenario = read<std::string>(doc, "scenario", cfg.scenario, v);
  for (const char* req : {"n", "s", "L", "h", "omega", "exterior_data"})
    if (!doc.contains(req)) v.add(std::string("missing required field '") + req + "'");
  cfg.n = read<int>(doc, "n", cfg.n, v);
  cfg.s = read<double>(doc, "s", cfg.s, v);
  cfg.L = read<double>(doc, "L", cfg.L, v);
  cfg.h = read<double>(doc, "h", cfg.h, v);
  const bool dim_ok = cfg.n == 1 || cfg.n == 2;
  if (!dim_ok) v.add("n must be 1 or 2");
  if (!(cfg.s > 0.0 && cfg.s < 1.0)) v.add("s must lie in (0, 1)");
  else if (dim_ok && !(cfg.n > 2.0 * cfg.s)) {
    std::ostringstream m;
    m << "requires n > 2s (hypothesis n > 2s fails for n = " << cfg.n << ", s = " << cfg.s << ")";
    v.hypothesis(m.str());
  }
  if (!(cfg.L > 0.0)) v.add("L must be positive");
  if (!(cfg.h > 0.0 && cfg.h < cfg.L)) v.add("h must lie in (0, L)");
  const int n = dim_ok ? cfg.n : 1;

  if (doc.contains("omega")) {
    json om = doc["omega"];
    if (om.is_object()) om = json::array({om});
    if (!om.is_array() || om.empty()) v.add("omega must be a nonempty list of shapes");
    else
      for (std::size_t k = 0; k < om.size(); ++k) {
        const json& sh = om[k];
        const std::string where = "omega[" + std::to_string(k) + "]";
        const std::string type = sh.is_object() ? sh.value("type", "") : "";
        if (type == "interval") {
          if (n != 1) v.add(where + ": interval needs n = 1");
          const double a = sh.value("a", 0.0), b = sh.value("b", 0.0);
          if (!(a < b)) v.add(where + ": interval needs a < b");
          else cfg.omega.push_back(Shape::interval(a, b));
        } else if (type == "box") {
          Point lo{}, hi{};
          if (sh.contains("lo") && sh.contains("hi") && read_point(sh["lo"], n, lo, where + ".lo", v) &&
              read_point(sh["hi"], n, hi, where + ".hi", v))
            cfg.omega.push_back(Shape::box(lo, hi));
          else if (!sh.contains("lo") || !sh.contains("hi"))
            v.add(where + ": box needs lo and hi");
        } else if (type == "ball") {
          Point c{};
          const double r = sh.value("radius", 0.0);
          if (!(r > 0.0)) v.add(where + ": ball needs a positive radius");
          if (sh.contains("center") && read_point(sh["center"], n, c, where + ".center", v) && r > 0.0)
            cfg.omega.push_back(Shape::ball(c, r));
          else if (!sh.contains("center"))
            v.add(where + ": ball needs a center");
        } else {
          v.add(where + ": type must be interval, box or ball");
        }
      }
  }

  if (doc.contains("exterior_data")) {
    const json& ed = doc["exterior_data"];
    const std::string fam = ed.is_object() ? ed.value("family", "smooth_bump") : "";
    if (fam == "smooth_bump") cfg.exterior.family = ExteriorData::Family::smooth_bump;
    else if (fam == "polynomial_spline") cfg.exterior.family = ExteriorData::Family::polynomial_spline;
    else if (fam == "custom_samples") cfg.exterior.family = ExteriorData::Family::custom_samples;
    else v.add("exterior_data.family must be smooth_bump, polynomial_spline or custom_samples");
    if (cfg.exterior.family == ExteriorData::Family::custom_samples) {
      if (!ed.contains("samples") || !ed["samples"].is_array()) v.add("custom_samples needs a samples array");
      else
        try {
          cfg.exterior.samples = ed["samples"].get<std::vector<double>>();
        } catch (const json::exception&) {
          v.add("exterior_data.samples must contain numbers");
        }
    } else if (ed.is_object()) {
      const json bumps = ed.value("bumps", json::array());
      if (!bumps.is_array()) v.add("exterior_data.bumps must be a list");
      for (std::size_t k = 0; bumps.is_array() && k < bumps.size(); ++k) {
        const std::string where = "exterior_data.bumps[" + std::to_string(k) + "]";
        Bump b;
        if (!bumps[k].is_object() || !bumps[k].contains("center")) {
          v.add(where + " needs a center");
          continue;
        }
        read_point(bumps[k]["center"], n, b.center, where + ".center", v);
        b.radius = bumps[k].value("radius", 1.0);
        b.amplitude = bumps[k].value("amplitude", 1.0);
        if (!(b.radius > 0.0)) v.add(where + ".radius must be positive");
        cfg.exterior.bumps.push_back(b);
      }
    }
  }
  cfg.allow_degenerate = read<bool>(doc, "allow_degenerate", false, v);
  if (cfg.exterior.family != ExteriorData::Family::custom_samples && !cfg.allow_degenerate) {
    bool nonzero = false;
    for (const auto& b : cfg.exterior.bumps) nonzero = nonzero || b.amplitude != 0.0;
    if (!nonzero) v.hypothesis("trivial exterior data: u0 must not vanish outside Omega (set allow_degenerate to run it)");
  }

  if (doc.contains("weight")) {
    const json& w = doc["weight"];
    const std::string kind = w.is_object() ? w.value("kind", "gaussian") : "";
    if (kind == "gaussian") cfg.weight_kind = WeightKind::gaussian;
    else if (kind == "rational") cfg.weight_kind = WeightKind::rational;
    else v.add("weight.kind must be gaussian or rational");
    if (w.is_object()) cfg.weight_sigma = w.value("sigma", 0.0);
    if (cfg.weight_sigma < 0.0) v.add("weight.sigma must be nonnegative");
  }

  if (doc.contains("p_schedule")) {
    cfg.p_schedule = read<std::vector<double>>(doc, "p_schedule", {}, v);
    if (cfg.p_schedule.empty()) v.add("p_schedule must be a nonempty list");
    else if (!(cfg.p_schedule.front() >= 2.0)) v.add("p_schedule must start at p >= 2");
    for (std::size_t k = 1; k < cfg.p_schedule.size(); ++k)
      if (!(cfg.p_schedule[k] > cfg.p_schedule[k - 1])) {
        v.add("p_schedule must be strictly increasing");
        break;
      }
    for (double p : cfg.p_schedule)
      if (!std::isfinite(p)) v.add("p_schedule entries must be finite");
  } else {
    cfg.schedule_defaulted = true;
  }

  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    if (!t.is_object()) v.add("tolerances must be an object");
    else {
      cfg.tol_grad = t.value("tol_grad", 0.0);
      cfg.max_iterations = t.value("max_iterations", 2000);
      if (cfg.tol_grad < 0.0) v.add("tolerances.tol_grad must be nonnegative");
      if (cfg.max_iterations < 1) v.add("tolerances.max_iterations must be positive");
    }
  }
  const std::string opt = read<std::string>(doc, "optimizer", "newton", v);
  if (opt == "newton") cfg.optimizer = Optimizer::newton;
  else if (opt == "lbfgs") cfg.optimizer = Optimizer::lbfgs;
  else v.add("optimizer must be newton or lbfgs");

  if (doc.contains("supremand")) {
    const json& su = doc["supremand"];
    if (!su.is_object()) v.add("supremand must be an object");
    else {
      cfg.supremand = su.value("name", "identity");
      cfg.supremand_parameter = su.value("parameter", 0.0);
      if (cfg.supremand != "identity" && cfg.supremand != "weighted" && cfg.supremand != "tanh")
        v.add("supremand.name must be identity, weighted or tanh");
      else if (cfg.supremand != "identity" && !(cfg.supremand_parameter >= 0.0))
        v.add("supremand.parameter must be nonnegative");
    }
  }
  cfg.seed = read<std::uint64_t>(doc, "seed", 0, v);
  cfg.output_dir = read<std::string>(doc, "output_dir", cfg.output_dir, v);

  if (!v.messages.empty()) {
    std::ostringstream msg;
    msg << "config has " << v.messages.size() << " violation(s):";
    for (const auto& m : v.messages) msg << "\n  - " << m;
    throw Error(v.schema ? ErrorCode::config_error : ErrorCode::hypothesis_violation, msg.str());
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config_error, "config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

json config_to_json(const RunConfig& cfg) {
  const int n = cfg.n;
  json omega = json::array();
  for (const Shape& s : cfg.omega) {
    switch (s.kind) {
      case Shape::Kind::interval: omega.push_back({{"type", "interval"}, {"a", s.lo[0]}, {"b", s.hi[0]}}); break;
      case Shape::Kind::box: omega.push_back({{"type", "box"}, {"lo", point_json(s.lo, n)}, {"hi", point_json(s.hi, n)}}); break;
      case Shape::Kind::ball:
        omega.push_back({{"type", "ball"}, {"center", point_json(s.center, n)}, {"radius", s.radius}});
        break;
    }
  }
  json ext{{"family", family_name(cfg.exterior.family)}};
  if (cfg.exterior.family == ExteriorData::Family::custom_samples) {
    ext["samples"] = cfg.exterior.samples;
  } else {
    json bumps = json::array();
    for (const Bump& b : cfg.exterior.bumps)
      bumps.push_back({{"center", point_json(b.center, n)}, {"radius", b.radius}, {"amplitude", b.amplitude}});
    ext["bumps"] = bumps;
  }
  return json{{"scenario", cfg.scenario},
              {"n", cfg.n},
              {"s", cfg.s},
              {"L", cfg.L},
              {"h", cfg.h},
              {"omega", omega},
              {"exterior_data", ext},
              {"weight",
               {{"kind", cfg.weight_kind == WeightKind::gaussian ? "gaussian" : "rational"},
                {"sigma", cfg.weight_sigma > 0.0 ? cfg.weight_sigma : 0.5 * cfg.L}}},
              {"p_schedule", cfg.p_schedule},
              {"tolerances", {{"tol_grad", cfg.tol_grad}, {"max_iterations", cfg.max_iterations}}},
              {"optimizer", cfg.optimizer == Optimizer::newton ? "newton" : "lbfgs"},
              {"supremand", {{"name", cfg.supremand}, {"parameter", cfg.supremand_parameter}}},
              {"seed", cfg.seed},
              {"allow_degenerate", cfg.allow_degenerate}};
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::vector<std::string> scenario_names() { return {"bump1d", "twobump1d", "ball2d", "trivial1d"}; }

RunConfig scenario_config(const std::string& name) {
  RunConfig cfg;
  cfg.scenario = name;
  if (name == "bump1d" || name == "twobump1d" || name == "trivial1d") {
    cfg.n = 1;
    cfg.s = 0.25;
    cfg.L = 4.0;
    cfg.h = 1.0 / 64.0;
    cfg.omega = {Shape::interval(-1.0, 1.0)};
    if (name == "twobump1d")
      cfg.exterior.bumps = {Bump{{-2.0, 0.0}, 0.8, 1.0}, Bump{{2.2, 0.0}, 0.6, -0.6}};
    else
      cfg.exterior.bumps = {Bump{{2.0, 0.0}, 0.8, name == "trivial1d" ? 0.0 : 1.0}};
    cfg.allow_degenerate = name == "trivial1d";
  } else if (name == "ball2d") {
    cfg.n = 2;
    cfg.s = 0.5;
    cfg.L = 2.0;
    cfg.h = 1.0 / 16.0;
    cfg.omega = {Shape::ball({0.0, 0.0}, 0.75)};
    cfg.exterior.bumps = {Bump{{1.3, 0.0}, 0.5, 1.0}};
  } else {
    throw Error(ErrorCode::config_error, "unknown scenario '" + name + "'");
  }
  cfg.weight_sigma = 0.5 * cfg.L;
  cfg.output_dir = "fraclinf-" + name;
  return cfg;
}

BuiltProblem build_problem(const RunConfig& cfg) {
  GridPtr grid = build_grid(cfg.n, cfg.L, cfg.h);
  DomainSpec domain = build_domain(*grid, cfg.omega);
  ScalarField u0 = sample_exterior_data(cfg.exterior, grid, domain, cfg.allow_degenerate);
  WeightField w = build_weight(grid, cfg.weight_kind, cfg.weight_sigma > 0.0 ? cfg.weight_sigma : 0.5 * cfg.L);
  auto op = std::make_shared<FracLapOperator>(grid, cfg.s);
  BuiltProblem out{assemble_problem(grid, std::move(domain), op, std::move(w), std::move(u0),
                                    make_supremand(cfg.supremand, cfg.supremand_parameter, cfg.n), cfg.allow_degenerate),
                   SolverOptions{}};
  out.options.method = cfg.optimizer;
  out.options.tol_grad = cfg.tol_grad;
  out.options.max_iterations = cfg.max_iterations;
  return out;
}

}  // namespace fraclinf
