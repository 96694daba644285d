#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "driver.hpp"
#include "linsys.hpp"
#include "verify.hpp"

namespace rbfplast::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CaseKind { Elastic, PerfectPlastic, LinearHardening, Irregular, Custom };
enum class HardeningKind { Perfect, Linear, Piecewise };

inline std::string to_string(CaseKind k) {
  switch (k) {
    case CaseKind::Elastic: return "elastic";
    case CaseKind::PerfectPlastic: return "perfect-plastic";
    case CaseKind::LinearHardening: return "linear-hardening";
    case CaseKind::Irregular: return "irregular";
    case CaseKind::Custom: return "custom";
  }
  return "custom";
}

inline CaseKind parse_case(const std::string& s) {
  if (s == "elastic") return CaseKind::Elastic;
  if (s == "perfect-plastic") return CaseKind::PerfectPlastic;
  if (s == "linear-hardening") return CaseKind::LinearHardening;
  if (s == "irregular") return CaseKind::Irregular;
  if (s == "custom") return CaseKind::Custom;
  throw ConfigError("unknown case '" + s + "'");
}

/// Everything needed for one run. Units: mm, GPa.
struct RunConfig {
  CaseKind kind = CaseKind::Custom;
  double a = 100.0, b = 200.0;
  bool cutouts = false;  // the four discs of the irregular case
  double young = 210.0, poisson = 0.3, yield = 0.24;
  HardeningKind hardening = HardeningKind::Perfect;
  double hardening_slope = 10.0;                    // linear hardening H
  std::vector<std::pair<double, double>> knots;     // piecewise: (eq. plastic strain, yield stress)
  double pressure = std::numeric_limits<double>::quiet_NaN();
  int n_load = 1;
  double h = 2.0;
  std::uint64_t seed = 1;
  BasisConfig basis;
  double tolerance = 1e-6;
  int i_max = 100;
  int j_max = 20000;
  bool mirror = true;
  bool ghosts = true;
  int anderson_depth = 0;
  int max_cutbacks = 0;
  ResidualForm residual_form = ResidualForm::Consistent;
  std::string out_dir = "out";
  std::string export_matrix;  // empty: no export

  void validate() const {
    if (!(a > 0.0) || !(b > a)) throw ConfigError("geometry requires 0 < a < b");
    if (!(young > 0.0)) throw ConfigError("young must be positive");
    if (!(poisson > 0.0 && poisson < 0.5)) throw ConfigError("poisson must lie in (0, 0.5)");
    if (!(yield > 0.0)) throw ConfigError("yield must be positive");
    if (hardening == HardeningKind::Linear && hardening_slope < 0.0)
      throw ConfigError("hardening_slope must be non-negative");
    if (hardening == HardeningKind::Piecewise && knots.size() < 2)
      throw ConfigError("piecewise hardening needs at least two knots");
    if (!std::isfinite(pressure)) throw ConfigError("pressure is not set");
    if (pressure < 0.0) throw ConfigError("pressure must be non-negative");
    if (n_load < 1) throw ConfigError("n_load must be >= 1");
    if (!(h > 0.0)) throw ConfigError("h must be positive");
    if (!(h < 0.5 * (b - a))) throw ConfigError("h must be below (b - a) / 2");
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
    if (i_max < 1 || j_max < 1) throw ConfigError("iteration caps must be >= 1");
    if (anderson_depth < 0 || max_cutbacks < 0) throw ConfigError("anderson_depth and max_cutbacks must be >= 0");
    try {
      basis.validate();
      (void)curve();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  Domain domain() const {
    return Domain::quarter_annulus(a, b, cutouts ? irregular_cutouts(a, b) : std::vector<Circle>{});
  }
  ElasticConstants elastic() const { return ElasticConstants::from_young_poisson(young, poisson); }
  HardeningCurve curve() const {
    switch (hardening) {
      case HardeningKind::Perfect: return HardeningCurve::perfect(yield);
      case HardeningKind::Linear: return HardeningCurve::linear(yield, hardening_slope);
      case HardeningKind::Piecewise: return HardeningCurve::piecewise(knots);
    }
    return HardeningCurve::perfect(yield);
  }
  SolverConfig solver() const {
    SolverConfig s;
    s.tolerance = tolerance;
    s.max_return_iterations = i_max;
    s.max_picard_iterations = j_max;
    s.residual_form = residual_form;
    s.anderson_depth = anderson_depth;
    s.max_cutbacks = max_cutbacks;
    return s;
  }
  StencilExtension extension() const {
    StencilExtension e;
    e.mirror = mirror;
    e.ghosts = ghosts;
    return e;
  }
};

/// Preset values of a benchmark case.
inline RunConfig preset(CaseKind kind) {
  RunConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case CaseKind::Elastic:
      cfg.pressure = 0.05;
      cfg.n_load = 1;
      break;
    case CaseKind::PerfectPlastic:
      cfg.pressure = 0.19;
      cfg.n_load = 25;
      break;
    case CaseKind::LinearHardening:
      cfg.pressure = 0.175;
      cfg.n_load = 25;
      cfg.hardening = HardeningKind::Linear;
      cfg.hardening_slope = 10.0;
      break;
    case CaseKind::Irregular:
      cfg.pressure = 0.13;
      cfg.n_load = 25;
      cfg.cutouts = true;
      cfg.hardening = HardeningKind::Piecewise;
      cfg.knots = synthetic_hardening_table().knots();
      break;
    case CaseKind::Custom: break;
  }
  return cfg;
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

// "e0:s0,e1:s1,..."
inline std::vector<std::pair<double, double>> to_knots(const std::string& key, const std::string& v) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("key '" + key + "': knots are strain:stress pairs");
    out.emplace_back(to_double(key, trim(item.substr(0, colon))), to_double(key, trim(item.substr(colon + 1))));
  }
  return out;
}

}  // namespace detail

/// Applies one key. Unknown keys are rejected.
inline void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  static const std::map<std::string, std::function<void(RunConfig&, const std::string&, const std::string&)>> table = {
      {"case", [](RunConfig& c, const auto&, const auto& v) { c.kind = parse_case(v); }},
      {"a", [](RunConfig& c, const auto& k, const auto& v) { c.a = to_double(k, v); }},
      {"b", [](RunConfig& c, const auto& k, const auto& v) { c.b = to_double(k, v); }},
      {"cutouts", [](RunConfig& c, const auto& k, const auto& v) { c.cutouts = to_bool(k, v); }},
      {"young", [](RunConfig& c, const auto& k, const auto& v) { c.young = to_double(k, v); }},
      {"poisson", [](RunConfig& c, const auto& k, const auto& v) { c.poisson = to_double(k, v); }},
      {"yield", [](RunConfig& c, const auto& k, const auto& v) { c.yield = to_double(k, v); }},
      {"hardening",
       [](RunConfig& c, const auto& k, const auto& v) {
         if (v == "perfect") c.hardening = HardeningKind::Perfect;
         else if (v == "linear") c.hardening = HardeningKind::Linear;
         else if (v == "piecewise") c.hardening = HardeningKind::Piecewise;
         else throw ConfigError("key '" + k + "': expected perfect, linear or piecewise");
       }},
      {"hardening_slope", [](RunConfig& c, const auto& k, const auto& v) { c.hardening_slope = to_double(k, v); }},
      {"hardening_knots", [](RunConfig& c, const auto& k, const auto& v) { c.knots = to_knots(k, v); }},
      {"pressure", [](RunConfig& c, const auto& k, const auto& v) { c.pressure = to_double(k, v); }},
      {"n_load", [](RunConfig& c, const auto& k, const auto& v) { c.n_load = static_cast<int>(to_integer(k, v)); }},
      {"h", [](RunConfig& c, const auto& k, const auto& v) { c.h = to_double(k, v); }},
      {"seed",
       [](RunConfig& c, const auto& k, const auto& v) {
         const long long s = to_integer(k, v);
         if (s < 0) throw ConfigError("seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"stencil_size", [](RunConfig& c, const auto& k, const auto& v) { c.basis.stencil_size = static_cast<int>(to_integer(k, v)); }},
      {"phs_order", [](RunConfig& c, const auto& k, const auto& v) { c.basis.phs_order = static_cast<int>(to_integer(k, v)); }},
      {"monomial_degree", [](RunConfig& c, const auto& k, const auto& v) { c.basis.monomial_degree = static_cast<int>(to_integer(k, v)); }},
      {"tolerance", [](RunConfig& c, const auto& k, const auto& v) { c.tolerance = to_double(k, v); }},
      {"i_max", [](RunConfig& c, const auto& k, const auto& v) { c.i_max = static_cast<int>(to_integer(k, v)); }},
      {"j_max", [](RunConfig& c, const auto& k, const auto& v) { c.j_max = static_cast<int>(to_integer(k, v)); }},
      {"mirror", [](RunConfig& c, const auto& k, const auto& v) { c.mirror = to_bool(k, v); }},
      {"ghosts", [](RunConfig& c, const auto& k, const auto& v) { c.ghosts = to_bool(k, v); }},
      {"anderson_depth", [](RunConfig& c, const auto& k, const auto& v) { c.anderson_depth = static_cast<int>(to_integer(k, v)); }},
      {"max_cutbacks", [](RunConfig& c, const auto& k, const auto& v) { c.max_cutbacks = static_cast<int>(to_integer(k, v)); }},
      {"residual_form",
       [](RunConfig& c, const auto& k, const auto& v) {
         if (v == "consistent") c.residual_form = ResidualForm::Consistent;
         else if (v == "direct") c.residual_form = ResidualForm::Direct;
         else throw ConfigError("key '" + k + "': expected consistent or direct");
       }},
      {"out", [](RunConfig& c, const auto&, const auto& v) { c.out_dir = v; }},
      {"export_matrix", [](RunConfig& c, const auto&, const auto& v) { c.export_matrix = v; }},
  };
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
  it->second(cfg, key, value);
}

/// Parses `key = value` lines; '#' starts a comment.
inline KeyValues parse_key_values(std::istream& in, const std::string& origin = "config") {
  KeyValues out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected key = value");
    out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return out;
}

inline KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_key_values(in, path.string());
}

/// Builds a validated configuration. The case comes from the overrides or the
/// file; its preset is applied first, then the file keys, then the overrides.
inline RunConfig parse_config(const KeyValues& file, const KeyValues& overrides = {}) {
  std::optional<std::string> kind;
  for (const auto* kv : {&file, &overrides})
    for (const auto& [k, v] : *kv)
      if (k == "case") kind = v;
  if (!kind) throw ConfigError("no case given (elastic, perfect-plastic, linear-hardening, irregular or custom)");
  RunConfig cfg = preset(parse_case(*kind));
  for (const auto* kv : {&file, &overrides})
    for (const auto& [k, v] : *kv)
      if (k != "case") set_key(cfg, k, v);
  cfg.validate();
  return cfg;
}

/// Everything computed by one run.
struct Outcome {
  bool converged = false;
  std::string failure;
  RunConfig cfg;
  NodeSet nodes;
  int ghosts = 0;
  RunReport report;
  std::vector<std::array<int, 2>> trace_index;  // (step, pass) per residual in `trace`
  std::vector<double> trace;
  double setup_seconds = 0.0, solve_seconds = 0.0;
  std::optional<SparseSystem> system;  // kept when a matrix export is requested
};

/// Generates nodes and weights, factorizes, and runs the load program.
/// Solver failures are captured in the outcome; configuration errors throw.
inline Outcome execute(const RunConfig& cfg, bool keep_system = false) {
  cfg.validate();
  Outcome out;
  out.cfg = cfg;
  const auto t0 = std::chrono::steady_clock::now();
  const Domain domain = cfg.domain();
  out.nodes = fill(domain, cfg.h, cfg.seed);
  const WeightStore ws = build_weights(domain, out.nodes, cfg.basis, cfg.extension());
  out.ghosts = ws.ghost_count();
  const ElasticConstants ec = cfg.elastic();
  const BoundaryConditionSet bcs = pressure_bcs(domain, out.nodes, cfg.pressure, ws.planes());
  const ElasticSolver solver(out.nodes, ws, ec, bcs);
  if (keep_system) out.system = solver.system();
  const auto t1 = std::chrono::steady_clock::now();
  out.setup_seconds = std::chrono::duration<double>(t1 - t0).count();
  try {
    out.report = run(domain, out.nodes, ws, solver, ec, cfg.curve(), bcs, LoadProgram{cfg.pressure, cfg.n_load},
                     cfg.solver(), [&](int step, int pass, double r) {
                       out.trace_index.push_back({step, pass});
                       out.trace.push_back(r);
                     });
    out.converged = true;
  } catch (const PicardDivergenceError& e) {
    out.failure = e.what();
  } catch (const LinearSolverError& e) {
    out.failure = e.what();
  }
  out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
  return out;
}

/// Edge averages and other scalar results of a converged run.
struct Summary {
  int nodes = 0, ghosts = 0;
  double max_u = 0.0;
  double vm_inner = 0.0, vm_outer = 0.0;  // averages over inner-pressure / outer-free nodes
  double u_inner = 0.0, u_outer = 0.0;
  std::optional<double> front;            // fitted plastic front
  std::string front_note;
  double max_eq_plastic = 0.0;
  Vec2 max_eq_plastic_at = Vec2::Zero();
  int total_iterations = 0;
  double average_iterations = 0.0;
  // Elastic reference comparison, present when no node yielded and the domain has no cut-outs.
  std::optional<ErrorNorm> l2_error;
  std::optional<double> max_relative_error;
};

inline bool has_closed_form(const RunConfig& cfg) { return !cfg.cutouts; }

inline Summary summarize(const Outcome& out) {
  Summary s;
  const NodeSet& nodes = out.nodes;
  const RunReport& rep = out.report;
  s.nodes = nodes.size();
  s.ghosts = out.ghosts;
  int na = 0, nb = 0;
  for (int i = 0; i < nodes.size(); ++i) {
    s.max_u = std::max(s.max_u, rep.displacement[i].norm());
    if (rep.states[i].eq_plastic_strain > s.max_eq_plastic) {
      s.max_eq_plastic = rep.states[i].eq_plastic_strain;
      s.max_eq_plastic_at = nodes.positions[i];
    }
    if (!nodes.is_boundary(i)) continue;
    const double vm = von_mises(rep.states[i].stress), um = rep.displacement[i].norm();
    if (nodes.tags[i] == BoundaryTag::InnerPressure) s.vm_inner += vm, s.u_inner += um, ++na;
    if (nodes.tags[i] == BoundaryTag::OuterFree) s.vm_outer += vm, s.u_outer += um, ++nb;
  }
  if (na > 0) s.vm_inner /= na, s.u_inner /= na;
  if (nb > 0) s.vm_outer /= nb, s.u_outer /= nb;
  for (const StepReport& st : rep.steps) s.total_iterations += st.iterations;
  s.average_iterations = rep.average_iterations();
  try {
    s.front = extract_front(nodes.positions, rep.states).c;
  } catch (const FrontNotLocalizedError& e) {
    s.front_note = e.what();
  }
  if (has_closed_form(out.cfg) && s.max_eq_plastic == 0.0) {
    std::vector<Vec2> ref(nodes.size());
    double worst = 0.0;
    for (int i = 0; i < nodes.size(); ++i) {
      const Vec2& p = nodes.positions[i];
      const double r = std::clamp(p.norm(), out.cfg.a, out.cfg.b);
      ref[i] = elastic_reference(r, out.cfg.pressure, out.cfg.a, out.cfg.b, out.cfg.young, out.cfg.poisson).u_r *
               p / p.norm();
      if (ref[i].norm() > 0.0) worst = std::max(worst, (rep.displacement[i] - ref[i]).norm() / ref[i].norm());
    }
    s.l2_error = error_norm(rep.displacement, ref);
    s.max_relative_error = worst;
  }
  return s;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

}  // namespace detail

/// Writes fields.csv, summary.txt, residual_trace.csv, radial.csv and
/// front_shape.csv into cfg.out_dir.
inline void write_artifacts(const Outcome& out, const Summary* summary) {
  using detail::fmt;
  const RunConfig& cfg = out.cfg;
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  const NodeSet& nodes = out.nodes;
  const RunReport& rep = out.report;

  {
    auto f = detail::open_out(dir / "summary.txt");
    f << "case=" << to_string(cfg.kind) << "\n"
      << "status=" << (out.converged ? "converged" : "failed") << "\n";
    if (!out.converged) f << "failure=" << out.failure << "\n";
    f << "nodes=" << nodes.size() << "\n"
      << "ghost_points=" << out.ghosts << "\n"
      << "h_mm=" << fmt(cfg.h) << "\n"
      << "seed=" << cfg.seed << "\n"
      << "pressure_GPa=" << fmt(cfg.pressure) << "\n"
      << "n_load=" << cfg.n_load << "\n"
      << "tolerance=" << fmt(cfg.tolerance) << "\n"
      << "setup_seconds=" << fmt(out.setup_seconds) << "\n"
      << "solve_seconds=" << fmt(out.solve_seconds) << "\n";
    if (summary) {
      const Summary& s = *summary;
      f << "max_u_mm=" << fmt(s.max_u) << "\n"
        << "svm_inner_GPa=" << fmt(s.vm_inner) << "\n"
        << "svm_outer_GPa=" << fmt(s.vm_outer) << "\n"
        << "u_inner_mm=" << fmt(s.u_inner) << "\n"
        << "u_outer_mm=" << fmt(s.u_outer) << "\n";
      if (s.front) f << "front_c_mm=" << fmt(*s.front) << "\n";
      else f << "front_c_mm=nan\nfront_note=" << s.front_note << "\n";
      f << "max_eq_plastic_strain=" << fmt(s.max_eq_plastic) << "\n"
        << "max_eq_plastic_x_mm=" << fmt(s.max_eq_plastic_at.x()) << "\n"
        << "max_eq_plastic_y_mm=" << fmt(s.max_eq_plastic_at.y()) << "\n"
        << "picard_iterations_total=" << s.total_iterations << "\n"
        << "picard_iterations_average=" << fmt(s.average_iterations) << "\n";
      if (s.l2_error) {
        f << "l2_error_mm=" << fmt(s.l2_error->l2) << "\n"
          << "l2_error_rms_mm=" << fmt(s.l2_error->l2_normalized) << "\n"
          << "max_relative_error=" << fmt(*s.max_relative_error) << "\n";
      }
      if (has_closed_form(cfg) && cfg.hardening == HardeningKind::Perfect) {
        f << "limit_pressure_GPa=" << fmt(limit_pressure(cfg.a, cfg.b, cfg.yield)) << "\n";
        if (cfg.pressure > onset_pressure(cfg.a, cfg.b, cfg.yield) &&
            cfg.pressure <= limit_pressure(cfg.a, cfg.b, cfg.yield))
          f << "front_closed_form_mm=" << fmt(front_from_pressure(cfg.pressure, cfg.a, cfg.b, cfg.yield).c) << "\n";
      }
    }
    for (std::size_t k = 0; k < rep.steps.size(); ++k)
      f << "step_" << k + 1 << "_iterations=" << rep.steps[k].iterations << "\n";
  }
  {
    auto f = detail::open_out(dir / "residual_trace.csv");
    f << "step,pass,residual\n";
    for (std::size_t k = 0; k < out.trace.size(); ++k)
      f << out.trace_index[k][0] << "," << out.trace_index[k][1] << "," << fmt(out.trace[k]) << "\n";
  }
  if (!out.converged) return;

  {
    auto f = detail::open_out(dir / "fields.csv");
    f << "x_mm,y_mm,u_mm,v_mm,sxx_GPa,syy_GPa,szz_GPa,sxy_GPa,svm_GPa,eq_plastic_strain,tag\n";
    for (int i = 0; i < nodes.size(); ++i) {
      const Tensor2PS& s = rep.states[i].stress;
      f << fmt(nodes.positions[i].x()) << "," << fmt(nodes.positions[i].y()) << "," << fmt(rep.displacement[i].x())
        << "," << fmt(rep.displacement[i].y()) << "," << fmt(s.xx) << "," << fmt(s.yy) << "," << fmt(s.zz) << ","
        << fmt(s.xy) << "," << fmt(von_mises(s)) << "," << fmt(rep.states[i].eq_plastic_strain) << ","
        << (nodes.is_boundary(i) ? std::string(to_string(nodes.tags[i])) : std::string("interior")) << "\n";
    }
  }
  {
    // Closed-form columns: elastic solution below the onset pressure, the
    // perfectly plastic approximation between onset and limit load.
    const bool closed = has_closed_form(cfg);
    const double onset = onset_pressure(cfg.a, cfg.b, cfg.yield);
    const bool plastic_ref = closed && cfg.hardening == HardeningKind::Perfect && cfg.pressure > onset &&
                             cfg.pressure <= limit_pressure(cfg.a, cfg.b, cfg.yield);
    const bool elastic_ref = closed && cfg.pressure <= onset;
    const double c = plastic_ref ? front_from_pressure(cfg.pressure, cfg.a, cfg.b, cfg.yield).c : 0.0;
    const double mu = cfg.elastic().mu;
    auto f = detail::open_out(dir / "radial.csv");
    f << "r_mm,theta_rad,sigma_r_GPa,sigma_theta_GPa,sigma_z_GPa,svm_GPa,u_mag_mm,eq_plastic_strain,"
         "sigma_r_ref_GPa,sigma_theta_ref_GPa,sigma_z_ref_GPa,svm_ref_GPa,u_r_ref_mm\n";
    for (int i = 0; i < nodes.size(); ++i) {
      const Vec2& p = nodes.positions[i];
      const CylindricalStress cs = to_cylindrical(rep.states[i].stress, p);
      const double r = p.norm();
      f << fmt(r) << "," << fmt(std::atan2(p.y(), p.x())) << "," << fmt(cs.r) << "," << fmt(cs.theta) << ","
        << fmt(cs.z) << "," << fmt(von_mises(rep.states[i].stress)) << "," << fmt(rep.displacement[i].norm()) << ","
        << fmt(rep.states[i].eq_plastic_strain);
      if (elastic_ref || plastic_ref) {
        const double rr = std::clamp(r, cfg.a, cfg.b);
        const CylinderSolution ref = elastic_ref
                                         ? elastic_reference(rr, cfg.pressure, cfg.a, cfg.b, cfg.young, cfg.poisson)
                                         : plastic_reference(rr, c, cfg.a, cfg.b, cfg.yield, cfg.poisson, mu);
        const Tensor2PS polar{ref.sigma_r, ref.sigma_theta, ref.sigma_z, 0.0};
        f << "," << fmt(ref.sigma_r) << "," << fmt(ref.sigma_theta) << "," << fmt(ref.sigma_z) << ","
          << fmt(von_mises(polar)) << "," << fmt(ref.u_r) << "\n";
      } else {
        f << ",nan,nan,nan,nan,nan\n";
      }
    }
  }
  {
    auto f = detail::open_out(dir / "front_shape.csv");
    f << "segment,angle_deg,c_mm,ok\n";
    const std::vector<SegmentFront> segs = front_shape(nodes.positions, rep.states, 20);
    for (std::size_t k = 0; k < segs.size(); ++k)
      f << k << "," << fmt(segs[k].angle * 180.0 / std::numbers::pi) << ","
        << (segs[k].ok ? fmt(segs[k].c) : std::string("nan")) << "," << (segs[k].ok ? 1 : 0) << "\n";
  }
}

/// Exit codes of the command line tool.
inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitSolverFailure = 2;

/// Runs one configuration end to end and writes its artifacts.
inline int run_case(const RunConfig& cfg, std::ostream& log) {
  const bool export_requested = !cfg.export_matrix.empty();
  Outcome out = execute(cfg, export_requested);
  if (export_requested) export_matrix(*out.system, cfg.export_matrix);
  std::optional<Summary> summary;
  if (out.converged) summary = summarize(out);
  write_artifacts(out, summary ? &*summary : nullptr);
  if (!out.converged) {
    log << "solver failure: " << out.failure << "\n";
    return kExitSolverFailure;
  }
  log << "case " << to_string(cfg.kind) << ": N=" << summary->nodes << " max|u|=" << summary->max_u
      << " mm, svm(a)=" << summary->vm_inner << " GPa, svm(b)=" << summary->vm_outer
      << " GPa, Picard iterations " << summary->total_iterations << "\n";
  return kExitSuccess;
}

enum class SweepAxis { H, Seed, NLoad };

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "h") return SweepAxis::H;
  if (s == "seed") return SweepAxis::Seed;
  if (s == "n_load" || s == "n-load") return SweepAxis::NLoad;
  throw ConfigError("unknown sweep axis '" + s + "' (h, seed or n_load)");
}

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::H: return "h";
    case SweepAxis::Seed: return "seed";
    case SweepAxis::NLoad: return "n_load";
  }
  return "h";
}

struct SweepRow {
  double value = 0.0;
  bool converged = false;
  std::string failure;
  int nodes = 0;
  std::optional<ErrorNorm> l2_error;
  std::optional<double> max_relative_error;
  double max_u = 0.0;
  int total_iterations = 0;
  double average_iterations = 0.0;
};

/// One run per value; failures are recorded and the sweep continues.
inline std::vector<SweepRow> sweep(const RunConfig& base, SweepAxis axis, const std::vector<double>& values) {
  if (values.size() < 2) throw ConfigError("a sweep needs at least two values");
  std::vector<SweepRow> rows;
  for (double v : values) {
    RunConfig cfg = base;
    switch (axis) {
      case SweepAxis::H: cfg.h = v; break;
      case SweepAxis::Seed: cfg.seed = static_cast<std::uint64_t>(v); break;
      case SweepAxis::NLoad: cfg.n_load = static_cast<int>(v); break;
    }
    SweepRow row;
    row.value = v;
    try {
      const Outcome out = execute(cfg);
      row.nodes = out.nodes.size();
      row.converged = out.converged;
      row.failure = out.failure;
      if (out.converged) {
        const Summary s = summarize(out);
        row.l2_error = s.l2_error;
        row.max_relative_error = s.max_relative_error;
        row.max_u = s.max_u;
        row.total_iterations = s.total_iterations;
        row.average_iterations = s.average_iterations;
      }
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_sweep(const std::filesystem::path& path, SweepAxis axis, const std::vector<SweepRow>& rows) {
  using detail::fmt;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto f = detail::open_out(path);
  f << to_string(axis) << ",nodes,status,l2_error_mm,l2_error_rms_mm,max_relative_error,max_u_mm,"
       "picard_iterations_total,picard_iterations_average\n";
  for (const SweepRow& r : rows) {
    f << fmt(r.value) << "," << r.nodes << "," << (r.converged ? "converged" : "failed") << ","
      << (r.l2_error ? fmt(r.l2_error->l2) : "nan") << "," << (r.l2_error ? fmt(r.l2_error->l2_normalized) : "nan")
      << "," << (r.max_relative_error ? fmt(*r.max_relative_error) : "nan") << "," << fmt(r.max_u) << ","
      << r.total_iterations << "," << fmt(r.average_iterations) << "\n";
  }
}

/// "h=4,2,1" -> axis and values.
inline std::pair<SweepAxis, std::vector<double>> parse_sweep(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("sweep expects axis=v1,v2,...");
  const SweepAxis axis = parse_axis(detail::trim(spec.substr(0, eq)));
  std::vector<double> values;
  std::stringstream ss(spec.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(detail::to_double("sweep", detail::trim(item)));
  if (values.size() < 2) throw ConfigError("a sweep needs at least two values");
  return {axis, values};
}

}  // namespace rbfplast::cli
