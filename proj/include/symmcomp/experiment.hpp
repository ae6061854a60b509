#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/json_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "symmcomp/error.hpp"
#include "symmcomp/harness.hpp"
#include "symmcomp/mesh.hpp"

namespace symmcomp {

/// "disk r=1 h=0.05 offset=(0.3,0)"; shapes disk (r), annulus (r_in, r_out),
/// ellipse (a, b), rectangle (a, b), square (a), lshape (a), file (path).
struct DomainSpec {
  std::string shape = "disk";
  std::map<std::string, double> size;
  Vec2 center{};
  double h = 0.1;
  std::string file;

  double get(const std::string& key, double fallback) const {
    auto it = size.find(key);
    return it == size.end() ? fallback : it->second;
  }
};

namespace detail {

inline double parse_number(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used == 0 || used != text.size())
    throw Error(ErrorKind::parse, where + ": expected a number, got '" + text + "'");
  return v;
}

inline Vec2 parse_point(std::string text, const std::string& where) {
  for (char& c : text)
    if (c == '(' || c == ')' || c == '[' || c == ']') c = ' ';
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw Error(ErrorKind::parse, where + ": expected a point (x, y), got '" + text + "'");
  const auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t");
    const auto b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  return {parse_number(trim(text.substr(0, comma)), where), parse_number(trim(text.substr(comma + 1)), where)};
}

inline void set_domain_key(DomainSpec& d, const std::string& key, const std::string& value, const std::string& where) {
  if (key == "shape") {
    d.shape = value;
  } else if (key == "offset" || key == "center") {
    d.center = parse_point(value, where + " " + key);
  } else if (key == "h") {
    d.h = parse_number(value, where + " h");
  } else if (key == "path" || key == "file") {
    d.file = value;
  } else if (key == "radius" || key == "r") {
    d.size["r"] = parse_number(value, where + " " + key);
  } else if (key == "r_in" || key == "r_out" || key == "a" || key == "b") {
    d.size[key] = parse_number(value, where + " " + key);
  } else {
    throw Error(ErrorKind::parse, where + ": unknown domain key '" + key + "'");
  }
}

}  // namespace detail

inline DomainSpec parse_domain_spec(const std::string& text) {
  std::istringstream is(text);
  DomainSpec d;
  if (!(is >> d.shape)) throw Error(ErrorKind::parse, "empty mesh spec");
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::parse, "mesh spec: expected key=value, got '" + tok + "'");
    detail::set_domain_key(d, tok.substr(0, eq), tok.substr(eq + 1), "mesh spec");
  }
  return d;
}

inline TriMesh build_mesh(const DomainSpec& d, double h) {
  if (d.shape == "disk") return make_disk(d.get("r", 1.0), h, d.center);
  if (d.shape == "annulus") return make_annulus(d.get("r_in", 0.5), d.get("r_out", 1.0), h, d.center);
  if (d.shape == "ellipse") return make_ellipse(d.get("a", 1.0), d.get("b", 0.5), h, d.center);
  if (d.shape == "rectangle") return make_rectangle(d.get("a", 1.0), d.get("b", 0.5), h, d.center);
  if (d.shape == "square") return make_square(d.get("a", 1.0), h, d.center);
  if (d.shape == "lshape") return make_lshape(d.get("a", 1.0), h, d.center);
  if (d.shape == "file") {
    std::ifstream in(d.file);
    if (!in) throw Error(ErrorKind::io, "cannot open mesh file '" + d.file + "'");
    return read_mesh(in);
  }
  throw Error(ErrorKind::invalid_argument, "unknown shape '" + d.shape + "'");
}

inline TriMesh build_mesh(const DomainSpec& d) { return build_mesh(d, d.h); }

struct ExperimentConfig {
  std::string id = "experiment";
  DomainSpec domain;
  int n = 2;
  double p = 2.0;
  double ell = -1.0;
  std::string beta = "1";
  std::string f = "1";
  HarnessConfig harness;
  bool theorem1 = true;
  bool theorem2 = false;
  bool faber_krahn = false;
  bool isoperimetric = true;
  int refinements = 0;
  std::filesystem::path output_dir = "out";
};

namespace detail {

inline std::string key_where(const std::string& section, const std::string& key) {
  return "[" + section + "] " + key;
}

inline bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw Error(ErrorKind::parse, where + ": expected true/false, got '" + v + "'");
}

inline std::string point_text(const boost::property_tree::ptree& node) {
  // JSON arrays arrive as unnamed children.
  if (node.empty()) return node.data();
  std::string out;
  for (const auto& [k, v] : node) out += (out.empty() ? "" : ",") + v.data();
  return out;
}

}  // namespace detail

/// Sections: [experiment] id, output; [domain] shape, sizes, offset, h;
/// [params] n, p, ell; [problem] beta, f; [solver] eps0, eps_min, tol,
/// max_newton; [eigen] tol; [verify] theorem1, theorem2, faber_krahn,
/// isoperimetric, refinements.
inline ExperimentConfig parse_config(const boost::property_tree::ptree& tree) {
  ExperimentConfig c;
  static const std::map<std::string, std::vector<std::string>> known = {
      {"experiment", {"id", "output"}},
      {"domain", {}},
      {"params", {"n", "p", "ell"}},
      {"problem", {"beta", "f"}},
      {"solver", {"eps0", "eps_min", "tol", "max_newton"}},
      {"eigen", {"tol"}},
      {"verify", {"theorem1", "theorem2", "faber_krahn", "isoperimetric", "refinements"}},
  };
  for (const auto& [section, node] : tree) {
    auto it = known.find(section);
    if (it == known.end()) throw Error(ErrorKind::parse, "unknown section [" + section + "]");
    for (const auto& [key, value] : node) {
      const auto where = detail::key_where(section, key);
      if (section == "domain") {
        detail::set_domain_key(c.domain, key, detail::point_text(value), "[domain]");
        continue;
      }
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw Error(ErrorKind::parse, where + ": unknown key");
      const std::string v = value.data();
      if (section == "experiment") {
        if (key == "id") c.id = v;
        else c.output_dir = v;
      } else if (section == "params") {
        const double x = detail::parse_number(v, where);
        if (key == "n") {
          if (x != 2.0) throw Error(ErrorKind::parse, where + ": only n = 2 meshes are supported");
          c.n = 2;
        } else if (key == "p") {
          c.p = x;
        } else {
          c.ell = x;
        }
      } else if (section == "problem") {
        (key == "beta" ? c.beta : c.f) = v;
      } else if (section == "solver") {
        const double x = detail::parse_number(v, where);
        if (key == "eps0") c.harness.solver.eps0 = x;
        else if (key == "eps_min") c.harness.solver.eps_min = x;
        else if (key == "tol") c.harness.solver.tol_solve = x;
        else c.harness.solver.max_newton = static_cast<int>(x);
      } else if (section == "eigen") {
        c.harness.eigen.tol = detail::parse_number(v, where);
      } else if (section == "verify") {
        if (key == "refinements") {
          const double x = detail::parse_number(v, where);
          if (x < 0.0 || x != std::floor(x)) throw Error(ErrorKind::parse, where + ": expected a count >= 0");
          c.refinements = static_cast<int>(x);
        } else {
          const bool b = detail::parse_bool(v, where);
          if (key == "theorem1") c.theorem1 = b;
          else if (key == "theorem2") c.theorem2 = b;
          else if (key == "faber_krahn") c.faber_krahn = b;
          else c.isoperimetric = b;
        }
      }
    }
  }
  if (!(c.domain.h > 0.0)) throw Error(ErrorKind::parse, "[domain] h: must be positive");
  c.harness.mesh_h = c.domain.h;
  return c;
}

/// INI by default, JSON for a .json extension.
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config '" + path.string() + "'");
  boost::property_tree::ptree tree;
  try {
    if (path.extension() == ".json") boost::property_tree::read_json(in, tree);
    else boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::file_parser_error& e) {
    std::ostringstream os;
    os << path.string() << ":" << e.line() << ": " << e.message();
    throw Error(ErrorKind::parse, os.str());
  }
  try {
    auto c = parse_config(tree);
    if (c.id == "experiment") c.id = path.stem().string();
    return c;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::parse) throw Error(ErrorKind::parse, path.string() + ": " + e.what());
    throw;
  }
}

/// Hypothesis gate on the exponents: the weight must be integrable (H2 lower
/// end) and p >= n (H1). An integrable weight with ell >= 0 runs as
/// informational.
inline WeightParams experiment_params(const ExperimentConfig& c) {
  if (!(c.p > 1.0)) throw Error(ErrorKind::parse, "[params] p: must be > 1");
  if (c.ell <= -c.n) {
    std::ostringstream os;
    os << "H2 violated: ell = " << c.ell << " is not in (-n, 0) = (" << -c.n << ", 0); the weight |x|^ell is not integrable";
    throw Error(ErrorKind::hypothesis, os.str());
  }
  if (c.p < c.n) {
    std::ostringstream os;
    os << "H1 violated: p = " << c.p << " < n = " << c.n;
    throw Error(ErrorKind::hypothesis, os.str());
  }
  return WeightParams::make(c.n, c.p, c.ell);
}

inline RobinProblem experiment_problem(const ExperimentConfig& c, TriMesh mesh) {
  const auto par = experiment_params(c);
  const Expression fx(c.f);
  auto f = interpolate(mesh, [&](Vec2 x) { return fx(x); });
  return RobinProblem::make(std::move(mesh), par, std::move(f), RobinCoefficient::expression(c.beta));
}

struct Refusal {
  std::string check;
  std::string reason;
};

struct RunSummary {
  std::vector<ComparisonReport> reports;
  std::vector<Refusal> refusals;
  int exit_code = 0;
};

inline nlohmann::json to_json(const RunSummary& s, const std::string& id) {
  nlohmann::json j;
  j["experiment"] = id;
  j["exit_code"] = s.exit_code;
  j["reports"] = nlohmann::json::array();
  for (const auto& r : s.reports) j["reports"].push_back(to_json(r));
  j["refused"] = nlohmann::json::array();
  for (const auto& r : s.refusals) j["refused"].push_back({{"check", r.check}, {"reason", r.reason}});
  return j;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << text;
}

template <class W>
void write_with(const std::filesystem::path& path, W&& writer) {
  std::ostringstream os;
  writer(os);
  write_text(path, os.str());
}

inline std::string gnuplot_curves(const std::string& title) {
  return "set datafile separator ','\n"
         "set key autotitle columnhead\n"
         "set xlabel 'r'\n"
         "set title '" + title + "'\n"
         "set terminal pngcairo size 800,600\n"
         "set output 'u_sharp_vs_v.png'\n"
         "plot 'u_sharp_vs_v.csv' using 1:2 with lines, '' using 1:3 with lines\n";
}

inline std::string gnuplot_margins(std::size_t columns) {
  std::string s =
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set logscale x\n"
      "set xlabel 'h'\n"
      "set ylabel 'margin'\n"
      "set terminal pngcairo size 800,600\n"
      "set output 'margin_vs_h.png'\n"
      "plot";
  for (std::size_t k = 2; k <= columns; ++k)
    s += (k > 2 ? "," : "") + std::string(" 'margin_vs_h.csv' using 1:") + std::to_string(k) + " with linespoints";
  return s + "\n";
}

inline ComparisonReport isoperimetric_report(const TriMesh& mesh, const WeightParams& par, double h) {
  const auto iso = isoperimetric_check(mesh, par);
  ComparisonReport r;
  r.id = "isoperimetric";
  r.h = mesh.max_edge();
  r.hypotheses.push_back({"H1", par.h1(), "p >= n"});
  r.hypotheses.push_back({"H2 or ell = 0", par.h2() || par.classical(), "ell in (-n, 0] "});
  r.checks.push_back({"gamma |Omega|^power <= P", iso.rhs, iso.lhs, 0.5 * h * h * iso.rhs});
  return r;
}

}  // namespace detail

/// Runs the configured pipeline and writes every artifact under
/// cfg.output_dir. Exit code: 0 when all non-informational checks pass,
/// 1 when one fails, 3 when a requested check was refused.
inline RunSummary run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  const auto par = experiment_params(cfg);
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  RunSummary out;

  const auto mesh = build_mesh(cfg.domain);
  detail::write_with(dir / "mesh.msh", [&](std::ostream& os) { write_mesh(os, mesh); });
  const auto problem = experiment_problem(cfg, mesh);

  if (cfg.isoperimetric) out.reports.push_back(detail::isoperimetric_report(mesh, par, cfg.domain.h));

  if (cfg.theorem1 || cfg.theorem2) {
    const auto s = solve_pair(problem, cfg.harness);
    detail::write_with(dir / "u.field", [&](std::ostream& os) { write_field(os, s.u.u); });
    detail::write_with(dir / "u.csv", [&](std::ostream& os) { write_field_csv(os, mesh, s.u.u); });
    detail::write_with(dir / "v.csv", [&](std::ostream& os) { write_csv(os, s.v); });
    detail::write_with(dir / "f_sharp.csv", [&](std::ostream& os) { write_csv(os, s.sp.f_sharp); });
    const auto mu = distribution_function(detail::abs_field(s.u.u), mesh, par);
    detail::write_with(dir / "mu.csv", [&](std::ostream& os) { write_csv(os, mu); });
    detail::write_with(dir / "u_star.csv", [&](std::ostream& os) { write_csv(os, decreasing_rearrangement(mu)); });
    if (cfg.theorem1) out.reports.push_back(verify_theorem1(problem, s, cfg.harness, "theorem1"));
    if (cfg.theorem2) {
      try {
        out.reports.push_back(verify_theorem2(problem, s, cfg.harness, "theorem2"));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::hypothesis) throw;
        out.refusals.push_back({"theorem2", e.what()});
      }
    }
    for (const auto& r : out.reports) {
      for (const auto& c : r.curves) {
        detail::write_with(dir / (c.name + ".csv"), [&](std::ostream& os) { write_csv(os, c); });
        detail::write_text(dir / "u_sharp_vs_v.gp", detail::gnuplot_curves(cfg.id));
      }
    }
  }

  if (cfg.faber_krahn) {
    auto fk = verify_faber_krahn(mesh, problem.beta, par, cfg.harness, "faber_krahn");
    const auto eig = min_rayleigh(mesh, problem.beta, par, cfg.harness.eigen);
    detail::write_text(dir / "eigen.json", to_json(eig).dump(2) + "\n");
    detail::write_with(dir / "eigenfield.csv", [&](std::ostream& os) { write_eigenfield_csv(os, eig, &mesh); });
    out.reports.push_back(std::move(fk));
  }

  if (cfg.refinements > 0 && cfg.theorem1) {
    // Margins of the integral comparisons under halving h.
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    for (int j = 0; j <= cfg.refinements; ++j) {
      const double h = cfg.domain.h / std::pow(2.0, j);
      TriMesh m = build_mesh(cfg.domain, h);
      if (cfg.domain.shape == "file")
        for (int k = 0; k < j; ++k) m = refine(m);
      auto hc = cfg.harness;
      hc.curves = false;
      hc.lorentz_rows = false;
      const auto r = verify_theorem1(experiment_problem(cfg, std::move(m)), hc, "theorem1");
      if (names.empty())
        for (const auto& c : r.checks) names.push_back(c.name);
      std::vector<double> row{r.h};
      for (const auto& c : r.checks) row.push_back(c.margin());
      rows.push_back(std::move(row));
    }
    CurveTable t{"margin_vs_h", {"h"}, rows};
    for (const auto& n : names) t.columns.push_back(n);
    detail::write_with(dir / "margin_vs_h.csv", [&](std::ostream& os) { write_csv(os, t); });
    detail::write_text(dir / "margin_vs_h.gp", detail::gnuplot_margins(t.columns.size()));
  }

  bool pass = true;
  for (const auto& r : out.reports) pass = pass && r.pass();
  out.exit_code = !out.refusals.empty() ? 3 : (pass ? 0 : 1);
  detail::write_text(dir / "report.json", to_json(out, cfg.id).dump(2) + "\n");
  detail::write_with(dir / "report.csv", [&](std::ostream& os) { write_csv(os, out.reports); });
  return out;
}

/// Exit code for an error escaping the pipeline.
inline int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::parse:
    case ErrorKind::invalid_argument:
    case ErrorKind::invalid_mesh:
      return 2;
    case ErrorKind::hypothesis:
    case ErrorKind::non_integrable_weight:
      return 3;
    case ErrorKind::not_converged:
      return 4;
    default:
      return 1;
  }
}

}  // namespace symmcomp
