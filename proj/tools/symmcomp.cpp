#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "symmcomp/experiment.hpp"

namespace fs = std::filesystem;
using namespace symmcomp;

namespace {

int run_command(const std::string& config, const std::string& out) {
  auto cfg = load_config(config);
  if (!out.empty()) cfg.output_dir = out;
  const auto summary = run_experiment(cfg);
  for (const auto& r : summary.reports) {
    std::cout << r.id << (r.informational() ? " [informational]" : "") << (r.pass() ? " pass" : " FAIL") << '\n';
    for (const auto& c : r.checks) {
      std::cout << "  " << std::left << std::setw(34) << c.name << " margin " << std::setw(14) << c.margin()
                << " tol " << c.tolerance << (c.informational ? " (info)" : "") << '\n';
    }
  }
  for (const auto& r : summary.refusals) std::cerr << r.check << " refused: " << r.reason << '\n';
  std::cout << "artifacts in " << cfg.output_dir.string() << '\n';
  return summary.exit_code;
}

int mesh_command(const std::string& spec, const std::string& out, double ell) {
  const auto d = parse_domain_spec(spec);
  const auto mesh = build_mesh(d);
  std::ofstream os(out);
  if (!os) throw Error(ErrorKind::io, "cannot write '" + out + "'");
  write_mesh(os, mesh);
  const bool origin_inside = mesh.origin_element() >= 0;
  std::cout << out << ": " << mesh.num_vertices() << " vertices, " << mesh.num_triangles() << " triangles\n"
            << "origin " << (origin_inside ? "inside" : "outside") << " the domain, not on the boundary\n"
            << std::setprecision(10) << "weighted measure (ell = " << ell << "): " << weighted_measure(mesh, ell)
            << '\n';
  return 0;
}

int refine_command(const std::string& in, std::string out, int times) {
  std::ifstream is(in);
  if (!is) throw Error(ErrorKind::io, "cannot open mesh file '" + in + "'");
  auto mesh = read_mesh(is);
  for (int k = 0; k < times; ++k) mesh = refine(mesh);
  if (out.empty()) {
    const fs::path p(in);
    out = (p.parent_path() / (p.stem().string() + ".refined" + p.extension().string())).string();
  }
  std::ofstream os(out);
  if (!os) throw Error(ErrorKind::io, "cannot write '" + out + "'");
  write_mesh(os, mesh);
  std::cout << out << ": " << mesh.num_vertices() << " vertices, " << mesh.num_triangles() << " triangles\n";
  return 0;
}

int report_command(const std::string& dir) {
  const fs::path path = fs::path(dir) / "report.json";
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "no report.json in '" + dir + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  bool pass = true;
  std::cout << "experiment " << j.value("experiment", "?") << '\n';
  for (const auto& r : j.at("reports")) {
    const bool ok = r.at("pass").get<bool>();
    pass = pass && ok;
    std::cout << "  " << std::left << std::setw(16) << r.at("id").get<std::string>() << " h " << std::setw(12)
              << r.at("h").get<double>() << (ok ? " pass" : " FAIL")
              << (r.at("informational").get<bool>() ? " (informational)" : "") << '\n';
    for (const auto& c : r.at("checks")) {
      std::cout << "    " << std::setw(34) << c.at("name").get<std::string>() << " lhs " << std::setw(14)
                << c.at("lhs").get<double>() << " rhs " << std::setw(14) << c.at("rhs").get<double>() << " margin "
                << c.at("margin").get<double>() << '\n';
    }
  }
  for (const auto& r : j.at("refused"))
    std::cout << "  " << r.at("check").get<std::string>() << " refused: " << r.at("reason").get<std::string>() << '\n';
  return j.value("exit_code", pass ? 0 : 1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted symmetrization comparisons for the Robin p-Laplacian"};
  app.require_subcommand(1);

  std::string config, out;
  auto* run = app.add_subcommand("run", "run an experiment config (INI, or JSON by extension)");
  run->add_option("config", config, "config file")->required();
  run->add_option("-o,--out", out, "output directory (overrides [experiment] output)");

  std::string spec, mesh_out = "mesh.msh";
  double ell = -1.0;
  auto* mesh = app.add_subcommand("mesh", "generate a mesh, e.g. \"disk r=1 h=0.05\"");
  mesh->add_option("spec", spec, "shape and key=value sizes")->required();
  mesh->add_option("-o,--out", mesh_out, "mesh file");
  mesh->add_option("--ell", ell, "weight exponent for the printed measure");

  std::string mesh_in, refine_out;
  int times = 1;
  auto* ref = app.add_subcommand("refine", "uniform midpoint subdivision");
  ref->add_option("mesh", mesh_in, "mesh file")->required();
  ref->add_option("-o,--out", refine_out, "output file (default <name>.refined<ext>)");
  ref->add_option("-n,--times", times, "number of subdivisions")->check(CLI::NonNegativeNumber);

  std::string report_dir;
  auto* rep = app.add_subcommand("report", "summarize report.json of a run");
  rep->add_option("--dir", report_dir, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) return run_command(config, out);
    if (*mesh) return mesh_command(spec, mesh_out, ell);
    if (*ref) return refine_command(mesh_in, refine_out, times);
    if (*rep) return report_command(report_dir);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
