#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sfr/errors.hpp"
#include "sfr/greens.hpp"
#include "sfr/harness.hpp"
#include "sfr/pibi.hpp"
#include "sfr/random.hpp"

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& output_dir, bool quiet) {
  auto cfg = sfr::load_config(config_path);
  if (seed) cfg.base_seed = *seed;
  if (!output_dir.empty()) cfg.output_dir = output_dir;

  sfr::RunStats stats;
  const auto rows = sfr::run_sweep(cfg, {quiet ? nullptr : &std::cerr}, &stats);

  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;

  std::printf("%-5s %12s %5s %5s %5s %18s %18s\n", "meth", "freq_hz", "M", "N", "folds", "nmse_db", "ncc");
  for (const auto& s : sfr::summarize(rows)) {
    std::printf("%-5s %12.3f %5d %5d %5d %9.2f +- %5.2f %9.4f +- %5.4f\n", sfr::to_string(s.method).c_str(),
                s.frequency_hz, s.m_mics, s.n_points, s.folds, s.nmse_mean, s.nmse_std, s.ncc_mean, s.ncc_std);
  }
  std::printf("%zu rows (%zu trained, %zu resumed, %zu failed) -> %s/results.csv\n", rows.size(), stats.trained,
              stats.resumed, failed, cfg.output_dir.c_str());
  return 0;
}

int cmd_render(const std::string& field_csv, const std::string& out_ppm) {
  const auto field = sfr::load_field_csv(field_csv);
  sfr::render_heatmap(field.grid, field.values, out_ppm);
  return 0;
}

// Exterior point source, exact boundary data, direct two-density quadrature.
int cmd_oracle(double freq, double offset, std::uint64_t seed) {
  const sfr::Region region{{0.5, 0.5}, 2.0, 2.0};
  const auto k = sfr::Wavenumber::from_frequency(freq, 343.0);
  const sfr::Point2 source{region.center().x, region.origin.y - offset - 1.0};

  sfr::Rng rng(seed);
  std::vector<sfr::Point2> probes;
  const double margin = 0.2 - offset;  // keeps probes > 0.2 m from the contour
  while (probes.size() < 20) {
    const sfr::Point2 p{rng.uniform(region.origin.x, region.x_max()), rng.uniform(region.origin.y, region.y_max())};
    if (region.interior_distance(p) > margin + 1e-9) probes.push_back(p);
  }

  std::printf("exterior source at (%.3f, %.3f), f = %.3f Hz, offset %.2f m\n", source.x, source.y, freq, offset);
  std::printf("%6s %14s %14s\n", "n_int", "rel_l2_err", "max_point_err");
  double prev = INFINITY;
  bool monotone = true;
  double last = 0.0;
  for (int n : {25, 50, 100, 200, 400}) {
    const auto b = sfr::discretize_boundary(region, n, offset);
    Eigen::MatrixXcd dens(n, 2);
    for (int i = 0; i < n; ++i) {
      dens(i, 0) = sfr::green_2d(source, b.points[i], k);
      dens(i, 1) = sfr::green_2d_normal_derivative(b.points[i], source, k, b.normals[i]);
    }
    double worst = 0.0, sq_err = 0.0, sq_ref = 0.0;
    for (const auto& r : probes) {
      const auto exact = sfr::green_2d(source, r, k);
      const auto est = sfr::evaluate_field(b, sfr::BieRepresentation::direct_two_density, k, dens, r);
      worst = std::max(worst, std::abs(est - exact) / std::abs(exact));
      sq_err += std::norm(est - exact);
      sq_ref += std::norm(exact);
    }
    const double rel = std::sqrt(sq_err / sq_ref);
    std::printf("%6d %14.3e %14.3e\n", n, rel, worst);
    if (rel > prev + 1e-10) monotone = false;
    prev = rel;
    if (n == 200) last = rel;
  }
  const bool ok = monotone && last < 1e-3;
  std::printf("%s: error at n_int = 200 is %.3e, %s\n", ok ? "ok" : "FAILED", last,
              monotone ? "non-increasing in n_int" : "not monotone in n_int");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pressure field interpolation from sparse microphones: boundary-density networks and a PINN baseline"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "override base_seed")->option_text("UINT");

  auto* run = app.add_subcommand("run", "run the experiment sweep described by a JSON config");
  std::string config_path, output_dir;
  bool quiet = false;
  run->add_option("config", config_path, "config file")->required();
  run->add_option("-o,--output-dir", output_dir, "override output_dir");
  run->add_flag("-q,--quiet", quiet, "no per-row progress");
  run->add_option("--seed", seed, "override base_seed");

  auto* render = app.add_subcommand("render", "render the real part of a field CSV as a PPM heatmap");
  std::string field_csv, out_ppm;
  render->add_option("field", field_csv, "field CSV (x,y,re,im)")->required();
  render->add_option("out", out_ppm, "output .ppm")->required();

  auto* oracle = app.add_subcommand("oracle", "exterior-source quadrature check and n_int convergence table");
  double freq = 390.625, offset = 0.1;
  oracle->add_option("--freq", freq, "frequency in Hz");
  oracle->add_option("--offset", offset, "contour offset in m");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed, output_dir, quiet);
    if (*render) return cmd_render(field_csv, out_ppm);
    if (*oracle) return cmd_oracle(freq, offset, seed.value_or(0));
  } catch (const sfr::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
