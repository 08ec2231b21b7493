#pragma once

// Batch command-line surface.  Every subcommand reads one RunConfig, writes
// its artifacts plus a run manifest into the output directory, and exits with
// 0 (success), 2 (invalid configuration / missing inputs, with field-level
// diagnostics on stderr), or 3 (numerical failure, with a diagnostics JSON
// next to the other outputs).  `rerun <manifest>` replays a recorded run from
// the resolved config embedded in its manifest.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "merotherm/cloud.hpp"
#include "merotherm/config.hpp"
#include "merotherm/io.hpp"
#include "merotherm/measure.hpp"
#include "merotherm/model.hpp"
#include "merotherm/parallel.hpp"
#include "merotherm/pressure.hpp"
#include "merotherm/transfer.hpp"
#include "merotherm/verify.hpp"

namespace merotherm::cli {

namespace fs = std::filesystem;

// Output directory precedence: --out flag, config output.directory, the
// MEROTHERM_OUT environment variable, then "./out".
inline fs::path resolve_output_dir(const std::string& flag_dir, const RunConfig& cfg) {
  if (!flag_dir.empty()) return flag_dir;
  if (!cfg.output_directory.empty()) return cfg.output_directory;
  if (const char* env = std::getenv("MEROTHERM_OUT"); env != nullptr && *env != '\0')
    return env;
  return "out";
}

struct RunContext {
  RunConfig cfg;
  fs::path out_dir;
  int threads = 1;
  std::vector<std::string> outputs;  // artifact file names, relative to out_dir

  [[nodiscard]] fs::path path(const std::string& name) const { return out_dir / name; }

  void record(const std::string& name) { outputs.push_back(name); }
};

// ---------------------------------------------------------------------------
// Subcommand runners.  Each writes its artifacts and records their names.

inline void run_sample_julia(RunContext& ctx) {
  const TangentMap m = ctx.cfg.make_model();
  const JuliaCloud cloud = sample_julia(m, ctx.cfg.seed_hint(), ctx.cfg.depth,
                                        ctx.cfg.budget, ctx.cfg.rng_seed);
  write_cloud_csv(ctx.path("cloud.csv"), cloud);
  ctx.record("cloud.csv");

  ojson diag;
  diag["points"] = cloud.size();
  diag["depth"] = cloud.depth;
  diag["seed"] = {cloud.seed.real(), cloud.seed.imag()};
  diag["min_modulus"] = cloud.min_modulus;
  diag["pairwise_resolution"] = cloud.pairwise_resolution;
  diag["delta_estimate"] = estimate_delta(m, cloud);
  diag["backward_orbit_residual"] = backward_orbit_residual(m, cloud);
  write_json_file(ctx.path("cloud.json"), diag);
  ctx.record("cloud.json");
}

inline PressureEstimate desk_pressure(const RunContext& ctx, const TangentMap& m) {
  const cplx w0 = find_repelling_fixed_point(m, ctx.cfg.seed_hint());
  return estimate_pressure(m, ctx.cfg.potential(), w0, ctx.cfg.n_max,
                           ctx.cfg.truncation());
}

inline void run_pressure(RunContext& ctx) {
  const TangentMap m = ctx.cfg.make_model();
  const PressureEstimate est = desk_pressure(ctx, m);
  write_pressure_artifacts(ctx.path("pressure.csv"), ctx.path("pressure.json"), {est});
  ctx.record("pressure.csv");
  ctx.record("pressure.json");
}

inline void run_pressure_curve(RunContext& ctx) {
  const TangentMap m = ctx.cfg.make_model();
  const cplx w0 = find_repelling_fixed_point(m, ctx.cfg.seed_hint());
  std::vector<double> grid;
  for (double t = ctx.cfg.curve_t_min; t <= ctx.cfg.curve_t_max + 1e-12;
       t += ctx.cfg.curve_t_step)
    grid.push_back(t);
  const PressureCurve curve = pressure_curve(m, ctx.cfg.tau, grid, w0, ctx.cfg.n_max,
                                             ctx.cfg.truncation());
  write_pressure_artifacts(ctx.path("curve.csv"), ctx.path("curve.json"), curve.samples);
  ctx.record("curve.csv");
  ctx.record("curve.json");

  ojson meta;
  meta["tau"] = curve.tau;
  meta["strictly_decreasing"] = curve.strictly_decreasing;
  ojson skipped = ojson::array();
  for (const auto& [t, why] : curve.skipped)
    skipped.push_back({{"t", t}, {"reason", why}});
  meta["skipped"] = skipped;
  write_json_file(ctx.path("curve-meta.json"), meta);
  ctx.record("curve-meta.json");
}

inline void run_density(RunContext& ctx) {
  const TangentMap m = ctx.cfg.make_model();
  const JuliaCloud cloud = sample_julia(m, ctx.cfg.seed_hint(), ctx.cfg.depth,
                                        ctx.cfg.budget, ctx.cfg.rng_seed);
  const PressureEstimate est = desk_pressure(ctx, m);
  const CloudContext cc(cloud);
  const CesaroResult res = cesaro_density(m, cc, ctx.cfg.potential(),
                                          ctx.cfg.truncation(), est.value,
                                          ctx.cfg.density_terms);
  write_grid_csv(ctx.path("density.csv"), res.h);
  ctx.record("density.csv");

  ojson diag;
  diag["pressure_used"] = est.value;
  diag["terms"] = ctx.cfg.density_terms;
  diag["residual"] = res.residual;
  diag["residual_decreasing"] = res.residual_decreasing;
  ojson hist = ojson::array();
  for (std::size_t i = 0; i < res.history_terms.size(); ++i)
    hist.push_back({{"terms", res.history_terms[i]},
                    {"residual", res.residual_history[i]}});
  diag["residual_history"] = hist;
  diag["tail_error"] = res.tail_error;
  diag["interp_error"] = res.interp_error;
  diag["note"] = res.note;
  write_json_file(ctx.path("density.json"), diag);
  ctx.record("density.json");
}

inline void run_conformal(RunContext& ctx) {
  const TangentMap m = ctx.cfg.make_model();
  const cplx w0 = find_repelling_fixed_point(m, ctx.cfg.seed_hint());
  const PressureEstimate est = estimate_pressure(m, ctx.cfg.potential(), w0,
                                                 ctx.cfg.n_max, ctx.cfg.truncation());
  const ConformalStrategy strategy = ctx.cfg.conformal_strategy == "adjoint_power"
                                         ? ConformalStrategy::adjoint_power
                                         : ConformalStrategy::nu_s_limit;
  const ConformalResult res =
      conformal_estimate(m, w0, ctx.cfg.potential(), ctx.cfg.conformal_n_max,
                         ctx.cfg.truncation(), strategy, est.value);
  write_measure(ctx.path("conformal.csv"), ctx.path("conformal.json"), res.measure);
  ctx.record("conformal.csv");
  ctx.record("conformal.json");

  ojson meta;
  meta["strategy"] = ctx.cfg.conformal_strategy;
  meta["pressure_used"] = est.value;
  meta["n_max"] = ctx.cfg.conformal_n_max;
  meta["schedule_drift"] = res.schedule_drift;
  ojson sched = ojson::array();
  for (const auto& row : res.schedule) {
    ojson r;
    r["s"] = row.s;
    r["test_integrals"] = row.test_integrals;
    sched.push_back(r);
  }
  meta["schedule"] = sched;
  write_json_file(ctx.path("conformal-meta.json"), meta);
  ctx.record("conformal-meta.json");
}

inline void run_gibbs(RunContext& ctx) {
  const auto input = [&](const std::string& override_path,
                         const char* default_name) -> fs::path {
    return override_path.empty() ? ctx.path(default_name) : fs::path(override_path);
  };
  const fs::path conformal_csv = input(ctx.cfg.gibbs_conformal_csv, "conformal.csv");
  const fs::path conformal_json = input(ctx.cfg.gibbs_conformal_json, "conformal.json");
  const fs::path density_csv = input(ctx.cfg.gibbs_density_csv, "density.csv");
  std::vector<std::string> missing;
  for (const fs::path& p : {conformal_csv, conformal_json, density_csv})
    if (!fs::exists(p))
      missing.push_back(p.string() +
                        ": missing input artifact (run `conformal` and `density` first)");
  if (!missing.empty()) throw config_error("gibbs inputs missing", std::move(missing));

  const TangentMap m = ctx.cfg.make_model();
  const AtomicMeasure mt = read_measure(conformal_csv, conformal_json);
  JuliaCloud density_cloud;
  const std::vector<double> values = read_grid_csv(density_csv, density_cloud);
  GridFunction h(density_cloud);
  h.values = values;
  h.refresh();

  const AtomicMeasure mu = gibbs_from_density(m, mt, h);
  write_measure(ctx.path("gibbs.csv"), ctx.path("gibbs.json"), mu);
  ctx.record("gibbs.csv");
  ctx.record("gibbs.json");
}

inline void run_verify(RunContext& ctx) {
  const TangentMap m = ctx.cfg.make_model();
  const PotentialParams p = ctx.cfg.potential();
  const TruncationPolicy trunc = ctx.cfg.truncation();
  const JuliaCloud cloud = sample_julia(m, ctx.cfg.seed_hint(), ctx.cfg.depth,
                                        ctx.cfg.budget, ctx.cfg.rng_seed);

  const auto emit = [&](const CheckReport& report, const ojson& extra = {}) {
    ojson j = check_report_json(report);
    if (!extra.empty()) j["detail"] = extra;
    const std::string name = "verify-" + report.lemma_id + ".json";
    write_json_file(ctx.path(name), j);
    ctx.record(name);
  };

  {
    const std::vector<cplx> w_set = {cplx(0.0, 0.0), cplx(1.0, 0.5)};
    const std::vector<double> R_grid = {5, 10, 20, 40, 80};
    const BorelReport borel = borel_check(m, w_set, 2.0, R_grid);
    ojson rows = ojson::array();
    for (const auto& row : borel.rows) {
      ojson r;
      r["w"] = {row.w.real(), row.w.imag()};
      r["full_sum"] = row.full_sum;
      ojson partial = ojson::array();
      for (const auto& [R, sum] : row.partial)
        partial.push_back({{"R", R}, {"sum", sum}});
      r["partial"] = partial;
      rows.push_back(r);
    }
    emit(borel.report, ojson{{"u", 2.0}, {"rows", rows}});
  }

  emit(rapid_growth_check(m, {0, 1}, Annulus{}));
  emit(expansion_check(m, cloud, std::min(8, ctx.cfg.depth)));
  emit(distortion_check(m, cloud, std::min(6, ctx.cfg.depth), p));
  emit(tau_bound_check(m, cloud, p, trunc));

  {
    const std::size_t n = cloud.size();
    const std::vector<std::pair<cplx, cplx>> pairs = {
        {cloud.points[0], cloud.points[n / 2]},
        {cloud.points[n / 4], cloud.points[(3 * n) / 4]}};
    emit(basepoint_independence(m, p, pairs, std::min(8, ctx.cfg.n_max), trunc,
                                pressure_tree_options()));
  }
}

inline void run_dimension(RunContext& ctx) {
  const TangentMap m = ctx.cfg.make_model();
  const cplx w0 = find_repelling_fixed_point(m, ctx.cfg.seed_hint());
  const PressureZero zero = find_pressure_zero(
      m, ctx.cfg.tau, {ctx.cfg.dimension_t_low, ctx.cfg.dimension_t_high},
      ctx.cfg.dimension_tol, w0, ctx.cfg.n_max, ctx.cfg.truncation());

  ojson j;
  j["bracketed"] = zero.bracketed;
  j["t_star"] = zero.t_star;
  j["P_at_t_star"] = zero.P_at_t_star;
  j["t_star_admissible"] = zero.t_star_admissible;
  j["P_low"] = zero.P_low;
  j["P_high"] = zero.P_high;
  j["evaluations"] = zero.evaluations;
  j["dimension_band"] = zero.dimension_band;
  j["note"] = zero.note;
  write_json_file(ctx.path("dimension.json"), j);
  ctx.record("dimension.json");
}

// ---------------------------------------------------------------------------
// Dispatch, manifest, and error mapping.

inline void dispatch(const std::string& subcommand, RunContext& ctx) {
  if (subcommand == "sample-julia") return run_sample_julia(ctx);
  if (subcommand == "pressure") return run_pressure(ctx);
  if (subcommand == "pressure-curve") return run_pressure_curve(ctx);
  if (subcommand == "density") return run_density(ctx);
  if (subcommand == "conformal") return run_conformal(ctx);
  if (subcommand == "gibbs") return run_gibbs(ctx);
  if (subcommand == "verify") return run_verify(ctx);
  if (subcommand == "dimension") return run_dimension(ctx);
  throw config_error("unknown subcommand '" + subcommand + "'");
}

inline ojson make_manifest(const std::string& subcommand, const RunContext& ctx,
                           double wall_seconds) {
  ojson j;
  j["subcommand"] = subcommand;
  ojson cfg = ojson::object();
  for (const auto& [k, v] : ctx.cfg.resolved_entries()) cfg[k] = v;
  j["config"] = cfg;
  ojson versions;
  versions["workbench"] = kWorkbenchVersion;
  versions["compiler"] = __VERSION__;
  j["versions"] = versions;
  j["rng_seed"] = ctx.cfg.rng_seed;
  j["threads"] = ctx.threads;
  j["wall_time_seconds"] = wall_seconds;
  j["outputs"] = ctx.outputs;
  return j;
}

// Executes one subcommand end to end: validate, run, write manifest.  Shared
// by the normal path and `rerun`.
inline int execute(const std::string& subcommand, RunConfig cfg,
                   const std::string& out_flag, int threads,
                   std::ostream& err) {
  RunContext ctx{std::move(cfg), {}, threads < 1 ? 1 : threads, {}};
  ctx.out_dir = resolve_output_dir(out_flag, ctx.cfg);
  set_worker_count(ctx.threads);
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec)
    throw workbench_error("cannot create output directory " + ctx.out_dir.string() +
                          ": " + ec.message());

  const auto t0 = std::chrono::steady_clock::now();
  try {
    dispatch(subcommand, ctx);
  } catch (const config_error&) {
    throw;  // caller maps to exit 2; no diagnostics file for config problems
  } catch (const workbench_error& e) {
    // Numerical failure: machine-readable record next to the other artifacts.
    ojson diag;
    diag["subcommand"] = subcommand;
    diag["error_type"] = [&]() -> std::string {
      if (dynamic_cast<const truncation_failure*>(&e)) return "truncation_failure";
      if (dynamic_cast<const convergence_failure*>(&e)) return "convergence_failure";
      if (dynamic_cast<const domain_error*>(&e)) return "domain_error";
      return "workbench_error";
    }();
    diag["message"] = e.what();
    write_json_file(ctx.path("diagnostics.json"), diag);
    err << "numerical failure (" << diag["error_type"].get<std::string>()
        << "): " << e.what() << "\n";
    err << "diagnostics written to " << ctx.path("diagnostics.json").string() << "\n";
    return 3;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_json_file(ctx.path(subcommand + "-manifest.json"),
                  make_manifest(subcommand, ctx, wall));
  return 0;
}

inline int run_from_manifest(const fs::path& manifest_path, const std::string& out_flag,
                             int threads_flag, std::ostream& err) {
  ojson manifest;
  try {
    manifest = ojson::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw config_error("manifest parse failure",
                       {manifest_path.string() + ": " + e.what()});
  }
  if (!manifest.contains("subcommand") || !manifest.contains("config"))
    throw config_error("manifest missing fields",
                       {manifest_path.string() + ": need 'subcommand' and 'config'"});

  std::string text;
  for (const auto& [k, v] : manifest["config"].items())
    text += k + " = " + v.get<std::string>() + "\n";
  const RunConfig cfg = RunConfig::parse_text(text);
  const int threads =
      threads_flag > 0 ? threads_flag : manifest.value("threads", 1);
  return execute(manifest["subcommand"].get<std::string>(), cfg, out_flag, threads, err);
}

// ---------------------------------------------------------------------------
// Entry point.  Returns the process exit code.

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"merotherm: transfer-operator workbench for meromorphic dynamics"};
  app.require_subcommand(1);

  static const std::vector<std::string> kSubcommands = {
      "sample-julia", "pressure", "pressure-curve", "density",
      "conformal",    "gibbs",    "verify",         "dimension"};

  struct Flags {
    std::string config_path;
    std::string out_dir;
    int threads = 0;
    std::vector<std::string> overrides;
  };
  std::map<std::string, Flags> flags;

  for (const std::string& name : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name);
    Flags& f = flags[name];
    sub->add_option("--config", f.config_path, "run configuration file");
    sub->add_option("--out", f.out_dir, "output directory (overrides config and env)");
    sub->add_option("--threads", f.threads, "worker thread cap");
    sub->add_option("--set", f.overrides, "override 'section.key=value'");
  }
  Flags& rf = flags["rerun"];
  CLI::App* rerun = app.add_subcommand("rerun", "replay a recorded run from its manifest");
  rerun->add_option("manifest", rf.config_path, "run manifest JSON")->required();
  rerun->add_option("--out", rf.out_dir, "output directory (overrides manifest)");
  rerun->add_option("--threads", rf.threads, "worker thread cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return 0;
    }
    err << e.what() << "\n";
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  const Flags& f = flags[name];
  try {
    if (name == "rerun") return run_from_manifest(f.config_path, f.out_dir, f.threads, err);
    RunConfig cfg;
    if (!f.config_path.empty())
      cfg = RunConfig::parse_text(read_text_file(f.config_path));
    for (const std::string& o : f.overrides) cfg.apply_override(o);
    return execute(name, cfg, f.out_dir, f.threads, err);
  } catch (const config_error& e) {
    err << e.what() << "\n";
    for (const std::string& field : e.fields) err << "  - " << field << "\n";
    return 2;
  } catch (const workbench_error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace merotherm::cli
