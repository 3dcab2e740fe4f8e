#include "hsp/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <vector>

#include "hsp/config.hpp"
#include "hsp/errors.hpp"
#include "hsp/io.hpp"
#include "hsp/retrieval.hpp"
#include "hsp/rng.hpp"
#include "hsp/sampler.hpp"
#include "hsp/uncertainty.hpp"

namespace hsp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunContext {
  PipelineConfig cfg;
  fs::path out_dir;
  fs::path config_dir;  // for relative table paths
  std::vector<fs::path> artifacts;
};

fs::path resolve_out_dir(const PipelineConfig& cfg, const CliOptions& opts) {
  if (opts.out_dir) return *opts.out_dir;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("HSP_OUT_DIR"); env != nullptr && env[0] != '\0') {
    return env;
  }
  return "hsp-out";
}

RunContext make_context(const CliOptions& opts) {
  RunContext ctx;
  ctx.cfg = load_config(opts.config_path);
  if (opts.seed) ctx.cfg.seed = *opts.seed;
  ctx.out_dir = resolve_out_dir(ctx.cfg, opts);
  ctx.config_dir = fs::path(opts.config_path).parent_path();
  return ctx;
}

void track(RunContext& ctx, const fs::path& p) { ctx.artifacts.push_back(p); }

void write_manifest(RunContext& ctx, const std::string& command) {
  json m;
  m["format"] = "hsp-manifest";
  m["version"] = 1;
  m["command"] = command;
  m["seed"] = ctx.cfg.seed;
  m["config"] = config_echo(ctx.cfg);
  json arts = json::array();
  for (const auto& p : ctx.artifacts) {
    arts.push_back({{"path", fs::relative(p, ctx.out_dir).generic_string()},
                    {"bytes", static_cast<std::int64_t>(fs::file_size(p))},
                    {"fnv1a64", hex64(fnv1a64_file(p))}});
  }
  m["artifacts"] = arts;
  write_json(ctx.out_dir / ("manifest-" + command + ".json"), m);
}

Wavefunction build_truth_unknown(const RunContext& ctx) {
  auto wf = gaussian_mode(ctx.cfg.grid, ctx.cfg.waist, ctx.cfg.center);
  return apply_phase_profile(std::move(wf), ctx.cfg.truth_phase(ctx.config_dir));
}

Wavefunction build_truth_reference(const RunContext& ctx) {
  return gaussian_mode(ctx.cfg.grid, ctx.cfg.waist, ctx.cfg.center);
}

void run_simulate(RunContext& ctx) {
  const auto psi_u = build_truth_unknown(ctx);
  const auto psi_r = build_truth_reference(ctx);
  const auto jd = hsp_distribution(psi_u, psi_r, ctx.cfg.visibility);
  const auto sim =
      simulate_experiment(psi_u, psi_r, ctx.cfg.visibility, ctx.cfg.n_pairs,
                          ctx.cfg.n_marginal_events, ctx.cfg.detector, ctx.cfg.seed);

  fs::create_directories(ctx.out_dir);
  const auto put = [&](const fs::path& name) {
    const auto p = ctx.out_dir / name;
    track(ctx, p);
    return p;
  };
  write_wavefunction(put("truth_psi_u.tsv"), psi_u);
  write_wavefunction(put("truth_psi_r.tsv"), psi_r);
  write_joint_distribution(put("hsp_exact.tsv"), jd);
  write_pgm_with_scale(put("hsp_exact.pgm"), jd.grid, jd.p);
  track(ctx, ctx.out_dir / "hsp_exact.pgm.json");
  write_coincidence_counts(put("coincidences.tsv"), sim.coincidences);
  write_marginal_counts(put("marginal_u.tsv"), sim.marginal_u);
  write_marginal_counts(put("marginal_r.tsv"), sim.marginal_r);
  write_manifest(ctx, "simulate");
}

struct Dataset {
  bool from_counts = false;
  CoincidenceCounts counts;
  MarginalCounts m_u, m_r;
  JointDistribution exact;
  std::vector<double> amp_u, amp_r;
};

Dataset read_dataset(const RunContext& ctx, bool counts_required) {
  Dataset ds;
  const auto counts_path = ctx.out_dir / "coincidences.tsv";
  if (fs::exists(counts_path)) {
    ds.from_counts = true;
    ds.counts = read_coincidence_counts(counts_path);
    ds.m_u = read_marginal_counts(ctx.out_dir / "marginal_u.tsv");
    ds.m_r = read_marginal_counts(ctx.out_dir / "marginal_r.tsv");
    if (!(ds.counts.grid == ctx.cfg.grid)) {
      throw DataError("retrieve: counts grid does not match the configured grid");
    }
    return ds;
  }
  if (counts_required) {
    throw DataError("missing " + counts_path.string() + " (run 'hsp simulate' first)");
  }
  // Exact mode: the exported noiseless hologram plus truth amplitudes.
  const auto exact_path = ctx.out_dir / "hsp_exact.tsv";
  if (!fs::exists(exact_path)) {
    throw DataError("missing " + counts_path.string() + " and " + exact_path.string() +
                    " (run 'hsp simulate' first)");
  }
  ds.exact = read_joint_distribution(exact_path);
  if (!(ds.exact.grid == ctx.cfg.grid)) {
    throw DataError("retrieve: hologram grid does not match the configured grid");
  }
  ds.amp_u = read_wavefunction(ctx.out_dir / "truth_psi_u.tsv").amplitude;
  ds.amp_r = read_wavefunction(ctx.out_dir / "truth_psi_r.tsv").amplitude;
  return ds;
}

void run_retrieve(RunContext& ctx) {
  const auto ds = read_dataset(ctx, /*counts_required=*/false);
  const std::uint64_t seed = derive_seed(ctx.cfg.seed, Stream::GlobalSearch);

  RetrievalResult res;
  if (ds.from_counts) {
    res = retrieve_phase(ds.counts, ds.m_u, ds.m_r, ctx.cfg.retrieval, seed);
  } else {
    res = retrieve_phase_from_distribution(ds.exact, ds.amp_u, ds.amp_r, ctx.cfg.retrieval, seed);
  }
  const auto radius =
      fit_radius(res.phase, res.amp_u, res.grid, ctx.cfg.radius_k(),
                 ctx.cfg.retrieval.support_threshold);
  const auto recon = reconstruct_hsp(res.grid, res.amp_u, res.amp_r, res.phase,
                                     res.visibility_est);

  fs::create_directories(ctx.out_dir);
  const auto put = [&](const fs::path& name) {
    const auto p = ctx.out_dir / name;
    track(ctx, p);
    return p;
  };
  write_json(put("retrieval.json"),
             retrieval_result_to_json(res, &radius, config_echo(ctx.cfg), ctx.cfg.seed));
  write_joint_distribution(put("hsp_reconstructed.tsv"), recon, "reconstructed_hsp");
  write_pgm_with_scale(put("hsp_reconstructed.pgm"), recon.grid, recon.p);
  track(ctx, ctx.out_dir / "hsp_reconstructed.pgm.json");

  {
    const auto p = put("wavefunction_retrieved.tsv");
    std::ofstream os(p, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + p.string());
    os << std::setprecision(17);
    os << "# hsp-retrieved-wavefunction v1\n";
    os << "# x_min " << res.grid.x_min() << "\n# x_max " << res.grid.x_max() << "\n# n_bins "
       << res.grid.n_bins() << "\n";
    os << "# columns x amplitude_u amplitude_r phase supported\n";
    for (int i = 0; i < res.grid.n_bins(); ++i) {
      const auto ii = static_cast<std::size_t>(i);
      os << res.grid.center(i) << "\t" << res.amp_u[ii] << "\t" << res.amp_r[ii] << "\t"
         << res.phase[ii] << "\t" << (res.support_mask[ii] ? 1 : 0) << "\n";
    }
  }
  write_manifest(ctx, "retrieve");
}

void run_uncertainty(RunContext& ctx) {
  const auto ds = read_dataset(ctx, /*counts_required=*/true);
  const auto summary =
      mc_run(ds.counts, ds.m_u, ds.m_r, ctx.cfg.mc_config(), ctx.cfg.mc_trials, ctx.cfg.seed);

  fs::create_directories(ctx.out_dir);
  const auto put = [&](const fs::path& name) {
    const auto p = ctx.out_dir / name;
    track(ctx, p);
    return p;
  };
  write_json(put("mc_summary.json"),
             mc_summary_to_json(summary, config_echo(ctx.cfg), ctx.cfg.seed));
  JointDistribution mean_hsp{summary.grid, summary.mean_reconstructed_hsp, std::nullopt};
  write_joint_distribution(put("hsp_mean.tsv"), mean_hsp, "mean_reconstructed_hsp");
  write_pgm_with_scale(put("hsp_mean.pgm"), summary.grid, summary.mean_reconstructed_hsp);
  track(ctx, ctx.out_dir / "hsp_mean.pgm.json");

  {
    const auto p = put("wavefunction_mc.tsv");
    std::ofstream os(p, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + p.string());
    os << std::setprecision(17);
    os << "# hsp-mc-wavefunction v1\n";
    os << "# x_min " << summary.grid.x_min() << "\n# x_max " << summary.grid.x_max()
       << "\n# n_bins " << summary.grid.n_bins() << "\n";
    os << "# columns x amplitude_u phase_mean phase_std supported\n";
    for (int i = 0; i < summary.grid.n_bins(); ++i) {
      const auto ii = static_cast<std::size_t>(i);
      os << summary.grid.center(i) << "\t" << summary.amp_u_base[ii] << "\t"
         << summary.phase_mean[ii] << "\t" << summary.phase_std[ii] << "\t"
         << (summary.support_mask[ii] ? 1 : 0) << "\n";
    }
  }

  if (summary.trial_phases) {
    const auto p = put("phases_trials.tsv");
    std::ofstream os(p, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + p.string());
    os << std::setprecision(17);
    os << "# hsp-trial-phases v1\n";
    os << "# rows successful trials, columns bins\n";
    for (const auto& row : *summary.trial_phases) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << "\t";
        os << row[i];
      }
      os << "\n";
    }
  }
  write_manifest(ctx, "uncertainty");
}

int guarded(const CliOptions& opts, const std::string& command,
            void (*body)(RunContext&)) {
  try {
    RunContext ctx = make_context(opts);
    if (opts.dry_run) {
      std::cout << config_echo(ctx.cfg).dump(2) << "\n";
      return kExitOk;
    }
    body(ctx);
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "hsp " << command << ": config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const DataError& e) {
    std::cerr << "hsp " << command << ": data error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const NumericalError& e) {
    std::cerr << "hsp " << command << ": numerical error: " << e.what() << "\n";
    return kExitNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "hsp " << command << ": " << e.what() << "\n";
    return kExitGenericError;
  }
}

void run_pipeline(RunContext& ctx) {
  run_simulate(ctx);
  ctx.artifacts.clear();
  run_retrieve(ctx);
  ctx.artifacts.clear();
  run_uncertainty(ctx);
  ctx.artifacts.clear();

  // The pipeline manifest covers every artifact the three stages wrote.
  for (const auto& entry : fs::directory_iterator(ctx.out_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name.rfind("manifest-", 0) == 0) continue;
    ctx.artifacts.push_back(entry.path());
  }
  std::sort(ctx.artifacts.begin(), ctx.artifacts.end());
  write_manifest(ctx, "pipeline");
}

}  // namespace

int cmd_simulate(const CliOptions& opts) { return guarded(opts, "simulate", &run_simulate); }
int cmd_retrieve(const CliOptions& opts) { return guarded(opts, "retrieve", &run_retrieve); }
int cmd_uncertainty(const CliOptions& opts) {
  return guarded(opts, "uncertainty", &run_uncertainty);
}
int cmd_pipeline(const CliOptions& opts) { return guarded(opts, "pipeline", &run_pipeline); }

}  // namespace hsp
