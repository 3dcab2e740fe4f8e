#include "hsp/uncertainty.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <thread>

#include "hsp/errors.hpp"
#include "hsp/rng.hpp"

namespace hsp {

namespace {

std::vector<std::int64_t> resample_bins(const std::vector<std::int64_t>& bins,
                                        std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::int64_t> out(bins.size());
  for (std::size_t i = 0; i < bins.size(); ++i) {
    out[i] = bins[i] > 0 ? rng.poisson(static_cast<double>(bins[i])) : 0;
  }
  return out;
}

std::int64_t sum_of(const std::vector<std::int64_t>& v) {
  std::int64_t s = 0;
  for (auto c : v) s += c;
  return s;
}

struct TrialOutcome {
  bool ok = false;
  std::string error;
  std::vector<double> phase;  // gauged, full length
  double visibility = 0.0;
  double radius = 0.0;
  std::vector<double> recon;  // n x n
};

}  // namespace

CoincidenceCounts poisson_resample(const CoincidenceCounts& counts, std::uint64_t seed) {
  CoincidenceCounts out = counts;
  out.counts = resample_bins(counts.counts, seed);
  out.n_pairs = sum_of(out.counts);
  out.seed = seed;
  return out;
}

MarginalCounts poisson_resample(const MarginalCounts& counts, std::uint64_t seed) {
  MarginalCounts out = counts;
  out.counts = resample_bins(counts.counts, seed);
  out.n_events = sum_of(out.counts);
  out.seed = seed;
  return out;
}

McSummary mc_run(const CoincidenceCounts& counts, const MarginalCounts& m_u,
                 const MarginalCounts& m_r, const McConfig& cfg, int n_trials,
                 std::uint64_t master_seed) {
  if (n_trials < 2) throw ConfigError("mc_run: n_trials must be >= 2");
  if (!(counts.grid == m_u.grid) || !(counts.grid == m_r.grid)) {
    throw DataError("mc_run: count datasets live on different grids");
  }

  const Grid grid = counts.grid;
  const auto n = static_cast<std::size_t>(grid.n_bins());
  const double radius_k = cfg.radius_k > 0.0 ? cfg.radius_k : default_wave_number();

  // Base reconstruction: fixes the support mask, the warm-start phase and
  // the baseline visibility shared by every trial.
  const std::uint64_t base_seed = derive_seed(master_seed, Stream::GlobalSearch);
  const RetrievalResult base = retrieve_phase(counts, m_u, m_r, cfg.retrieval, base_seed);

  RetrievalConfig trial_cfg = cfg.retrieval;
  if (cfg.warm_start) trial_cfg.co_optimize_visibility = true;

  std::vector<std::uint64_t> trial_seeds(static_cast<std::size_t>(n_trials));
  for (int t = 0; t < n_trials; ++t) {
    trial_seeds[static_cast<std::size_t>(t)] =
        derive_seed(master_seed, static_cast<std::uint64_t>(Stream::McTrial) +
                                     static_cast<std::uint64_t>(t));
  }

  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(n_trials));
  std::atomic<int> next{0};

  const auto run_trial = [&](int t) {
    TrialOutcome& out = outcomes[static_cast<std::size_t>(t)];
    const std::uint64_t ts = trial_seeds[static_cast<std::size_t>(t)];
    try {
      const auto cc = poisson_resample(counts, derive_seed(ts, Stream::Coincidences));
      const auto mu = poisson_resample(m_u, derive_seed(ts, Stream::MarginalUnknown));
      const auto mr = poisson_resample(m_r, derive_seed(ts, Stream::MarginalReference));

      RetrievalResult res;
      if (cfg.warm_start) {
        const auto jd = empirical_distribution(cc);
        const auto au = amplitude_estimate(mu);
        const auto ar = amplitude_estimate(mr);
        std::vector<double> init = base.phase;
        for (auto& v : init) {
          if (!std::isfinite(v)) v = 0.0;
        }
        res = local_refine(jd, au, ar, init, base.visibility_est, trial_cfg,
                           &base.support_mask);
        auto [gauged, record] = gauge_fix(res.phase, res.amp_u, grid,
                                          trial_cfg.support_threshold);
        res.phase = std::move(gauged);
        res.gauge = record;
      } else {
        res = retrieve_phase(cc, mu, mr, trial_cfg, ts);
      }

      const auto rad = fit_radius(res.phase, res.amp_u, grid, radius_k,
                                  trial_cfg.support_threshold);
      const auto recon = reconstruct_hsp(grid, res.amp_u, res.amp_r, res.phase,
                                         res.visibility_est);
      out.phase = std::move(res.phase);
      out.visibility = res.visibility_est;
      out.radius = rad.radius;
      out.recon = recon.p;
      out.ok = true;
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
  };

  int n_threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, n_trials));
  if (n_threads == 1) {
    for (int t = 0; t < n_trials; ++t) run_trial(t);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const int t = next.fetch_add(1);
          if (t >= n_trials) return;
          run_trial(t);
        }
      });
    }
    for (auto& w : workers) w.join();
  }

  McSummary summary;
  summary.grid = grid;
  summary.n_trials = n_trials;
  summary.support_mask = base.support_mask;
  summary.amp_u_base = base.amp_u;
  summary.amp_r_base = base.amp_r;
  summary.seeds = trial_seeds;
  if (cfg.keep_trial_phases) summary.trial_phases.emplace();

  // Ordered reduction over trial index.
  std::vector<double> sum(n, 0.0), sum_sq(n, 0.0);
  std::vector<int> count(n, 0);
  std::vector<double> recon_sum(n * n, 0.0);
  double vis_sum = 0.0, vis_sq = 0.0, r_sum = 0.0, r_sq = 0.0;
  int ok_count = 0;
  std::string first_error;
  for (int t = 0; t < n_trials; ++t) {
    const auto& out = outcomes[static_cast<std::size_t>(t)];
    if (!out.ok) {
      ++summary.n_failures;
      if (first_error.empty()) first_error = out.error;
      continue;
    }
    ++ok_count;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = out.phase[i];
      if (!std::isfinite(v)) continue;
      sum[i] += v;
      sum_sq[i] += v * v;
      ++count[i];
    }
    for (std::size_t i = 0; i < n * n; ++i) recon_sum[i] += out.recon[i];
    vis_sum += out.visibility;
    vis_sq += out.visibility * out.visibility;
    r_sum += out.radius;
    r_sq += out.radius * out.radius;
    if (summary.trial_phases) summary.trial_phases->push_back(out.phase);
  }

  if (static_cast<double>(summary.n_failures) >
      cfg.max_failure_fraction * static_cast<double>(n_trials)) {
    std::ostringstream os;
    os << "mc_run: " << summary.n_failures << " of " << n_trials
       << " trials failed (first error: " << first_error << ")";
    throw NumericalError(os.str());
  }
  if (ok_count < 2) throw NumericalError("mc_run: fewer than 2 successful trials");

  const auto nan = std::numeric_limits<double>::quiet_NaN();
  summary.phase_mean.assign(n, nan);
  summary.phase_std.assign(n, nan);
  for (std::size_t i = 0; i < n; ++i) {
    if (!summary.support_mask[i] || count[i] < 2) continue;
    const double m = sum[i] / count[i];
    const double var = std::max(0.0, (sum_sq[i] - count[i] * m * m) / (count[i] - 1));
    summary.phase_mean[i] = m;
    summary.phase_std[i] = std::sqrt(var);
  }

  const double nv = static_cast<double>(ok_count);
  summary.visibility_mean = vis_sum / nv;
  summary.visibility_std =
      std::sqrt(std::max(0.0, (vis_sq - nv * summary.visibility_mean * summary.visibility_mean) /
                                  (nv - 1.0)));
  summary.r_mean = r_sum / nv;
  summary.r_std =
      std::sqrt(std::max(0.0, (r_sq - nv * summary.r_mean * summary.r_mean) / (nv - 1.0)));

  summary.mean_reconstructed_hsp.resize(n * n);
  for (std::size_t i = 0; i < n * n; ++i) summary.mean_reconstructed_hsp[i] = recon_sum[i] / nv;

  return summary;
}

}  // namespace hsp
