#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hsp/grid.hpp"
#include "hsp/retrieval.hpp"
#include "hsp/sampler.hpp"
#include "hsp/uncertainty.hpp"

#include <json.hpp>

namespace hsp {

/// How the unknown photon's local phase is prepared in a simulation.
struct PhaseSpec {
  enum class Type { Flat, Quadratic, Lens, Polynomial, Table };
  Type type = Type::Quadratic;
  double k = 0.0;            // rad/mm (quadratic, lens)
  double radius = 0.0;       // mm (quadratic)
  double focal_length = 0.0; // mm (lens)
  std::vector<double> coeffs;  // rad/mm^d, degrees 1.. (polynomial)
  std::string table_path;      // tabulated profile (table)
};

/// Everything a pipeline run needs, loaded from one JSON document with a
/// versioned schema. Unknown keys are rejected so typos in physics
/// parameters cannot pass silently. Units: lengths mm, phases rad,
/// wave numbers rad/mm.
struct PipelineConfig {
  Grid grid;
  double waist = 0.3;
  double center = 0.0;
  PhaseSpec phase;
  double visibility = 0.91;
  std::int64_t n_pairs = 2200;
  std::int64_t n_marginal_events = 10000;
  DetectorConfig detector;
  RetrievalConfig retrieval;
  int mc_trials = 500;
  bool mc_warm_start = true;
  int mc_threads = 0;
  bool mc_dump_trial_phases = false;
  std::uint64_t seed = 1;
  std::string output_dir;  // empty = resolve via --out / HSP_OUT_DIR / "hsp-out"

  /// Wave number used for radius-of-curvature reporting: the phase
  /// spec's k when it has one, 2*pi/800nm otherwise.
  double radius_k() const;

  /// Ground-truth phase profile evaluated on the grid (loads the table
  /// file for Table specs; base_dir resolves relative table paths).
  std::vector<double> truth_phase(const std::filesystem::path& base_dir) const;

  McConfig mc_config() const;
};

PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const nlohmann::json& j, const std::string& origin);

/// Resolved parameter set (the echo embedded in result files and
/// printed by --dry-run).
nlohmann::json config_echo(const PipelineConfig& cfg);

}  // namespace hsp
