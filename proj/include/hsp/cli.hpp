#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace hsp {

/// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitGenericError = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDataError = 3;
inline constexpr int kExitNumericalError = 4;

struct CliOptions {
  std::string config_path;
  std::optional<std::string> out_dir;     // --out override
  std::optional<std::uint64_t> seed;      // --seed override
  bool dry_run = false;
};

/// simulate: ground truth + exact hologram + sampled count files.
int cmd_simulate(const CliOptions& opts);
/// retrieve: phase reconstruction from the count files in the output dir
/// (falls back to the exact exported hologram when counts are absent).
int cmd_retrieve(const CliOptions& opts);
/// uncertainty: Monte-Carlo resampling statistics for an existing dataset.
int cmd_uncertainty(const CliOptions& opts);
/// pipeline: simulate + retrieve + uncertainty with one seed.
int cmd_pipeline(const CliOptions& opts);

}  // namespace hsp
