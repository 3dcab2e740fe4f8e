#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hsp/forward.hpp"
#include "hsp/retrieval.hpp"
#include "hsp/sampler.hpp"
#include "hsp/uncertainty.hpp"
#include "hsp/wavefunction.hpp"

#include <json.hpp>

namespace hsp {

// All text formats are tab-separated tables with '#'-prefixed "key value"
// metadata lines, floats printed with 17 significant digits so that a
// write/read round trip is exact. Matrix files store n_bins rows of
// n_bins values.

void write_wavefunction(const std::filesystem::path& path, const Wavefunction& wf);
Wavefunction read_wavefunction(const std::filesystem::path& path);

void write_joint_distribution(const std::filesystem::path& path, const JointDistribution& jd,
                              const std::string& kind = "joint_distribution");
JointDistribution read_joint_distribution(const std::filesystem::path& path);

void write_coincidence_counts(const std::filesystem::path& path, const CoincidenceCounts& cc);
CoincidenceCounts read_coincidence_counts(const std::filesystem::path& path);

void write_marginal_counts(const std::filesystem::path& path, const MarginalCounts& mc);
MarginalCounts read_marginal_counts(const std::filesystem::path& path);

/// Tabulated phase profile (columns: bin center, phase). The grid in the
/// file must match the expected grid.
void write_phase_profile(const std::filesystem::path& path, const Grid& grid,
                         const std::vector<double>& phase);
std::vector<double> read_phase_profile(const std::filesystem::path& path, const Grid& expected);

/// 8-bit binary PGM ("P5") with linear scaling from [0, max]. Row 0 is
/// the top of the image and maps to the largest x index, columns follow
/// x' left to right. The applied scaling is recorded in a sidecar JSON
/// next to the image (<path>.json).
void write_pgm_with_scale(const std::filesystem::path& path, const Grid& grid,
                          const std::vector<double>& matrix);

nlohmann::json retrieval_result_to_json(const RetrievalResult& result, const RadiusFit* radius,
                                        const nlohmann::json& config_echo, std::uint64_t seed);
nlohmann::json mc_summary_to_json(const McSummary& summary, const nlohmann::json& config_echo,
                                  std::uint64_t seed);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// FNV-1a 64-bit content hash (manifest integrity checks, not crypto).
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

}  // namespace hsp
