#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "hsp/config.hpp"
#include "hsp/errors.hpp"
#include "hsp/forward.hpp"
#include "hsp/io.hpp"
#include "hsp/rng.hpp"
#include "hsp/sampler.hpp"
#include "support/oracles.hpp"

using namespace hsp;
namespace fs = std::filesystem;

namespace {

constexpr double kPaperWaveNumber = 2.0 * std::numbers::pi / 8.0e-4;

fs::path temp_dir() {
  static int counter = 0;
  const auto dir = fs::temp_directory_path() / ("hsp-io-test-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("wavefunction file round trip is exact") {
  const auto dir = temp_dir();
  const auto wf = apply_quadratic_phase(gaussian_mode(make_grid(-1.0, 1.0, 64), 0.3, 0.0),
                                        {kPaperWaveNumber, 34.0});
  write_wavefunction(dir / "wf.tsv", wf);
  const auto back = read_wavefunction(dir / "wf.tsv");
  CHECK(back.grid == wf.grid);
  for (std::size_t i = 0; i < wf.amplitude.size(); ++i) {
    CHECK(back.amplitude[i] == wf.amplitude[i]);
    CHECK(back.phase[i] == wf.phase[i]);
  }
}

TEST_CASE("joint distribution round trip preserves visibility") {
  const auto dir = temp_dir();
  const auto g = make_grid(-1.0, 1.0, 16);
  const auto r = gaussian_mode(g, 0.3, 0.0);
  const auto u = apply_quadratic_phase(r, {kPaperWaveNumber, 100.0});
  const auto jd = hsp_distribution(u, r, 0.91);
  write_joint_distribution(dir / "jd.tsv", jd);
  const auto back = read_joint_distribution(dir / "jd.tsv");
  CHECK(back.grid == jd.grid);
  REQUIRE(back.visibility.has_value());
  CHECK(*back.visibility == 0.91);
  for (std::size_t i = 0; i < jd.p.size(); ++i) CHECK(back.p[i] == jd.p[i]);
}

TEST_CASE("count file round trips and corruption detection") {
  const auto dir = temp_dir();
  const auto g = make_grid(-1.0, 1.0, 16);
  const auto r = gaussian_mode(g, 0.3, 0.0);
  const auto u = apply_quadratic_phase(r, {kPaperWaveNumber, 100.0});
  const auto sim = simulate_experiment(u, r, 0.91, 2200, 5000, {}, 11);

  write_coincidence_counts(dir / "cc.tsv", sim.coincidences);
  const auto cc = read_coincidence_counts(dir / "cc.tsv");
  CHECK(cc.counts == sim.coincidences.counts);
  CHECK(cc.n_pairs == sim.coincidences.n_pairs);
  CHECK(cc.seed == sim.coincidences.seed);

  write_marginal_counts(dir / "m.tsv", sim.marginal_u);
  const auto m = read_marginal_counts(dir / "m.tsv");
  CHECK(m.counts == sim.marginal_u.counts);
  CHECK(m.mode == MeasurementMode::AmplitudeUnknown);

  // Truncated data must be rejected cleanly.
  auto text = slurp(dir / "cc.tsv");
  std::ofstream(dir / "trunc.tsv", std::ios::binary) << text.substr(0, text.size() / 2);
  CHECK_THROWS_AS(read_coincidence_counts(dir / "trunc.tsv"), DataError);

  std::ofstream(dir / "bad.tsv", std::ios::binary) << "# not-a-magic v1\n1 2\n";
  CHECK_THROWS_AS(read_coincidence_counts(dir / "bad.tsv"), DataError);
  CHECK_THROWS_AS(read_wavefunction(dir / "missing.tsv"), DataError);

  // Header totals must match the data.
  auto with_bad_total = text;
  const auto pos = with_bad_total.find("# n_pairs 2200");
  REQUIRE(pos != std::string::npos);
  with_bad_total.replace(pos, 14, "# n_pairs 2201");
  std::ofstream(dir / "bad_total.tsv", std::ios::binary) << with_bad_total;
  CHECK_THROWS_AS(read_coincidence_counts(dir / "bad_total.tsv"), DataError);

  // Marginal files never carry the hologram mode.
  std::string mtext = slurp(dir / "m.tsv");
  const auto mpos = mtext.find("# mode amplitude_u");
  REQUIRE(mpos != std::string::npos);
  mtext.replace(mpos, 18, "# mode hologram  ");
  std::ofstream(dir / "bad_mode.tsv", std::ios::binary) << mtext;
  CHECK_THROWS_AS(read_marginal_counts(dir / "bad_mode.tsv"), DataError);
}

TEST_CASE("phase profile file round trip and grid check") {
  const auto dir = temp_dir();
  const auto g = make_grid(-1.0, 1.0, 32);
  std::vector<double> phase(32);
  for (int i = 0; i < 32; ++i) phase[i] = 0.3 * g.center(i);
  write_phase_profile(dir / "profile.tsv", g, phase);
  const auto back = read_phase_profile(dir / "profile.tsv", g);
  for (std::size_t i = 0; i < 32; ++i) CHECK(back[i] == phase[i]);
  CHECK_THROWS_AS(read_phase_profile(dir / "profile.tsv", make_grid(-1.0, 1.0, 16)), DataError);
}

TEST_CASE("pgm render is deterministic with a correct sidecar") {
  const auto dir = temp_dir();
  const auto g = make_grid(-1.0, 1.0, 16);
  const auto r = gaussian_mode(g, 0.3, 0.0);
  const auto u = apply_quadratic_phase(r, {kPaperWaveNumber, 100.0});
  const auto jd = hsp_distribution(u, r, 0.91);
  write_pgm_with_scale(dir / "a.pgm", g, jd.p);
  write_pgm_with_scale(dir / "b.pgm", g, jd.p);
  const auto a = slurp(dir / "a.pgm");
  CHECK(a == slurp(dir / "b.pgm"));
  CHECK(a.rfind("P5\n16 16\n255\n", 0) == 0);
  CHECK(a.size() == 13 + 256);
  // The peak bin must map to 255.
  unsigned char peak = 0;
  for (std::size_t i = 13; i < a.size(); ++i) {
    peak = std::max(peak, static_cast<unsigned char>(a[i]));
  }
  CHECK(peak == 255);

  std::ifstream side(dir / "a.pgm.json");
  nlohmann::json sj;
  side >> sj;
  double maxval = 0.0;
  for (double v : jd.p) maxval = std::max(maxval, v);
  CHECK(sj["value_max"].get<double>() == doctest::Approx(maxval).epsilon(1e-15));
  CHECK(sj["width"].get<int>() == 16);
}

TEST_CASE("fnv1a64 hashing") {
  const auto dir = temp_dir();
  std::ofstream(dir / "empty.bin", std::ios::binary);
  CHECK(fnv1a64_file(dir / "empty.bin") == 0xCBF29CE484222325ULL);  // offset basis
  std::ofstream(dir / "a.bin", std::ios::binary) << "content-a";
  std::ofstream(dir / "b.bin", std::ios::binary) << "content-b";
  CHECK(fnv1a64_file(dir / "a.bin") != fnv1a64_file(dir / "b.bin"));
  CHECK(fnv1a64_file(dir / "a.bin") == fnv1a64_file(dir / "a.bin"));
  CHECK(hex64(0xCBF29CE484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("bundled paper config loads with the documented parameters") {
  const char* src = std::getenv("HSP_SOURCE_DIR");
  REQUIRE(src != nullptr);
  const auto cfg = load_config(fs::path(src) / "configs" / "paper.json");
  CHECK(cfg.grid.n_bins() == 64);
  CHECK(cfg.waist == 0.3);
  CHECK(cfg.phase.type == PhaseSpec::Type::Quadratic);
  CHECK(cfg.phase.radius == 34.0);
  CHECK(cfg.phase.k == doctest::Approx(kPaperWaveNumber).epsilon(1e-12));
  CHECK(cfg.visibility == 0.91);
  CHECK(cfg.n_pairs == 2200);
  CHECK(cfg.mc_trials == 500);
  CHECK(cfg.radius_k() == doctest::Approx(kPaperWaveNumber).epsilon(1e-12));
}

TEST_CASE("config parsing is strict") {
  const auto base = nlohmann::json{
      {"version", 1},
      {"grid", {{"x_min", -1.0}, {"x_max", 1.0}, {"n_bins", 32}}},
      {"mode", {{"waist", 0.3}, {"center", 0.0}}},
      {"phase", {{"type", "quadratic"}, {"k", 7853.98}, {"radius", 34.0}}},
      {"visibility", 0.91},
      {"counts", {{"n_pairs", 2200}, {"n_marginal_events", 10000}}},
      {"seed", 5}};
  CHECK_NOTHROW(config_from_json(base, "test"));

  auto bad = base;
  bad["typo_field"] = 1;
  CHECK_THROWS_AS(config_from_json(bad, "test"), ConfigError);

  bad = base;
  bad["grid"]["typo"] = 1;
  CHECK_THROWS_AS(config_from_json(bad, "test"), ConfigError);

  bad = base;
  bad["visibility"] = 1.2;
  CHECK_THROWS_AS(config_from_json(bad, "test"), ConfigError);

  bad = base;
  bad["grid"]["n_bins"] = 1;
  CHECK_THROWS_AS(config_from_json(bad, "test"), ConfigError);

  bad = base;
  bad["version"] = 2;
  CHECK_THROWS_AS(config_from_json(bad, "test"), ConfigError);

  bad = base;
  bad["mode"]["waist"] = -0.1;
  CHECK_THROWS_AS(config_from_json(bad, "test"), ConfigError);

  bad = base;
  bad["phase"] = {{"type", "warp"}};
  CHECK_THROWS_AS(config_from_json(bad, "test"), ConfigError);

  bad = base;
  bad["mc"] = {{"n_trials", 1}};
  CHECK_THROWS_AS(config_from_json(bad, "test"), ConfigError);

  bad = base;
  bad["retrieval"] = {{"poly_degree", 1}};
  CHECK_THROWS_AS(config_from_json(bad, "test"), ConfigError);

  bad = base;
  bad["seed"] = -3;
  CHECK_THROWS_AS(config_from_json(bad, "test"), ConfigError);
}

TEST_CASE("config truth_phase covers every spec type") {
  const auto dir = temp_dir();
  auto j = nlohmann::json{
      {"version", 1},
      {"grid", {{"x_min", -1.0}, {"x_max", 1.0}, {"n_bins", 16}}},
      {"mode", {{"waist", 0.3}, {"center", 0.0}}},
      {"phase", {{"type", "flat"}}},
      {"visibility", 0.91},
      {"counts", {{"n_pairs", 100}, {"n_marginal_events", 100}}},
      {"seed", 5}};
  auto cfg = config_from_json(j, "test");
  for (double p : cfg.truth_phase(dir)) CHECK(p == 0.0);

  j["phase"] = {{"type", "lens"}, {"k", 7853.98}, {"focal_length", 75.0}};
  cfg = config_from_json(j, "test");
  const auto lens_phase = cfg.truth_phase(dir);
  const double x0 = cfg.grid.center(0);
  CHECK(lens_phase[0] ==
        doctest::Approx(7853.98 * x0 * x0 / (2.0 * -37.5)).epsilon(1e-12));

  j["phase"] = {{"type", "polynomial"}, {"coeffs", {0.5, 2.0}}};
  cfg = config_from_json(j, "test");
  const auto poly_phase = cfg.truth_phase(dir);
  CHECK(poly_phase[3] ==
        doctest::Approx(0.5 * cfg.grid.center(3) + 2.0 * cfg.grid.center(3) * cfg.grid.center(3))
            .epsilon(1e-12));

  std::vector<double> table(16);
  for (int i = 0; i < 16; ++i) table[i] = 0.1 * i;
  write_phase_profile(dir / "prof.tsv", cfg.grid, table);
  j["phase"] = {{"type", "table"}, {"path", "prof.tsv"}};
  cfg = config_from_json(j, "test");
  const auto table_phase = cfg.truth_phase(dir);
  for (int i = 0; i < 16; ++i) CHECK(table_phase[i] == table[i]);
}
