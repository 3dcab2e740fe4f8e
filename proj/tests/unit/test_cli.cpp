#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "support/schema.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Small, fast configuration for CLI round trips; the acceptance suite
// exercises the full-size defaults. The radius is chosen so the fringes
// stay resolvable on the coarse 32-bin grid.
json small_config() {
  return json{
      {"version", 1},
      {"grid", {{"x_min", -1.0}, {"x_max", 1.0}, {"n_bins", 32}}},
      {"mode", {{"waist", 0.3}, {"center", 0.0}}},
      {"phase", {{"type", "quadratic"}, {"k", 7853.981633974483}, {"radius", 150.0}}},
      {"visibility", 0.91},
      {"counts", {{"n_pairs", 2200}, {"n_marginal_events", 10000}}},
      {"retrieval",
       {{"n_global_starts", 8},
        // 32 bins admit curvature aliases within the wide default box.
        {"coeff_bounds", {{-3.2, 3.2}, {-150.0, 150.0}, {-0.8, 0.8}, {-0.4, 0.4}}}}},
      {"mc", {{"n_trials", 6}, {"warm_start", true}}},
      {"seed", 11}};
}

struct CliRun {
  int exit_code = -1;
  std::string stdout_text;
};

const char* cli_path() {
  const char* p = std::getenv("HSP_CLI");
  REQUIRE_MESSAGE(p != nullptr, "HSP_CLI must point at the built binary");
  return p;
}

CliRun run_cli(const std::string& args, const fs::path& work) {
  const auto out_file = work / "stdout.txt";
  const std::string cmd = std::string(cli_path()) + " " + args + " > " + out_file.string() +
                          " 2> " + (work / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  CliRun run;
  run.exit_code = WEXITSTATUS(status);
  std::ifstream is(out_file);
  run.stdout_text.assign(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  return run;
}

fs::path fresh_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("hsp-cli-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

json load_json(const fs::path& p) {
  std::ifstream is(p);
  REQUIRE_MESSAGE(is.good(), "missing " << p.string());
  json j;
  is >> j;
  return j;
}

json load_schema(const std::string& name) {
  const char* src = std::getenv("HSP_SOURCE_DIR");
  REQUIRE(src != nullptr);
  return load_json(fs::path(src) / "schemas" / name);
}

}  // namespace

TEST_CASE("cli simulate writes the dataset and identical reruns hash identically") {
  const auto dir = fresh_dir("simulate");
  const auto cfg = write_config(dir, small_config());

  const auto out1 = dir / "run1";
  const auto r1 = run_cli("simulate --config " + cfg.string() + " --out " + out1.string(), dir);
  CHECK(r1.exit_code == 0);
  for (const char* name :
       {"truth_psi_u.tsv", "truth_psi_r.tsv", "hsp_exact.tsv", "hsp_exact.pgm",
        "coincidences.tsv", "marginal_u.tsv", "marginal_r.tsv", "manifest-simulate.json"}) {
    CHECK_MESSAGE(fs::exists(out1 / name), name);
  }

  const auto out2 = dir / "run2";
  const auto r2 = run_cli("simulate --config " + cfg.string() + " --out " + out2.string(), dir);
  CHECK(r2.exit_code == 0);
  const auto m1 = load_json(out1 / "manifest-simulate.json");
  const auto m2 = load_json(out2 / "manifest-simulate.json");
  REQUIRE(m1["artifacts"].size() == m2["artifacts"].size());
  for (std::size_t i = 0; i < m1["artifacts"].size(); ++i) {
    CHECK(m1["artifacts"][i]["fnv1a64"] == m2["artifacts"][i]["fnv1a64"]);
    CHECK(m1["artifacts"][i]["bytes"] == m2["artifacts"][i]["bytes"]);
  }

  // A different seed must change the sampled data.
  const auto out3 = dir / "run3";
  const auto r3 = run_cli(
      "simulate --config " + cfg.string() + " --out " + out3.string() + " --seed 99", dir);
  CHECK(r3.exit_code == 0);
  const auto m3 = load_json(out3 / "manifest-simulate.json");
  bool any_differs = false;
  for (std::size_t i = 0; i < m1["artifacts"].size(); ++i) {
    if (m1["artifacts"][i]["path"] == "coincidences.tsv") {
      any_differs = m1["artifacts"][i]["fnv1a64"] != m3["artifacts"][i]["fnv1a64"];
    }
  }
  CHECK(any_differs);
}

TEST_CASE("cli retrieve on sampled counts emits a schema-valid result") {
  const auto dir = fresh_dir("retrieve");
  const auto cfg = write_config(dir, small_config());
  const auto out = dir / "out";
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out.string(), dir)
              .exit_code == 0);
  const auto r = run_cli("retrieve --config " + cfg.string() + " --out " + out.string(), dir);
  CHECK(r.exit_code == 0);

  const auto result = load_json(out / "retrieval.json");
  const auto errors = test_schema::validate(result, load_schema("retrieval_result.schema.json"));
  for (const auto& e : errors) FAIL_CHECK(e);
  CHECK(errors.empty());

  const double radius = result["radius_fit"]["radius"].get<double>();
  CHECK(std::abs(std::abs(radius) - 150.0) / 150.0 < 0.2);
  CHECK(fs::exists(out / "hsp_reconstructed.pgm"));
  CHECK(fs::exists(out / "wavefunction_retrieved.tsv"));
}

TEST_CASE("cli retrieve falls back to the exact hologram when counts are absent") {
  const auto dir = fresh_dir("retrieve-exact");
  const auto cfg = write_config(dir, small_config());
  const auto out = dir / "out";
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out.string(), dir)
              .exit_code == 0);
  fs::remove(out / "coincidences.tsv");
  const auto r = run_cli("retrieve --config " + cfg.string() + " --out " + out.string(), dir);
  CHECK(r.exit_code == 0);
  const auto result = load_json(out / "retrieval.json");
  CHECK(result["objective"].get<double>() < 1e-8);
}

TEST_CASE("cli uncertainty emits a schema-valid summary") {
  const auto dir = fresh_dir("uncertainty");
  const auto cfg = write_config(dir, small_config());
  const auto out = dir / "out";
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out.string(), dir)
              .exit_code == 0);
  const auto r = run_cli("uncertainty --config " + cfg.string() + " --out " + out.string(), dir);
  CHECK(r.exit_code == 0);

  const auto summary = load_json(out / "mc_summary.json");
  const auto errors = test_schema::validate(summary, load_schema("mc_summary.schema.json"));
  for (const auto& e : errors) FAIL_CHECK(e);
  CHECK(errors.empty());
  CHECK(summary["n_trials"].get<int>() == 6);
  CHECK(fs::exists(out / "hsp_mean.pgm"));
  CHECK(fs::exists(out / "wavefunction_mc.tsv"));
}

TEST_CASE("cli uncertainty reruns are byte-identical") {
  const auto dir = fresh_dir("uncertainty-determinism");
  const auto cfg = write_config(dir, small_config());
  const auto out1 = dir / "a";
  const auto out2 = dir / "b";
  for (const auto& out : {out1, out2}) {
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out.string(), dir)
                .exit_code == 0);
    REQUIRE(run_cli("uncertainty --config " + cfg.string() + " --out " + out.string(), dir)
                .exit_code == 0);
  }
  const auto slurp = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>{});
  };
  CHECK(slurp(out1 / "mc_summary.json") == slurp(out2 / "mc_summary.json"));
  CHECK(slurp(out1 / "hsp_mean.tsv") == slurp(out2 / "hsp_mean.tsv"));
}

TEST_CASE("cli pipeline runs end to end") {
  const auto dir = fresh_dir("pipeline");
  const auto cfg = write_config(dir, small_config());
  const auto out = dir / "out";
  const auto r = run_cli("pipeline --config " + cfg.string() + " --out " + out.string(), dir);
  CHECK(r.exit_code == 0);
  for (const char* name : {"coincidences.tsv", "retrieval.json", "mc_summary.json",
                           "manifest-pipeline.json"}) {
    CHECK_MESSAGE(fs::exists(out / name), name);
  }
}

TEST_CASE("cli rejects an invalid config before writing anything") {
  const auto dir = fresh_dir("bad-config");
  auto bad = small_config();
  bad["visibility"] = 1.2;
  const auto cfg = write_config(dir, bad);
  const auto out = dir / "out";
  const auto r = run_cli("simulate --config " + cfg.string() + " --out " + out.string(), dir);
  CHECK(r.exit_code == 2);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("cli reports a data error on truncated counts") {
  const auto dir = fresh_dir("truncated");
  const auto cfg = write_config(dir, small_config());
  const auto out = dir / "out";
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out.string(), dir)
              .exit_code == 0);
  // Truncate the coincidence file mid-row.
  std::ifstream is(out / "coincidences.tsv", std::ios::binary);
  std::string text(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>{});
  is.close();
  std::ofstream(out / "coincidences.tsv", std::ios::binary) << text.substr(0, text.size() / 3);
  const auto r = run_cli("retrieve --config " + cfg.string() + " --out " + out.string(), dir);
  CHECK(r.exit_code == 3);
  CHECK_FALSE(fs::exists(out / "retrieval.json"));
}

TEST_CASE("cli dry run validates and prints the resolved config") {
  const auto dir = fresh_dir("dry-run");
  const auto cfg = write_config(dir, small_config());
  const auto out = dir / "out";
  const auto r = run_cli(
      "pipeline --config " + cfg.string() + " --out " + out.string() + " --dry-run", dir);
  CHECK(r.exit_code == 0);
  CHECK_FALSE(fs::exists(out));
  const auto echoed = json::parse(r.stdout_text);
  CHECK(echoed["grid"]["n_bins"].get<int>() == 32);
  CHECK(echoed["seed"].get<int>() == 11);
}

TEST_CASE("cli reports a numerical error when the Monte-Carlo run collapses") {
  const auto dir = fresh_dir("numfail");
  auto j = small_config();
  // Two detected pairs: most Poisson resamples lose all coincidences and
  // the trial fraction that fails exceeds the abort threshold.
  j["counts"]["n_pairs"] = 2;
  j["mc"]["n_trials"] = 10;
  const auto cfg = write_config(dir, j);
  const auto out = dir / "out";
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out.string(), dir)
              .exit_code == 0);
  const auto r = run_cli("uncertainty --config " + cfg.string() + " --out " + out.string(), dir);
  CHECK(r.exit_code == 4);
}

TEST_CASE("cli simulate with the bundled paper config renders the cross pattern") {
  const char* src = std::getenv("HSP_SOURCE_DIR");
  REQUIRE(src != nullptr);
  const auto dir = fresh_dir("paper-config");
  const auto out = dir / "out";
  const auto r = run_cli("simulate --config " + (fs::path(src) / "configs" / "paper.json").string() +
                             " --out " + out.string(),
                         dir);
  CHECK(r.exit_code == 0);

  // The exact hologram of a quadratic-phase photon is dark along both
  // the diagonal and the anti-diagonal (phi is even), the cross shape.
  std::ifstream is(out / "hsp_exact.tsv");
  REQUIRE(is.good());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    rows.emplace_back();
    double v;
    while (ls >> v) rows.back().push_back(v);
  }
  REQUIRE(rows.size() == 64);
  double diag = 0.0, peak = 0.0;
  for (int i = 0; i < 64; ++i) {
    diag += rows[i][i] + rows[i][63 - i];
    for (int jcol = 0; jcol < 64; ++jcol) peak = std::max(peak, rows[i][jcol]);
  }
  CHECK(diag / 128.0 < 0.05 * peak);
  CHECK(fs::exists(out / "hsp_exact.pgm"));
}

TEST_CASE("cli honors HSP_OUT_DIR when no directory is given") {
  const auto dir = fresh_dir("env-out");
  auto j = small_config();
  j.erase("mc");
  j["counts"]["n_pairs"] = 50;
  j["counts"]["n_marginal_events"] = 200;
  const auto cfg = write_config(dir, j);
  const auto envout = dir / "env-dir";
  const std::string cmd = "HSP_OUT_DIR=" + envout.string() + " " + cli_path() +
                          " simulate --config " + cfg.string() + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(envout / "coincidences.tsv"));
}
