#include "hsp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "hsp/errors.hpp"
#include "hsp/io.hpp"
#include "hsp/wavefunction.hpp"

namespace hsp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail(where, "unknown field '" + key + "'");
  }
}

const json* find(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
  const json* v = find(obj, key);
  if (v == nullptr) fail(where, "missing field '" + key + "'");
  if (!v->is_number()) fail(where, "field '" + key + "' must be a number");
  return v->get<double>();
}

double get_number_or(const json& obj, const std::string& key, double fallback,
                     const std::string& where) {
  const json* v = find(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_number()) fail(where, "field '" + key + "' must be a number");
  return v->get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& key, const std::string& where) {
  const json* v = find(obj, key);
  if (v == nullptr) fail(where, "missing field '" + key + "'");
  if (!v->is_number_integer()) fail(where, "field '" + key + "' must be an integer");
  return v->get<std::int64_t>();
}

std::int64_t get_integer_or(const json& obj, const std::string& key, std::int64_t fallback,
                            const std::string& where) {
  const json* v = find(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_number_integer()) fail(where, "field '" + key + "' must be an integer");
  return v->get<std::int64_t>();
}

bool get_bool_or(const json& obj, const std::string& key, bool fallback,
                 const std::string& where) {
  const json* v = find(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_boolean()) fail(where, "field '" + key + "' must be a boolean");
  return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& where) {
  const json* v = find(obj, key);
  if (v == nullptr) fail(where, "missing field '" + key + "'");
  if (!v->is_string()) fail(where, "field '" + key + "' must be a string");
  return v->get<std::string>();
}

PhaseSpec parse_phase(const json& obj) {
  const std::string where = "phase";
  if (!obj.is_object()) fail(where, "must be an object");
  const std::string type = get_string(obj, "type", where);
  PhaseSpec spec;
  if (type == "flat") {
    reject_unknown_keys(obj, {"type"}, where);
    spec.type = PhaseSpec::Type::Flat;
  } else if (type == "quadratic") {
    reject_unknown_keys(obj, {"type", "k", "radius"}, where);
    spec.type = PhaseSpec::Type::Quadratic;
    spec.k = get_number(obj, "k", where);
    spec.radius = get_number(obj, "radius", where);
    if (!(spec.k > 0.0)) fail(where, "k must be > 0");
    if (spec.radius == 0.0) fail(where, "radius must be nonzero");
  } else if (type == "lens") {
    reject_unknown_keys(obj, {"type", "k", "focal_length"}, where);
    spec.type = PhaseSpec::Type::Lens;
    spec.k = get_number(obj, "k", where);
    spec.focal_length = get_number(obj, "focal_length", where);
    if (!(spec.k > 0.0)) fail(where, "k must be > 0");
    if (spec.focal_length == 0.0) fail(where, "focal_length must be nonzero");
  } else if (type == "polynomial") {
    reject_unknown_keys(obj, {"type", "coeffs"}, where);
    spec.type = PhaseSpec::Type::Polynomial;
    const json* c = find(obj, "coeffs");
    if (c == nullptr || !c->is_array() || c->empty()) {
      fail(where, "polynomial phase needs a nonempty 'coeffs' array");
    }
    for (const auto& v : *c) {
      if (!v.is_number()) fail(where, "coeffs entries must be numbers");
      spec.coeffs.push_back(v.get<double>());
    }
  } else if (type == "table") {
    reject_unknown_keys(obj, {"type", "path"}, where);
    spec.type = PhaseSpec::Type::Table;
    spec.table_path = get_string(obj, "path", where);
  } else {
    fail(where, "unknown type '" + type + "' (flat|quadratic|lens|polynomial|table)");
  }
  return spec;
}

RetrievalConfig parse_retrieval(const json& obj) {
  const std::string where = "retrieval";
  RetrievalConfig cfg;
  if (obj.is_null()) return cfg;
  if (!obj.is_object()) fail(where, "must be an object");
  reject_unknown_keys(obj,
                      {"poly_degree", "n_global_starts", "coeff_bounds", "visibility_bounds",
                       "local_tol", "max_iters", "support_threshold", "co_optimize_visibility",
                       "auto_bounds_k", "auto_bounds_focal"},
                      where);
  cfg.poly_degree = static_cast<int>(get_integer_or(obj, "poly_degree", cfg.poly_degree, where));
  cfg.n_global_starts =
      static_cast<int>(get_integer_or(obj, "n_global_starts", cfg.n_global_starts, where));
  cfg.local_tol = get_number_or(obj, "local_tol", cfg.local_tol, where);
  cfg.max_iters = static_cast<int>(get_integer_or(obj, "max_iters", cfg.max_iters, where));
  cfg.support_threshold = get_number_or(obj, "support_threshold", cfg.support_threshold, where);
  cfg.co_optimize_visibility =
      get_bool_or(obj, "co_optimize_visibility", cfg.co_optimize_visibility, where);
  cfg.auto_bounds_k = get_number_or(obj, "auto_bounds_k", cfg.auto_bounds_k, where);
  cfg.auto_bounds_focal = get_number_or(obj, "auto_bounds_focal", cfg.auto_bounds_focal, where);

  if (const json* vb = find(obj, "visibility_bounds")) {
    if (!vb->is_array() || vb->size() != 2 || !(*vb)[0].is_number() || !(*vb)[1].is_number()) {
      fail(where, "visibility_bounds must be [lo, hi]");
    }
    cfg.visibility_bounds = {(*vb)[0].get<double>(), (*vb)[1].get<double>()};
  }
  if (const json* cb = find(obj, "coeff_bounds")) {
    if (!cb->is_array()) fail(where, "coeff_bounds must be an array of [lo, hi] pairs");
    for (const auto& pair : *cb) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
        fail(where, "coeff_bounds entries must be [lo, hi] pairs");
      }
      cfg.coeff_bounds.push_back({pair[0].get<double>(), pair[1].get<double>()});
    }
  }

  if (cfg.poly_degree < 2) fail(where, "poly_degree must be >= 2");
  if (cfg.n_global_starts < 1) fail(where, "n_global_starts must be >= 1");
  if (!(cfg.visibility_bounds[0] >= 0.0 && cfg.visibility_bounds[1] <= 1.0 &&
        cfg.visibility_bounds[0] <= cfg.visibility_bounds[1])) {
    fail(where, "visibility_bounds must satisfy 0 <= lo <= hi <= 1");
  }
  if (!cfg.coeff_bounds.empty() &&
      static_cast<int>(cfg.coeff_bounds.size()) != cfg.poly_degree) {
    fail(where, "coeff_bounds needs one [lo, hi] entry per degree 1..poly_degree");
  }
  if (!(cfg.local_tol >= 0.0)) fail(where, "local_tol must be >= 0");
  if (cfg.max_iters < 1) fail(where, "max_iters must be >= 1");
  if (!(cfg.support_threshold > 0.0 && cfg.support_threshold < 1.0)) {
    fail(where, "support_threshold must lie in (0, 1)");
  }
  return cfg;
}

}  // namespace

double PipelineConfig::radius_k() const {
  if (phase.type == PhaseSpec::Type::Quadratic || phase.type == PhaseSpec::Type::Lens) {
    return phase.k;
  }
  return default_wave_number();
}

std::vector<double> PipelineConfig::truth_phase(const std::filesystem::path& base_dir) const {
  const auto n = static_cast<std::size_t>(grid.n_bins());
  std::vector<double> out(n, 0.0);
  switch (phase.type) {
    case PhaseSpec::Type::Flat:
      break;
    case PhaseSpec::Type::Quadratic: {
      const double c = phase.k / (2.0 * phase.radius);
      for (int i = 0; i < grid.n_bins(); ++i) {
        const double x = grid.center(i);
        out[static_cast<std::size_t>(i)] = c * x * x;
      }
      break;
    }
    case PhaseSpec::Type::Lens: {
      const double c = phase.k / (2.0 * (-phase.focal_length / 2.0));
      for (int i = 0; i < grid.n_bins(); ++i) {
        const double x = grid.center(i);
        out[static_cast<std::size_t>(i)] = c * x * x;
      }
      break;
    }
    case PhaseSpec::Type::Polynomial: {
      for (int i = 0; i < grid.n_bins(); ++i) {
        const double x = grid.center(i);
        double acc = 0.0, xp = 1.0;
        for (const double c : phase.coeffs) {
          xp *= x;
          acc += c * xp;
        }
        out[static_cast<std::size_t>(i)] = acc;
      }
      break;
    }
    case PhaseSpec::Type::Table: {
      std::filesystem::path p = phase.table_path;
      if (p.is_relative()) p = base_dir / p;
      out = read_phase_profile(p, grid);
      break;
    }
  }
  return out;
}

McConfig PipelineConfig::mc_config() const {
  McConfig mc;
  mc.retrieval = retrieval;
  mc.warm_start = mc_warm_start;
  mc.radius_k = radius_k();
  mc.threads = mc_threads;
  mc.keep_trial_phases = mc_dump_trial_phases;
  return mc;
}

PipelineConfig config_from_json(const json& j, const std::string& origin) {
  if (!j.is_object()) fail(origin, "top level must be an object");
  reject_unknown_keys(j,
                      {"version", "grid", "mode", "phase", "visibility", "counts", "detector",
                       "retrieval", "mc", "seed", "output_dir"},
                      origin);

  const auto version = get_integer(j, "version", origin);
  if (version != 1) fail(origin, "unsupported config version (expected 1)");

  PipelineConfig cfg;

  const json* grid = find(j, "grid");
  if (grid == nullptr || !grid->is_object()) fail("grid", "missing or not an object");
  reject_unknown_keys(*grid, {"x_min", "x_max", "n_bins"}, "grid");
  cfg.grid = make_grid(get_number(*grid, "x_min", "grid"), get_number(*grid, "x_max", "grid"),
                       static_cast<int>(get_integer(*grid, "n_bins", "grid")));

  const json* mode = find(j, "mode");
  if (mode == nullptr || !mode->is_object()) fail("mode", "missing or not an object");
  reject_unknown_keys(*mode, {"waist", "center"}, "mode");
  cfg.waist = get_number(*mode, "waist", "mode");
  cfg.center = get_number_or(*mode, "center", 0.0, "mode");
  if (!(cfg.waist > 0.0)) fail("mode", "waist must be > 0");

  const json* phase = find(j, "phase");
  if (phase == nullptr) fail("phase", "missing");
  cfg.phase = parse_phase(*phase);

  cfg.visibility = get_number(j, "visibility", origin);
  if (!(cfg.visibility >= 0.0 && cfg.visibility <= 1.0)) {
    fail(origin, "visibility must lie in [0, 1]");
  }

  const json* counts = find(j, "counts");
  if (counts == nullptr || !counts->is_object()) fail("counts", "missing or not an object");
  reject_unknown_keys(*counts, {"n_pairs", "n_marginal_events"}, "counts");
  cfg.n_pairs = get_integer(*counts, "n_pairs", "counts");
  cfg.n_marginal_events = get_integer_or(*counts, "n_marginal_events", 10000, "counts");
  if (cfg.n_pairs < 0) fail("counts", "n_pairs must be >= 0");
  if (cfg.n_marginal_events < 0) fail("counts", "n_marginal_events must be >= 0");

  if (const json* det = find(j, "detector")) {
    if (!det->is_object()) fail("detector", "must be an object");
    reject_unknown_keys(*det, {"dark_rate", "n_frames", "pair_efficiency"}, "detector");
    cfg.detector.dark_rate = get_number_or(*det, "dark_rate", 0.0, "detector");
    cfg.detector.n_frames = get_integer_or(*det, "n_frames", 0, "detector");
    cfg.detector.pair_efficiency = get_number_or(*det, "pair_efficiency", 1.0, "detector");
    if (!(cfg.detector.dark_rate >= 0.0)) fail("detector", "dark_rate must be >= 0");
    if (cfg.detector.n_frames < 0) fail("detector", "n_frames must be >= 0");
    if (!(cfg.detector.pair_efficiency > 0.0 && cfg.detector.pair_efficiency <= 1.0)) {
      fail("detector", "pair_efficiency must lie in (0, 1]");
    }
  }

  cfg.retrieval = parse_retrieval(find(j, "retrieval") ? *find(j, "retrieval") : json());

  if (const json* mc = find(j, "mc")) {
    if (!mc->is_object()) fail("mc", "must be an object");
    reject_unknown_keys(*mc, {"n_trials", "warm_start", "threads", "dump_trial_phases"}, "mc");
    cfg.mc_trials = static_cast<int>(get_integer_or(*mc, "n_trials", cfg.mc_trials, "mc"));
    cfg.mc_warm_start = get_bool_or(*mc, "warm_start", cfg.mc_warm_start, "mc");
    cfg.mc_threads = static_cast<int>(get_integer_or(*mc, "threads", cfg.mc_threads, "mc"));
    cfg.mc_dump_trial_phases =
        get_bool_or(*mc, "dump_trial_phases", cfg.mc_dump_trial_phases, "mc");
    if (cfg.mc_trials < 2) fail("mc", "n_trials must be >= 2");
    if (cfg.mc_threads < 0) fail("mc", "threads must be >= 0");
  }

  const json* seed = find(j, "seed");
  if (seed == nullptr) fail(origin, "missing field 'seed'");
  if (!seed->is_number_unsigned() && !seed->is_number_integer()) {
    fail(origin, "seed must be a nonnegative integer");
  }
  if (seed->is_number_integer() && seed->get<std::int64_t>() < 0) {
    fail(origin, "seed must be a nonnegative integer");
  }
  cfg.seed = seed->get<std::uint64_t>();

  if (const json* out = find(j, "output_dir")) {
    if (!out->is_string()) fail(origin, "output_dir must be a string");
    cfg.output_dir = out->get<std::string>();
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.string());
}

nlohmann::json config_echo(const PipelineConfig& cfg) {
  json j;
  j["version"] = 1;
  j["grid"] = {{"x_min", cfg.grid.x_min()}, {"x_max", cfg.grid.x_max()},
               {"n_bins", cfg.grid.n_bins()}};
  j["mode"] = {{"waist", cfg.waist}, {"center", cfg.center}};
  switch (cfg.phase.type) {
    case PhaseSpec::Type::Flat:
      j["phase"] = {{"type", "flat"}};
      break;
    case PhaseSpec::Type::Quadratic:
      j["phase"] = {{"type", "quadratic"}, {"k", cfg.phase.k}, {"radius", cfg.phase.radius}};
      break;
    case PhaseSpec::Type::Lens:
      j["phase"] = {{"type", "lens"}, {"k", cfg.phase.k},
                    {"focal_length", cfg.phase.focal_length}};
      break;
    case PhaseSpec::Type::Polynomial:
      j["phase"] = {{"type", "polynomial"}, {"coeffs", cfg.phase.coeffs}};
      break;
    case PhaseSpec::Type::Table:
      j["phase"] = {{"type", "table"}, {"path", cfg.phase.table_path}};
      break;
  }
  j["visibility"] = cfg.visibility;
  j["counts"] = {{"n_pairs", cfg.n_pairs}, {"n_marginal_events", cfg.n_marginal_events}};
  j["detector"] = {{"dark_rate", cfg.detector.dark_rate},
                   {"n_frames", cfg.detector.n_frames},
                   {"pair_efficiency", cfg.detector.pair_efficiency}};
  json cb = json::array();
  for (const auto& b : cfg.retrieval.coeff_bounds) cb.push_back({b[0], b[1]});
  j["retrieval"] = {{"poly_degree", cfg.retrieval.poly_degree},
                    {"n_global_starts", cfg.retrieval.n_global_starts},
                    {"coeff_bounds", cb},
                    {"visibility_bounds",
                     {cfg.retrieval.visibility_bounds[0], cfg.retrieval.visibility_bounds[1]}},
                    {"local_tol", cfg.retrieval.local_tol},
                    {"max_iters", cfg.retrieval.max_iters},
                    {"support_threshold", cfg.retrieval.support_threshold},
                    {"co_optimize_visibility", cfg.retrieval.co_optimize_visibility},
                    {"auto_bounds_k", cfg.retrieval.auto_bounds_k},
                    {"auto_bounds_focal", cfg.retrieval.auto_bounds_focal}};
  j["mc"] = {{"n_trials", cfg.mc_trials},
             {"warm_start", cfg.mc_warm_start},
             {"threads", cfg.mc_threads},
             {"dump_trial_phases", cfg.mc_dump_trial_phases}};
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  return j;
}

}  // namespace hsp
