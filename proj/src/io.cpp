#include "hsp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "hsp/errors.hpp"

namespace hsp {

namespace {

constexpr const char* kWavefunctionMagic = "hsp-wavefunction v1";
constexpr const char* kMatrixMagic = "hsp-matrix v1";
constexpr const char* kMarginalMagic = "hsp-marginal v1";
constexpr const char* kPhaseProfileMagic = "hsp-phase-profile v1";

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os << std::setprecision(17);
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open for reading: " + path.string());
  return is;
}

double parse_double(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("malformed number '" + tok + "' in " + path.string());
  }
}

std::int64_t parse_int(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("malformed integer '" + tok + "' in " + path.string());
  }
}

std::uint64_t parse_u64(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("malformed integer '" + tok + "' in " + path.string());
  }
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

/// Header block: first line "# <magic>", then "# key value" lines until
/// the first non-'#' line. Returns the metadata map and leaves `is`
/// positioned at the data.
struct Header {
  std::map<std::string, std::string> meta;
  std::string first_data_line;
  bool has_data_line = false;
};

Header read_header(std::ifstream& is, const char* magic, const std::filesystem::path& path) {
  Header h;
  std::string line;
  if (!std::getline(is, line) || line != std::string("# ") + magic) {
    throw DataError("bad or missing header (expected '" + std::string(magic) + "') in " +
                    path.string());
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] != '#') {
      h.first_data_line = line;
      h.has_data_line = true;
      break;
    }
    std::istringstream ls(line.substr(1));
    std::string key;
    ls >> key;
    std::string value;
    std::getline(ls, value);
    const auto first = value.find_first_not_of(" \t\r");
    const auto last = value.find_last_not_of(" \t\r");
    value = first == std::string::npos ? std::string() : value.substr(first, last - first + 1);
    if (!key.empty()) h.meta[key] = value;
  }
  return h;
}

std::string require_meta(const Header& h, const std::string& key,
                         const std::filesystem::path& path) {
  const auto it = h.meta.find(key);
  if (it == h.meta.end()) throw DataError("missing '" + key + "' header in " + path.string());
  return it->second;
}

Grid grid_from_header(const Header& h, const std::filesystem::path& path) {
  const double x_min = parse_double(require_meta(h, "x_min", path), path);
  const double x_max = parse_double(require_meta(h, "x_max", path), path);
  const auto n_bins = parse_int(require_meta(h, "n_bins", path), path);
  try {
    return make_grid(x_min, x_max, static_cast<int>(n_bins));
  } catch (const ConfigError& e) {
    throw DataError(std::string(e.what()) + " (while reading " + path.string() + ")");
  }
}

void write_grid_header(std::ofstream& os, const Grid& grid) {
  os << "# x_min " << grid.x_min() << "\n";
  os << "# x_max " << grid.x_max() << "\n";
  os << "# n_bins " << grid.n_bins() << "\n";
}

/// Data rows: the header's first data line plus the remaining lines.
std::vector<std::vector<std::string>> read_rows(std::ifstream& is, const Header& h) {
  std::vector<std::vector<std::string>> rows;
  if (h.has_data_line) rows.push_back(split_ws(h.first_data_line));
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(split_ws(line));
  }
  return rows;
}

void require_shape(const std::vector<std::vector<std::string>>& rows, std::size_t n_rows,
                   std::size_t n_cols, const std::filesystem::path& path) {
  if (rows.size() != n_rows) {
    std::ostringstream os;
    os << path.string() << ": expected " << n_rows << " data rows, found " << rows.size();
    throw DataError(os.str());
  }
  for (const auto& r : rows) {
    if (r.size() != n_cols) {
      std::ostringstream os;
      os << path.string() << ": expected " << n_cols << " columns, found a row with " << r.size();
      throw DataError(os.str());
    }
  }
}

}  // namespace

void write_wavefunction(const std::filesystem::path& path, const Wavefunction& wf) {
  auto os = open_out(path);
  os << "# " << kWavefunctionMagic << "\n";
  write_grid_header(os, wf.grid);
  os << "# columns x amplitude phase\n";
  for (int i = 0; i < wf.grid.n_bins(); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    os << wf.grid.center(i) << "\t" << wf.amplitude[ii] << "\t" << wf.phase[ii] << "\n";
  }
}

Wavefunction read_wavefunction(const std::filesystem::path& path) {
  auto is = open_in(path);
  const auto h = read_header(is, kWavefunctionMagic, path);
  const Grid grid = grid_from_header(h, path);
  auto rows = read_rows(is, h);
  require_shape(rows, static_cast<std::size_t>(grid.n_bins()), 3, path);
  std::vector<double> amp, phase;
  amp.reserve(rows.size());
  phase.reserve(rows.size());
  for (const auto& r : rows) {
    amp.push_back(parse_double(r[1], path));
    phase.push_back(parse_double(r[2], path));
  }
  // Stored amplitudes are already normalized; re-validate without rescaling
  // surprises (normalization is idempotent up to rounding).
  Wavefunction wf{grid, std::move(amp), std::move(phase)};
  for (double a : wf.amplitude) {
    if (!(a >= 0.0)) throw DataError("negative amplitude in " + path.string());
  }
  return wf;
}

void write_joint_distribution(const std::filesystem::path& path, const JointDistribution& jd,
                              const std::string& kind) {
  auto os = open_out(path);
  os << "# " << kMatrixMagic << "\n";
  os << "# kind " << kind << "\n";
  write_grid_header(os, jd.grid);
  if (jd.visibility) os << "# visibility " << *jd.visibility << "\n";
  const int n = jd.grid.n_bins();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) os << "\t";
      os << jd.at(i, j);
    }
    os << "\n";
  }
}

JointDistribution read_joint_distribution(const std::filesystem::path& path) {
  auto is = open_in(path);
  const auto h = read_header(is, kMatrixMagic, path);
  const Grid grid = grid_from_header(h, path);
  const auto n = static_cast<std::size_t>(grid.n_bins());
  auto rows = read_rows(is, h);
  require_shape(rows, n, n, path);
  JointDistribution jd{grid, std::vector<double>(n * n), std::nullopt};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = parse_double(rows[i][j], path);
      if (v < 0.0) throw DataError("negative probability in " + path.string());
      jd.p[i * n + j] = v;
    }
  }
  if (const auto it = h.meta.find("visibility"); it != h.meta.end()) {
    const double v = parse_double(it->second, path);
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DataError(path.string() + ": visibility outside [0, 1]");
    }
    jd.visibility = v;
  }
  return jd;
}

void write_coincidence_counts(const std::filesystem::path& path, const CoincidenceCounts& cc) {
  auto os = open_out(path);
  os << "# " << kMatrixMagic << "\n";
  os << "# kind coincidence_counts\n";
  write_grid_header(os, cc.grid);
  os << "# n_pairs " << cc.n_pairs << "\n";
  os << "# seed " << cc.seed << "\n";
  const int n = cc.grid.n_bins();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) os << "\t";
      os << cc.at(i, j);
    }
    os << "\n";
  }
}

CoincidenceCounts read_coincidence_counts(const std::filesystem::path& path) {
  auto is = open_in(path);
  const auto h = read_header(is, kMatrixMagic, path);
  if (require_meta(h, "kind", path) != "coincidence_counts") {
    throw DataError(path.string() + ": not a coincidence_counts matrix");
  }
  const Grid grid = grid_from_header(h, path);
  const auto n = static_cast<std::size_t>(grid.n_bins());
  auto rows = read_rows(is, h);
  require_shape(rows, n, n, path);
  CoincidenceCounts cc{grid, std::vector<std::int64_t>(n * n), 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto v = parse_int(rows[i][j], path);
      if (v < 0) throw DataError("negative count in " + path.string());
      cc.counts[i * n + j] = v;
    }
  }
  cc.n_pairs = parse_int(require_meta(h, "n_pairs", path), path);
  cc.seed = parse_u64(require_meta(h, "seed", path), path);
  if (cc.n_pairs != cc.total()) {
    throw DataError(path.string() + ": n_pairs header does not match the sum of counts");
  }
  return cc;
}

void write_marginal_counts(const std::filesystem::path& path, const MarginalCounts& mc) {
  auto os = open_out(path);
  os << "# " << kMarginalMagic << "\n";
  write_grid_header(os, mc.grid);
  os << "# mode " << to_string(mc.mode) << "\n";
  os << "# n_events " << mc.n_events << "\n";
  os << "# seed " << mc.seed << "\n";
  os << "# columns x count\n";
  for (int i = 0; i < mc.grid.n_bins(); ++i) {
    os << mc.grid.center(i) << "\t" << mc.counts[static_cast<std::size_t>(i)] << "\n";
  }
}

MarginalCounts read_marginal_counts(const std::filesystem::path& path) {
  auto is = open_in(path);
  const auto h = read_header(is, kMarginalMagic, path);
  const Grid grid = grid_from_header(h, path);
  auto rows = read_rows(is, h);
  require_shape(rows, static_cast<std::size_t>(grid.n_bins()), 2, path);
  MarginalCounts mc{grid, std::vector<std::int64_t>(rows.size()), 0,
                    measurement_mode_from_string(require_meta(h, "mode", path)), 0};
  if (mc.mode == MeasurementMode::Hologram) {
    throw DataError(path.string() + ": marginal counts cannot carry the hologram mode");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto v = parse_int(rows[i][1], path);
    if (v < 0) throw DataError("negative count in " + path.string());
    mc.counts[i] = v;
  }
  mc.n_events = parse_int(require_meta(h, "n_events", path), path);
  mc.seed = parse_u64(require_meta(h, "seed", path), path);
  if (mc.n_events != mc.total()) {
    throw DataError(path.string() + ": n_events header does not match the sum of counts");
  }
  return mc;
}

void write_phase_profile(const std::filesystem::path& path, const Grid& grid,
                         const std::vector<double>& phase) {
  if (phase.size() != static_cast<std::size_t>(grid.n_bins())) {
    throw DataError("write_phase_profile: length does not match the grid");
  }
  auto os = open_out(path);
  os << "# " << kPhaseProfileMagic << "\n";
  write_grid_header(os, grid);
  os << "# columns x phase\n";
  for (int i = 0; i < grid.n_bins(); ++i) {
    os << grid.center(i) << "\t" << phase[static_cast<std::size_t>(i)] << "\n";
  }
}

std::vector<double> read_phase_profile(const std::filesystem::path& path, const Grid& expected) {
  auto is = open_in(path);
  const auto h = read_header(is, kPhaseProfileMagic, path);
  const Grid grid = grid_from_header(h, path);
  if (!(grid == expected)) {
    throw DataError(path.string() + ": phase profile grid does not match the configured grid");
  }
  auto rows = read_rows(is, h);
  require_shape(rows, static_cast<std::size_t>(grid.n_bins()), 2, path);
  std::vector<double> phase(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) phase[i] = parse_double(rows[i][1], path);
  return phase;
}

void write_pgm_with_scale(const std::filesystem::path& path, const Grid& grid,
                          const std::vector<double>& matrix) {
  const int n = grid.n_bins();
  const auto nn = static_cast<std::size_t>(n);
  if (matrix.size() != nn * nn) throw DataError("write_pgm_with_scale: matrix size mismatch");

  double peak = 0.0;
  for (double v : matrix) {
    if (std::isfinite(v)) peak = std::max(peak, v);
  }

  auto os = open_out(path);
  os << "P5\n" << n << " " << n << "\n255\n";
  std::string bytes(nn * nn, '\0');
  for (int row = 0; row < n; ++row) {
    const int i = n - 1 - row;  // x increases upward
    for (int j = 0; j < n; ++j) {
      const double v = matrix[static_cast<std::size_t>(i) * nn + static_cast<std::size_t>(j)];
      int pix = 0;
      if (peak > 0.0 && std::isfinite(v) && v > 0.0) {
        pix = static_cast<int>(std::lround(255.0 * v / peak));
        pix = std::clamp(pix, 0, 255);
      }
      bytes[static_cast<std::size_t>(row) * nn + static_cast<std::size_t>(j)] =
          static_cast<char>(static_cast<unsigned char>(pix));
    }
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));

  nlohmann::json side;
  side["format"] = "pgm-p5";
  side["width"] = n;
  side["height"] = n;
  side["value_min"] = 0.0;
  side["value_max"] = peak;
  side["scale"] = peak > 0.0 ? 255.0 / peak : 0.0;
  side["orientation"] = "row 0 = largest x; columns follow x' left to right";
  write_json(path.string() + ".json", side);
}

namespace {

nlohmann::json grid_to_json(const Grid& grid) {
  return nlohmann::json{{"x_min", grid.x_min()}, {"x_max", grid.x_max()},
                        {"n_bins", grid.n_bins()}};
}

nlohmann::json vector_to_json(const std::vector<double>& v) {
  // NaN entries serialize as null.
  nlohmann::json arr = nlohmann::json::array();
  for (double x : v) {
    if (std::isfinite(x)) {
      arr.push_back(x);
    } else {
      arr.push_back(nullptr);
    }
  }
  return arr;
}

nlohmann::json mask_to_json(const std::vector<bool>& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (bool b : v) arr.push_back(b);
  return arr;
}

}  // namespace

nlohmann::json retrieval_result_to_json(const RetrievalResult& result, const RadiusFit* radius,
                                        const nlohmann::json& config_echo, std::uint64_t seed) {
  nlohmann::json j;
  j["format"] = "hsp-retrieval-result";
  j["version"] = 1;
  j["grid"] = grid_to_json(result.grid);
  j["phase"] = vector_to_json(result.phase);
  j["support_mask"] = mask_to_json(result.support_mask);
  j["visibility"] = result.visibility_est;
  j["objective"] = result.objective;
  j["stage1"] = {{"coeffs", result.poly_coeffs_stage1}, {"objective", result.stage1_objective}};
  j["gauge"] = {{"offset", result.gauge.offset},
                {"sign", result.gauge.sign},
                {"convexity_fit_ok", result.gauge.convexity_fit_ok}};
  j["amplitude_u"] = vector_to_json(result.amp_u);
  j["amplitude_r"] = vector_to_json(result.amp_r);
  j["iterations"] = result.objective_trace.empty()
                        ? 0
                        : static_cast<int>(result.objective_trace.size()) - 1;
  if (radius != nullptr) {
    j["radius_fit"] = {{"radius", radius->radius},
                       {"std_error", radius->std_error},
                       {"quad_coeff", radius->quad_coeff},
                       {"quad_std_error", radius->quad_std_error}};
  } else {
    j["radius_fit"] = nullptr;
  }
  j["config"] = config_echo;
  j["seed"] = seed;
  return j;
}

nlohmann::json mc_summary_to_json(const McSummary& summary, const nlohmann::json& config_echo,
                                  std::uint64_t seed) {
  nlohmann::json j;
  j["format"] = "hsp-mc-summary";
  j["version"] = 1;
  j["grid"] = grid_to_json(summary.grid);
  j["n_trials"] = summary.n_trials;
  j["n_failures"] = summary.n_failures;
  j["phase_mean"] = vector_to_json(summary.phase_mean);
  j["phase_std"] = vector_to_json(summary.phase_std);
  j["support_mask"] = mask_to_json(summary.support_mask);
  j["amplitude_u"] = vector_to_json(summary.amp_u_base);
  j["amplitude_r"] = vector_to_json(summary.amp_r_base);
  j["visibility_mean"] = summary.visibility_mean;
  j["visibility_std"] = summary.visibility_std;
  j["r_mean"] = summary.r_mean;
  j["r_std"] = summary.r_std;
  j["seeds"] = summary.seeds;
  j["config"] = config_echo;
  j["seed"] = seed;
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto os = open_out(path);
  os << j.dump(2) << "\n";
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    const std::streamsize got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001B3ULL;
    }
  }
  return hash;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

}  // namespace hsp
