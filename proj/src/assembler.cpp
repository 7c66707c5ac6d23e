#include "spt/assembler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <unistd.h>

#include <Eigen/Dense>
#include <json.hpp>

namespace spt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Runs one pipeline stage, prefixing any failure with the stage name while
// preserving the invalid_argument/runtime_error distinction.
template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("stage ") + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
  }
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Mode multiplicities and characters are a function of N alone; reattached
// when a spectrum is restored from cache.
void attach_mode_metadata(NormalModeSpectrum& spectrum, int n) {
  spectrum.n = n;
  spectrum.multiplicity = {{"0+", 1}, {"0-", 1}, {"1-", n - 1}};
  spectrum.character = {{"0+", "center-of-mass"}, {"0-", "breathing"}, {"1-", "single-particle"}};
  if (n >= 3) {
    spectrum.multiplicity["1+"] = n - 1;
    spectrum.character["1+"] = "single-particle";
  }
  if (n >= 4) {
    spectrum.multiplicity["2"] = n * (n - 3) / 2;
    spectrum.character["2"] = "phonon";
  }
}

std::string cache_key(const SystemSpec& spec, const PipelineOptions& options) {
  std::ostringstream key;
  key << kConventionsVersion << "|nu=" << spec.n_up << "|nd=" << spec.n_down
      << "|w=" << format_double(spec.trap_frequency) << "|dim=" << spec.dimension_target << "|"
      << spec.interaction.fingerprint() << "|prom=" << options.max_promotion;
  if (options.occupancy_override) {
    const OccupancyState& o = *options.occupancy_override;
    key << "|occ=" << o.n0p << "," << o.n0m << "," << o.n1p << "," << o.n1m << "," << o.n2;
  }
  return key.str();
}

std::string cache_path_for(const std::string& dir, const std::string& key) {
  std::ostringstream name;
  name << "spt_" << std::hex << std::hash<std::string>{}(key) << ".json";
  return (fs::path(dir) / name.str()).string();
}

json minimum_to_json(const SymmetricMinimum& m) {
  return json{{"r", m.r_infinity},
              {"g", m.gamma_infinity},
              {"e_inf", m.e_infinity},
              {"pair_weight", m.pair_weight},
              {"n", m.n},
              {"iterations", m.iterations},
              {"hessian", {m.reduced_hessian(0, 0), m.reduced_hessian(0, 1),
                           m.reduced_hessian(1, 1)}}};
}

SymmetricMinimum minimum_from_json(const json& j) {
  SymmetricMinimum m;
  m.r_infinity = j.at("r").get<double>();
  m.gamma_infinity = j.at("g").get<double>();
  m.e_infinity = j.at("e_inf").get<double>();
  m.pair_weight = j.at("pair_weight").get<double>();
  m.n = j.at("n").get<int>();
  m.iterations = j.at("iterations").get<int>();
  const auto& h = j.at("hessian");
  m.reduced_hessian << h.at(0).get<double>(), h.at(1).get<double>(), h.at(1).get<double>(),
      h.at(2).get<double>();
  return m;
}

json orbitals_to_json(const std::vector<std::array<int, 3>>& orbitals) {
  json out = json::array();
  for (const auto& o : orbitals) out.push_back({o[0], o[1], o[2]});
  return out;
}

std::vector<std::array<int, 3>> orbitals_from_json(const json& j) {
  std::vector<std::array<int, 3>> out;
  for (const auto& o : j)
    out.push_back({o.at(0).get<int>(), o.at(1).get<int>(), o.at(2).get<int>()});
  return out;
}

json result_to_json(const PipelineResult& result, const std::string& key) {
  json j;
  j["key"] = key;
  j["version"] = kConventionsVersion;
  j["depth_parameter"] = result.tuned_model.depth_parameter;
  j["minimum"] = minimum_to_json(result.minimum);
  j["spectrum"] = json{{"omega", result.spectrum.omega}, {"v0", result.spectrum.v0}};
  j["selection"] = json{
      {"feasible", result.selection.feasible},
      {"occupancy",
       {result.selection.occupancy.n0p, result.selection.occupancy.n0m,
        result.selection.occupancy.n1p, result.selection.occupancy.n1m,
        result.selection.occupancy.n2}},
      {"quanta_energy", result.selection.quanta_energy},
      {"orbitals_up", orbitals_to_json(result.selection.configuration.orbitals_up)},
      {"orbitals_down", orbitals_to_json(result.selection.configuration.orbitals_down)},
      {"radial_sum", result.selection.configuration.radial_sum},
      {"angular_sum", result.selection.configuration.angular_sum},
      {"shell_energy", result.selection.configuration.shell_energy}};
  j["energy"] = json{{"e_infinity_scaled", result.energy.e_infinity_scaled},
                     {"harmonic_term_scaled", result.energy.harmonic_term_scaled},
                     {"total_scaled", result.energy.total_scaled},
                     {"total_unscaled", result.energy.total_unscaled},
                     {"breakdown", result.energy.breakdown},
                     {"promoted_quanta", result.energy.promoted_quanta}};
  return j;
}

bool result_from_json(const json& j, const std::string& key, PipelineResult& result) {
  if (j.value("key", "") != key || j.value("version", "") != kConventionsVersion) return false;
  result.tuned_model.depth_parameter = j.at("depth_parameter").get<double>();
  result.minimum = minimum_from_json(j.at("minimum"));
  const auto& spec_j = j.at("spectrum");
  result.spectrum.omega = spec_j.at("omega").get<std::map<std::string, double>>();
  result.spectrum.v0 = spec_j.at("v0").get<double>();
  attach_mode_metadata(result.spectrum, result.minimum.n);
  const auto& sel = j.at("selection");
  result.selection.feasible = sel.at("feasible").get<bool>();
  const auto& occ = sel.at("occupancy");
  result.selection.occupancy = {occ.at(0).get<int>(), occ.at(1).get<int>(), occ.at(2).get<int>(),
                                occ.at(3).get<int>(), occ.at(4).get<int>()};
  result.selection.quanta_energy = sel.at("quanta_energy").get<double>();
  result.selection.configuration.orbitals_up = orbitals_from_json(sel.at("orbitals_up"));
  result.selection.configuration.orbitals_down = orbitals_from_json(sel.at("orbitals_down"));
  result.selection.configuration.radial_sum = sel.at("radial_sum").get<int>();
  result.selection.configuration.angular_sum = sel.at("angular_sum").get<int>();
  result.selection.configuration.shell_energy = sel.at("shell_energy").get<int>();
  const auto& en = j.at("energy");
  result.energy.e_infinity_scaled = en.at("e_infinity_scaled").get<double>();
  result.energy.harmonic_term_scaled = en.at("harmonic_term_scaled").get<double>();
  result.energy.total_scaled = en.at("total_scaled").get<double>();
  result.energy.total_unscaled = en.at("total_unscaled").get<double>();
  result.energy.breakdown = en.at("breakdown").get<std::map<std::string, double>>();
  result.energy.promoted_quanta = en.at("promoted_quanta").get<int>();
  return true;
}

bool try_cache_load(const std::string& path, const std::string& key, PipelineResult& result) {
  try {
    std::ifstream in(path);
    if (!in) return false;
    json j;
    in >> j;
    return result_from_json(j, key, result);
  } catch (...) {
    return false;  // unreadable cache entries are recomputed, never fatal
  }
}

void try_cache_store(const std::string& dir, const std::string& path, const json& j) {
  try {
    fs::create_directories(dir);
    static std::atomic<unsigned> counter{0};
    std::ostringstream tmp_name;
    tmp_name << "tmp_" << ::getpid() << "_" << counter.fetch_add(1) << ".json";
    const fs::path tmp = fs::path(dir) / tmp_name.str();
    {
      std::ofstream out(tmp);
      out << j.dump(1) << "\n";
      if (!out) {
        fs::remove(tmp);
        return;
      }
    }
    fs::rename(tmp, path);  // atomic publish
  } catch (...) {
    // cache is an optimization; storage failures never fail the pipeline
  }
}

// Least-squares polynomial fit, lowest degree first.
Eigen::VectorXd polyfit(const std::vector<std::pair<double, double>>& pts, int degree) {
  const int rows = int(pts.size());
  Eigen::MatrixXd a(rows, degree + 1);
  Eigen::VectorXd b(rows);
  for (int i = 0; i < rows; ++i) {
    double power = 1.0;
    for (int k = 0; k <= degree; ++k) {
      a(i, k) = power;
      power *= pts[i].first;
    }
    b[i] = pts[i].second;
  }
  return a.colPivHouseholderQr().solve(b);
}

double polyval(const Eigen::VectorXd& coeffs, double x) {
  double value = 0.0;
  for (int k = int(coeffs.size()) - 1; k >= 0; --k) value = value * x + coeffs[k];
  return value;
}

}  // namespace

std::vector<BenchmarkRecord> load_reference_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_reference_csv: cannot open '" + path + "'");
  std::vector<BenchmarkRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!fields.empty() && fields[0] == "N") continue;  // header row
    if (fields.size() < 4)
      throw std::runtime_error("load_reference_csv: line " + std::to_string(line_no) +
                               ": expected 4 comma-separated fields (N,E_ref,sigma,source)");
    BenchmarkRecord rec;
    try {
      size_t used = 0;
      rec.n_particles = std::stoi(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("trailing characters");
      rec.energy_ref = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing characters");
      rec.uncertainty = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::runtime_error("load_reference_csv: line " + std::to_string(line_no) +
                               ": malformed numeric field");
    }
    rec.source_label = fields[3];
    if (rec.n_particles < 1)
      throw std::runtime_error("load_reference_csv: line " + std::to_string(line_no) +
                               ": particle number must be >= 1");
    out.push_back(rec);
  }
  std::sort(out.begin(), out.end(), [](const BenchmarkRecord& a, const BenchmarkRecord& b) {
    return a.n_particles < b.n_particles;
  });
  return out;
}

EnergyResult assemble_energy(const SymmetricMinimum& minimum, const NormalModeSpectrum& spectrum,
                             const OccupancyState& occupancy, const ScalingFrame& frame) {
  if (spectrum.n != minimum.n)
    throw std::invalid_argument("assemble_energy: minimum/spectrum particle-count mismatch");
  const int n = minimum.n;
  if (spectrum.total_modes() != n * (n + 1) / 2)
    throw std::invalid_argument("assemble_energy: multiplicities do not sum to N(N+1)/2");
  EnergyResult result;
  result.e_infinity_scaled = minimum.e_infinity;
  for (const auto& [mode, omega] : spectrum.omega) {
    const double d = spectrum.multiplicity.at(mode);
    result.breakdown[mode] = frame.delta * (occupancy.get(mode) + d / 2.0) * omega;
  }
  result.breakdown["v0"] = frame.delta * spectrum.v0;
  double harmonic = 0.0;
  for (const auto& [label, value] : result.breakdown) harmonic += value;
  result.harmonic_term_scaled = harmonic;
  result.total_scaled = result.e_infinity_scaled + harmonic;
  result.total_unscaled = unscale_energy(result.total_scaled, frame);
  return result;
}

std::string default_cache_dir() {
  if (const char* env = std::getenv("SPT_CACHE_DIR"); env && *env) return env;
  if (const char* home = std::getenv("HOME"); home && *home)
    return (fs::path(home) / ".cache" / "spt").string();
  return ".spt-cache";
}

PipelineResult run_pipeline(const SystemSpec& spec, const PipelineOptions& options) {
  PipelineResult result;
  result.spec = spec;
  stage("validate", [&] { spec.validate(); });
  result.frame = stage("scale", [&] {
    return build_scaling_frame(spec.dimension_target, spec.trap_frequency);
  });

  const std::string key = cache_key(spec, options);
  const std::string dir = options.cache_dir.empty() ? default_cache_dir() : options.cache_dir;
  const std::string path = cache_path_for(dir, key);
  if (options.use_cache) {
    PipelineResult cached = result;
    cached.tuned_model = spec.interaction;
    if (try_cache_load(path, key, cached)) {
      cached.from_cache = true;
      if (!options.oracle_check) return cached;
      // Oracle requested: fall through and recompute everything.
    }
  }

  result.tuned_model = stage("tune", [&] {
    InteractionModel model = spec.interaction;
    if (model.is_square_well() && model.depth_parameter <= 0.0) {
      const TuneResult tuned = tune_unitarity(model.range);
      model.depth_parameter = tuned.depth_parameter;
    }
    return model;
  });
  SystemSpec tuned_spec = spec;
  tuned_spec.interaction = result.tuned_model;

  result.minimum =
      stage("minimize", [&] { return find_symmetric_minimum(result.tuned_model, tuned_spec); });
  const FGPatterns patterns = stage("patterns", [&] {
    return build_fg_patterns(result.minimum, result.tuned_model, tuned_spec);
  });
  result.spectrum = stage("modes", [&] {
    NormalModeSpectrum modes = reduced_eigensolve(patterns, spec.n());
    modes.v0 = compute_v0(result.minimum, patterns, tuned_spec);
    return modes;
  });

  if (options.oracle_check) {
    stage("oracle", [&] {
      const std::vector<double> dense = full_eigensolve(patterns, spec.n());
      std::vector<double> reduced;
      for (const auto& [mode, omega] : result.spectrum.omega) {
        const int d = result.spectrum.multiplicity.at(mode);
        for (int i = 0; i < d; ++i) reduced.push_back(omega * omega);
      }
      std::sort(reduced.begin(), reduced.end());
      if (reduced.size() != dense.size())
        throw std::runtime_error("reduced/dense eigenvalue count mismatch");
      for (size_t i = 0; i < dense.size(); ++i)
        if (std::abs(reduced[i] - dense[i]) > 1e-9 * std::max(1.0, std::abs(dense[i])))
          throw std::runtime_error("reduced/dense eigenvalue mismatch at index " +
                                   std::to_string(i) + ": " + format_double(reduced[i]) +
                                   " vs " + format_double(dense[i]));
    });
  }

  int promoted = 0;
  if (options.occupancy_override) {
    result.selection.feasible = true;
    result.selection.occupancy = *options.occupancy_override;
    double quanta = 0.0;
    for (const auto& [mode, omega] : result.spectrum.omega)
      quanta += result.selection.occupancy.get(mode) * omega;
    result.selection.quanta_energy = quanta;
  } else {
    result.selection = stage("select", [&] {
      GroundSelection sel =
          select_ground_occupancy(fill_shells(spec.n_up, spec.n_down), result.spectrum);
      while (!sel.feasible && promoted < options.max_promotion) {
        ++promoted;
        sel = select_ground_occupancy(fill_shells_promoted(spec.n_up, spec.n_down, promoted),
                                      result.spectrum);
      }
      if (!sel.feasible)
        throw std::runtime_error(
            "no parity-admissible occupancy within " + std::to_string(options.max_promotion) +
            " promoted shell quanta");
      return sel;
    });
  }

  result.energy = stage("assemble", [&] {
    return assemble_energy(result.minimum, result.spectrum, result.selection.occupancy,
                           result.frame);
  });
  result.energy.promoted_quanta = promoted;

  if (options.use_cache) try_cache_store(dir, path, result_to_json(result, key));
  return result;
}

std::vector<SweepRow> sweep(const SystemSpec& spec_template, const std::vector<int>& n_list,
                            const PipelineOptions& options) {
  if (n_list.empty()) throw std::invalid_argument("sweep: empty particle-number list");
  std::vector<int> sorted_n = n_list;
  std::sort(sorted_n.begin(), sorted_n.end());
  sorted_n.erase(std::unique(sorted_n.begin(), sorted_n.end()), sorted_n.end());
  if (sorted_n.front() < 2) throw std::invalid_argument("sweep: particle numbers must be >= 2");

  std::vector<std::future<SweepRow>> futures;
  futures.reserve(sorted_n.size());
  for (const int n : sorted_n) {
    futures.push_back(std::async(std::launch::async, [&spec_template, &options, n] {
      SweepRow row;
      row.n = n;
      try {
        SystemSpec spec = spec_template;
        spec.n_up = (n + 1) / 2;
        spec.n_down = n / 2;
        row.energy = run_pipeline(spec, options).energy;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      return row;
    }));
  }
  std::vector<SweepRow> rows;
  rows.reserve(futures.size());
  for (auto& f : futures) rows.push_back(f.get());

  const SweepRow* previous = nullptr;
  for (auto& row : rows) {
    if (!row.ok) continue;
    row.first_difference =
        previous ? row.energy.total_unscaled - previous->energy.total_unscaled : 0.0;
    previous = &row;
  }
  return rows;
}

ExtrapolationResult extrapolate_zero_range(const SystemSpec& spec_template,
                                           const std::vector<double>& r_list,
                                           const PipelineOptions& options) {
  if (r_list.size() < 3)
    throw std::invalid_argument("extrapolate_zero_range: need at least 3 well radii");
  if (!spec_template.interaction.is_square_well())
    throw std::invalid_argument("extrapolate_zero_range: template must use the square well");
  std::vector<double> radii = r_list;
  std::sort(radii.begin(), radii.end());
  for (const double r : radii)
    if (!(r > 0.0)) throw std::invalid_argument("extrapolate_zero_range: radii must be > 0");

  ExtrapolationResult out;
  std::vector<std::future<double>> futures;
  for (const double r : radii) {
    futures.push_back(std::async(std::launch::async, [&spec_template, &options, r] {
      SystemSpec spec = spec_template;
      spec.interaction.range = r;
      spec.interaction.depth_parameter = 0.0;  // re-tune to unitarity at this radius
      return run_pipeline(spec, options).energy.total_unscaled;
    }));
  }
  for (size_t i = 0; i < radii.size(); ++i) out.points.emplace_back(radii[i], futures[i].get());

  double scale = 1.0;
  for (const auto& [r, e] : out.points) scale = std::max(scale, std::abs(e));
  auto max_residual = [&](const Eigen::VectorXd& coeffs) {
    double residual = 0.0;
    for (const auto& [r, e] : out.points)
      residual = std::max(residual, std::abs(polyval(coeffs, r) - e));
    return residual;
  };

  Eigen::VectorXd linear = polyfit(out.points, 1);
  out.e0 = linear[0];
  out.slope = linear[1];
  out.residual = max_residual(linear);
  out.order = 1;
  if (out.residual > 1e-4 * scale && out.points.size() >= 3) {
    const Eigen::VectorXd quad = polyfit(out.points, 2);
    const double quad_residual = max_residual(quad);
    if (quad_residual < out.residual) {
      out.e0 = quad[0];
      out.slope = quad[1];
      out.residual = quad_residual;
      out.order = 2;
    }
  }
  out.monotone = true;
  for (size_t i = 2; i < out.points.size(); ++i) {
    const double d1 = out.points[i - 1].second - out.points[i - 2].second;
    const double d2 = out.points[i].second - out.points[i - 1].second;
    if (d1 * d2 < 0.0) out.monotone = false;
  }
  return out;
}

ComparisonReport compare(const std::vector<SweepRow>& table,
                         const std::vector<BenchmarkRecord>& references, double abs_tol,
                         double rel_tol) {
  ComparisonReport report;
  report.abs_tolerance = abs_tol;
  report.rel_tolerance = rel_tol;
  for (const auto& row : table) {
    if (!row.ok) continue;
    for (const auto& ref : references) {
      if (ref.n_particles != row.n) continue;
      ComparisonRow cmp;
      cmp.n = row.n;
      cmp.e_computed = row.energy.total_unscaled;
      cmp.e_ref = ref.energy_ref;
      cmp.sigma = ref.uncertainty;
      cmp.abs_dev = std::abs(cmp.e_computed - cmp.e_ref);
      cmp.rel_dev = cmp.e_ref != 0.0 ? cmp.abs_dev / std::abs(cmp.e_ref) : 0.0;
      cmp.within_tolerance = cmp.abs_dev <= cmp.sigma + abs_tol + rel_tol * std::abs(cmp.e_ref);
      cmp.source_label = ref.source_label;
      report.rows.push_back(cmp);
    }
  }
  report.empty_overlap = report.rows.empty();
  for (const auto& row : report.rows) {
    report.max_abs_dev = std::max(report.max_abs_dev, row.abs_dev);
    report.max_rel_dev = std::max(report.max_rel_dev, row.rel_dev);
    if (row.within_tolerance) ++report.n_within;
  }
  if (report.rows.size() >= 2) {
    // Regression slope of |deviation| against N.
    double mean_n = 0.0, mean_dev = 0.0;
    for (const auto& row : report.rows) {
      mean_n += row.n;
      mean_dev += row.abs_dev;
    }
    mean_n /= double(report.rows.size());
    mean_dev /= double(report.rows.size());
    double cov = 0.0, var = 0.0;
    for (const auto& row : report.rows) {
      cov += (row.n - mean_n) * (row.abs_dev - mean_dev);
      var += (row.n - mean_n) * (row.n - mean_n);
    }
    report.deviation_grows_with_n = var > 0.0 && cov / var > 0.0;
  }
  return report;
}

std::vector<std::string> cache_list(const std::string& cache_dir) {
  const std::string dir = cache_dir.empty() ? default_cache_dir() : cache_dir;
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      out.push_back(entry.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

int cache_clear(const std::string& cache_dir) {
  const std::string dir = cache_dir.empty() ? default_cache_dir() : cache_dir;
  int removed = 0;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      std::error_code remove_ec;
      if (fs::remove(entry.path(), remove_ec)) ++removed;
    }
  }
  return removed;
}

}  // namespace spt
