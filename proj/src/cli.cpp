#include "spt/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spt/assembler.hpp"

namespace spt {

namespace {

using nlohmann::json;

// Distinguishes file-system failures (exit code 4) from computation failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt12(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

enum class Format { Table, Csv, Json };

Format parse_format(const std::string& text) {
  if (text == "table") return Format::Table;
  if (text == "csv") return Format::Csv;
  if (text == "json") return Format::Json;
  throw std::invalid_argument("unknown --format '" + text + "' (expected table, csv, or json)");
}

// "8" | "6..30" | "6,8,10"
std::vector<int> parse_n_list(const std::string& text) {
  auto parse_int = [&](const std::string& field) {
    size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(field, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != field.size())
      throw std::invalid_argument("cannot parse particle number '" + field + "'");
    return value;
  };
  const auto range_sep = text.find("..");
  if (range_sep != std::string::npos) {
    const int lo = parse_int(text.substr(0, range_sep));
    const int hi = parse_int(text.substr(range_sep + 2));
    if (lo > hi) throw std::invalid_argument("empty range '" + text + "'");
    std::vector<int> out;
    for (int n = lo; n <= hi; ++n) out.push_back(n);
    return out;
  }
  std::vector<int> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(parse_int(field));
  if (out.empty()) throw std::invalid_argument("empty particle-number list");
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(field, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != field.size()) throw std::invalid_argument("cannot parse number '" + field + "'");
    out.push_back(value);
  }
  if (out.empty()) throw std::invalid_argument("empty number list");
  return out;
}

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw IoError("cannot open output file '" + path + "'");
    } else {
      fallback_ = &fallback;
    }
  }
  std::ostream& os() { return file_ ? static_cast<std::ostream&>(*file_) : *fallback_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* fallback_ = nullptr;
};

std::string csv_field(const json& value) {
  if (value.is_string()) {
    std::string s = value.get<std::string>();
    if (s.find(',') != std::string::npos || s.find('"') != std::string::npos) {
      std::string escaped = "\"";
      for (const char c : s) {
        if (c == '"') escaped += '"';
        escaped += c;
      }
      escaped += '"';
      return escaped;
    }
    return s;
  }
  if (value.is_number_float()) return fmt17(value.get<double>());
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  return value.dump();
}

std::string table_field(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_float()) return fmt12(value.get<double>());
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  return value.dump();
}

// Shared emitter: meta key/values plus a uniform row table.
void emit(Sink& sink, Format format, const json& meta, const std::vector<std::string>& columns,
          const std::vector<json>& rows) {
  std::ostream& os = sink.os();
  switch (format) {
    case Format::Json: {
      json doc;
      doc["meta"] = meta;
      doc["rows"] = rows;
      os << doc.dump(2) << "\n";
      return;
    }
    case Format::Csv: {
      for (const auto& [key, value] : meta.items())
        os << "# " << key << " = " << csv_field(value) << "\n";
      if (!columns.empty()) {
        for (size_t c = 0; c < columns.size(); ++c)
          os << columns[c] << (c + 1 < columns.size() ? "," : "\n");
        for (const auto& row : rows)
          for (size_t c = 0; c < columns.size(); ++c)
            os << csv_field(row.at(columns[c])) << (c + 1 < columns.size() ? "," : "\n");
      }
      return;
    }
    case Format::Table: {
      for (const auto& [key, value] : meta.items())
        os << key << " = " << table_field(value) << "\n";
      if (columns.empty()) return;
      if (!meta.empty()) os << "\n";
      std::vector<size_t> width(columns.size());
      std::vector<std::vector<std::string>> cells;
      for (size_t c = 0; c < columns.size(); ++c) width[c] = columns[c].size();
      for (const auto& row : rows) {
        std::vector<std::string> line;
        for (size_t c = 0; c < columns.size(); ++c) {
          line.push_back(table_field(row.at(columns[c])));
          width[c] = std::max(width[c], line.back().size());
        }
        cells.push_back(std::move(line));
      }
      auto print_row = [&](const std::vector<std::string>& line) {
        for (size_t c = 0; c < line.size(); ++c) {
          os << line[c];
          if (c + 1 < line.size()) os << std::string(width[c] - line[c].size() + 2, ' ');
        }
        os << "\n";
      };
      print_row(columns);
      for (const auto& line : cells) print_row(line);
      return;
    }
  }
}

struct CliState {
  // model flags (global, fall through to subcommands)
  int nup = 1;
  int ndown = 1;
  std::string n_text;
  double omega = 1.0;
  int dim = 3;
  std::string interaction = "ideal";
  double lambda = 0.0;
  double well_radius = 0.01;
  double depth_parameter = 0.0;
  // behavior flags
  bool no_cache = false;
  std::string cache_dir;
  bool oracle = false;
  bool verbose = false;
  std::string format_text = "table";
  std::string output_path;
  bool boson_reference = false;
  bool harmonic_weights = false;
  // subcommand parameters
  double emax = 0.0;
  double beta = 0.0;
  std::string r_list_text;
  std::string refs_path;
  // option-presence bookkeeping (set after parse)
  bool n_set = false;
  bool nup_set = false;
  bool ndown_set = false;
  bool lambda_set = false;
  bool radius_set = false;
  bool depth_set = false;
};

InteractionModel make_interaction(const CliState& s) {
  if (s.interaction == "ideal") {
    if (s.lambda_set)
      throw std::invalid_argument(
          "conflicting fields: --lambda requires --interaction harmonic (got 'ideal')");
    if (s.radius_set || s.depth_set)
      throw std::invalid_argument(
          "conflicting fields: --well-radius/--well-depth-parameter require --interaction well "
          "(got 'ideal')");
    return InteractionModel::non_interacting();
  }
  if (s.interaction == "harmonic") {
    if (s.radius_set || s.depth_set)
      throw std::invalid_argument(
          "conflicting fields: --well-radius/--well-depth-parameter require --interaction well "
          "(got 'harmonic')");
    if (!s.lambda_set)
      throw std::invalid_argument("--interaction harmonic requires --lambda");
    return InteractionModel::harmonic_pair(s.lambda);
  }
  if (s.interaction == "well") {
    if (s.lambda_set)
      throw std::invalid_argument(
          "conflicting fields: --lambda requires --interaction harmonic (got 'well')");
    return InteractionModel::square_well(s.well_radius, s.depth_parameter);
  }
  throw std::invalid_argument("unknown --interaction '" + s.interaction +
                              "' (expected ideal, harmonic, or well)");
}

SystemSpec make_spec(const CliState& s) {
  if (s.n_set && (s.nup_set || s.ndown_set))
    throw std::invalid_argument("conflicting fields: --n and --nup/--ndown are both set");
  SystemSpec spec;
  if (s.n_set) {
    const std::vector<int> n_list = parse_n_list(s.n_text);
    if (n_list.size() != 1)
      throw std::invalid_argument("--n must be a single particle number for this subcommand");
    spec.n_up = (n_list[0] + 1) / 2;
    spec.n_down = n_list[0] / 2;
  } else {
    spec.n_up = s.nup;
    spec.n_down = s.ndown;
  }
  spec.trap_frequency = s.omega;
  spec.dimension_target = s.dim;
  spec.interaction = make_interaction(s);
  spec.validate();
  return spec;
}

PipelineOptions make_options(const CliState& s) {
  PipelineOptions options;
  options.use_cache = !s.no_cache;
  options.cache_dir = s.cache_dir;
  options.oracle_check = s.oracle;
  if (s.boson_reference) options.occupancy_override = OccupancyState{};
  return options;
}

json occupancy_to_json(const OccupancyState& occ) {
  return json{{"0+", occ.n0p}, {"0-", occ.n0m}, {"1+", occ.n1p}, {"1-", occ.n1m}, {"2", occ.n2}};
}

InteractionModel tuned_interaction(const CliState& s) {
  InteractionModel model = make_interaction(s);
  if (model.is_square_well() && model.depth_parameter <= 0.0)
    model.depth_parameter = tune_unitarity(model.range).depth_parameter;
  return model;
}

void cmd_tune(const CliState& s, std::ostream& out) {
  if (s.interaction != "well" || !s.radius_set)
    throw std::invalid_argument("tune requires --interaction well and --well-radius");
  const TuneResult tuned = tune_unitarity(s.well_radius);
  const ScatteringResult closed = compute_scattering_length(tuned.v_depth, s.well_radius);
  const ScatteringResult numeric = integrate_scattering_length(tuned.v_depth, s.well_radius);
  InteractionModel model = InteractionModel::square_well(s.well_radius, tuned.depth_parameter);
  json meta{{"well_radius", s.well_radius},
            {"depth_parameter", tuned.depth_parameter},
            {"v_depth", tuned.v_depth},
            {"inverse_scattering_length", tuned.inverse_scattering_length},
            {"inv_a_closed_form", closed.inverse_scattering_length},
            {"inv_a_numerical", numeric.inverse_scattering_length},
            {"scaled_depth", model.scaled_depth()},
            {"scaled_range", model.scaled_range()}};
  Sink sink(s.output_path, out);
  emit(sink, parse_format(s.format_text), meta, {}, {});
}

void cmd_minimize(const CliState& s, std::ostream& out) {
  SystemSpec spec = make_spec(s);
  spec.interaction = tuned_interaction(s);
  const ScalingFrame frame = build_scaling_frame(spec.dimension_target, spec.trap_frequency);
  const SymmetricMinimum minimum = find_symmetric_minimum(spec.interaction, spec);
  json meta{{"n", minimum.n},
            {"r_infinity", minimum.r_infinity},
            {"gamma_infinity", minimum.gamma_infinity},
            {"e_infinity_scaled", minimum.e_infinity},
            {"e_infinity_unscaled", unscale_energy(minimum.e_infinity, frame)},
            {"pair_weight", minimum.pair_weight},
            {"iterations", minimum.iterations},
            {"hessian_rr", minimum.reduced_hessian(0, 0)},
            {"hessian_rg", minimum.reduced_hessian(0, 1)},
            {"hessian_gg", minimum.reduced_hessian(1, 1)}};
  Sink sink(s.output_path, out);
  emit(sink, parse_format(s.format_text), meta, {}, {});
}

void cmd_modes(const CliState& s, std::ostream& out) {
  SystemSpec spec = make_spec(s);
  spec.interaction = tuned_interaction(s);
  const SymmetricMinimum minimum = find_symmetric_minimum(spec.interaction, spec);
  const FGPatterns patterns = build_fg_patterns(minimum, spec.interaction, spec);
  NormalModeSpectrum modes = reduced_eigensolve(patterns, spec.n());
  modes.v0 = compute_v0(minimum, patterns, spec);

  json meta{{"n", spec.n()},
            {"e_infinity_scaled", minimum.e_infinity},
            {"v0", modes.v0},
            {"pattern_residual", patterns.residual},
            {"total_modes", modes.total_modes()}};
  if (s.oracle) {
    const std::vector<double> dense = full_eigensolve(patterns, spec.n());
    std::vector<double> reduced;
    for (const auto& [mode, omega] : modes.omega) {
      for (int i = 0; i < modes.multiplicity.at(mode); ++i) reduced.push_back(omega * omega);
    }
    std::sort(reduced.begin(), reduced.end());
    double max_dev = 0.0;
    for (size_t i = 0; i < dense.size(); ++i)
      max_dev = std::max(max_dev, std::abs(dense[i] - reduced[i]));
    meta["oracle_max_deviation"] = max_dev;
  }
  std::vector<json> rows;
  for (const auto& [mode, omega] : modes.omega)
    rows.push_back(json{{"mode", mode},
                        {"omega_scaled", omega},
                        {"multiplicity", modes.multiplicity.at(mode)},
                        {"character", modes.character.at(mode)}});
  Sink sink(s.output_path, out);
  emit(sink, parse_format(s.format_text), meta, {"mode", "omega_scaled", "multiplicity", "character"},
       rows);
}

void cmd_energy(const CliState& s, std::ostream& out) {
  const SystemSpec spec = make_spec(s);
  const PipelineResult result = run_pipeline(spec, make_options(s));
  json meta{{"n", spec.n()},
            {"n_up", spec.n_up},
            {"n_down", spec.n_down},
            {"energy", result.energy.total_unscaled},
            {"total_scaled", result.energy.total_scaled},
            {"e_infinity_scaled", result.energy.e_infinity_scaled},
            {"harmonic_term_scaled", result.energy.harmonic_term_scaled},
            {"promoted_quanta", result.energy.promoted_quanta},
            {"occupancy", occupancy_to_json(result.selection.occupancy)},
            {"quanta_energy_scaled", result.selection.quanta_energy},
            {"from_cache", result.from_cache}};
  if (result.tuned_model.is_square_well())
    meta["depth_parameter"] = result.tuned_model.depth_parameter;
  std::vector<json> rows;
  std::vector<std::string> columns;
  if (s.harmonic_weights) {
    columns = {"term", "scaled_contribution"};
    for (const auto& [label, value] : result.energy.breakdown)
      rows.push_back(json{{"term", label}, {"scaled_contribution", value}});
  }
  Sink sink(s.output_path, out);
  emit(sink, parse_format(s.format_text), meta, columns, rows);
}

void cmd_sweep(const CliState& s, std::ostream& out) {
  if (!s.n_set) throw std::invalid_argument("sweep requires --n (range A..B or list)");
  if (s.nup_set || s.ndown_set)
    throw std::invalid_argument("conflicting fields: --n and --nup/--ndown are both set");
  CliState base = s;
  base.n_set = false;
  const SystemSpec spec_template = make_spec(base);
  const std::vector<int> n_list = parse_n_list(s.n_text);
  const std::vector<SweepRow> table = sweep(spec_template, n_list, make_options(s));

  int failed = 0;
  std::vector<json> rows;
  for (const auto& row : table) {
    if (!row.ok) ++failed;
    rows.push_back(json{{"N", row.n},
                        {"energy", row.ok ? json(row.energy.total_unscaled) : json(nullptr)},
                        {"first_difference", row.first_difference},
                        {"promoted_quanta", row.energy.promoted_quanta},
                        {"status", row.ok ? "ok" : "failed"},
                        {"error", row.error}});
  }
  if (failed == int(table.size()))
    throw std::runtime_error("sweep: every particle number failed; first error: " +
                             table.front().error);
  json meta{{"rows_total", int(table.size())}, {"rows_failed", failed}};
  Sink sink(s.output_path, out);
  emit(sink, parse_format(s.format_text), meta,
       {"N", "energy", "first_difference", "promoted_quanta", "status", "error"}, rows);
}

void cmd_spectrum(const CliState& s, std::ostream& out) {
  if (!(s.emax > 0.0)) throw std::invalid_argument("spectrum requires --emax > 0");
  const SystemSpec spec = make_spec(s);
  const PipelineResult result = run_pipeline(spec, make_options(s));
  const SpectrumEnumeration enumeration =
      enumerate_spectrum(result.minimum, result.spectrum, result.spec, s.emax);
  std::vector<json> rows;
  const double e0 = enumeration.levels.empty() ? 0.0 : enumeration.levels.front().energy;
  for (const auto& level : enumeration.levels)
    rows.push_back(json{{"energy", level.energy},
                        {"excitation", level.energy - e0},
                        {"degeneracy", level.degeneracy},
                        {"n0p", level.occupancy.n0p},
                        {"n0m", level.occupancy.n0m},
                        {"n1p", level.occupancy.n1p},
                        {"n1m", level.occupancy.n1m},
                        {"n2", level.occupancy.n2},
                        {"radial_sum", level.radial_sum},
                        {"angular_sum", level.angular_sum}});
  json meta{{"n", spec.n()},
            {"e_max", enumeration.e_max},
            {"levels", int(enumeration.levels.size())},
            {"truncated_count", enumeration.truncated_count}};
  Sink sink(s.output_path, out);
  emit(sink, parse_format(s.format_text), meta,
       {"energy", "excitation", "degeneracy", "n0p", "n0m", "n1p", "n1m", "n2", "radial_sum",
        "angular_sum"},
       rows);
}

void cmd_partition(const CliState& s, std::ostream& out) {
  if (!(s.emax > 0.0)) throw std::invalid_argument("partition requires --emax > 0");
  if (!(s.beta > 0.0)) throw std::invalid_argument("partition requires --beta > 0");
  const SystemSpec spec = make_spec(s);
  const PipelineResult result = run_pipeline(spec, make_options(s));
  const SpectrumEnumeration enumeration =
      enumerate_spectrum(result.minimum, result.spectrum, result.spec, s.emax);
  if (enumeration.levels.empty())
    throw std::runtime_error("partition: no levels below --emax " + fmt12(s.emax));
  const PartitionResult z = partition_function(enumeration.levels, s.beta);
  json meta{{"n", spec.n()},
            {"beta", s.beta},
            {"e_max", s.emax},
            {"levels", int(enumeration.levels.size())},
            {"z", z.value},
            {"tail_bound", z.tail_bound},
            {"tail_warning", z.tail_warning}};
  Sink sink(s.output_path, out);
  emit(sink, parse_format(s.format_text), meta, {}, {});
}

void cmd_extrapolate(const CliState& s, std::ostream& out) {
  if (s.r_list_text.empty())
    throw std::invalid_argument("extrapolate requires --r-list (>= 3 well radii)");
  if (s.interaction != "well")
    throw std::invalid_argument("extrapolate requires --interaction well");
  CliState base = s;
  base.radius_set = true;  // radii supplied per point
  const SystemSpec spec_template = make_spec(base);
  const ExtrapolationResult fit =
      extrapolate_zero_range(spec_template, parse_double_list(s.r_list_text), make_options(s));
  std::vector<json> rows;
  for (const auto& [r, e] : fit.points) rows.push_back(json{{"R", r}, {"energy", e}});
  json meta{{"e0", fit.e0},
            {"slope", fit.slope},
            {"residual", fit.residual},
            {"order", fit.order},
            {"monotone", fit.monotone}};
  Sink sink(s.output_path, out);
  emit(sink, parse_format(s.format_text), meta, {"R", "energy"}, rows);
}

void cmd_compare(const CliState& s, std::ostream& out) {
  if (!s.n_set) throw std::invalid_argument("compare requires --n (range A..B or list)");
  if (s.refs_path.empty()) throw std::invalid_argument("compare requires --refs FILE");
  std::vector<BenchmarkRecord> refs;
  try {
    refs = load_reference_csv(s.refs_path);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  CliState base = s;
  base.n_set = false;
  const SystemSpec spec_template = make_spec(base);
  const std::vector<SweepRow> table =
      sweep(spec_template, parse_n_list(s.n_text), make_options(s));
  const ComparisonReport report = compare(table, refs);
  std::vector<json> rows;
  for (const auto& row : report.rows)
    rows.push_back(json{{"N", row.n},
                        {"energy", row.e_computed},
                        {"energy_ref", row.e_ref},
                        {"sigma", row.sigma},
                        {"abs_dev", row.abs_dev},
                        {"rel_dev", row.rel_dev},
                        {"within_tolerance", row.within_tolerance},
                        {"source", row.source_label}});
  json meta{{"abs_tolerance", report.abs_tolerance},
            {"rel_tolerance", report.rel_tolerance},
            {"max_abs_dev", report.max_abs_dev},
            {"max_rel_dev", report.max_rel_dev},
            {"n_within", report.n_within},
            {"rows", int(report.rows.size())},
            {"deviation_grows_with_n", report.deviation_grows_with_n},
            {"empty_overlap", report.empty_overlap}};
  Sink sink(s.output_path, out);
  emit(sink, parse_format(s.format_text), meta,
       {"N", "energy", "energy_ref", "sigma", "abs_dev", "rel_dev", "within_tolerance", "source"},
       rows);
}

void cmd_cache_list(const CliState& s, std::ostream& out) {
  std::vector<json> rows;
  for (const auto& name : cache_list(s.cache_dir)) rows.push_back(json{{"entry", name}});
  json meta{{"cache_dir", s.cache_dir.empty() ? default_cache_dir() : s.cache_dir},
            {"entries", int(rows.size())}};
  Sink sink(s.output_path, out);
  emit(sink, parse_format(s.format_text), meta, {"entry"}, rows);
}

void cmd_cache_clear(const CliState& s, std::ostream& out) {
  const int removed = cache_clear(s.cache_dir);
  json meta{{"cache_dir", s.cache_dir.empty() ? default_cache_dir() : s.cache_dir},
            {"removed", removed}};
  Sink sink(s.output_path, out);
  emit(sink, parse_format(s.format_text), meta, {}, {});
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliState state;
  CLI::App app{
      "Symmetry-invariant dimensional perturbation theory for harmonically trapped fermions"};
  app.set_config("--config");
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 success, 1 argument error, 2 configuration/validation error,\n"
      "3 computation failure, 4 I/O error.");

  auto* opt_nup = app.add_option("--nup", state.nup, "Spin-up particle count")
                      ->capture_default_str();
  auto* opt_ndown = app.add_option("--ndown", state.ndown, "Spin-down particle count")
                        ->capture_default_str();
  auto* opt_n =
      app.add_option("--n", state.n_text,
                     "Total particle number (single value; range A..B or comma list for "
                     "sweep/compare); splits ceil/floor over spins");
  app.add_option("--omega", state.omega, "Trap frequency (oscillator units)")
      ->capture_default_str();
  app.add_option("--dim", state.dim, "Physical dimension the expansion is evaluated at")
      ->capture_default_str();
  app.add_option("--interaction", state.interaction, "Pair interaction: ideal, harmonic, well")
      ->capture_default_str();
  auto* opt_lambda =
      app.add_option("--lambda", state.lambda, "Harmonic pair coupling (with --interaction harmonic)");
  auto* opt_radius = app.add_option("--well-radius", state.well_radius,
                                    "Square-well radius R, oscillator units")
                         ->capture_default_str();
  auto* opt_depth = app.add_option(
      "--well-depth-parameter", state.depth_parameter,
      "Square-well depth parameter b; <= 0 tunes to unitarity (zero-energy resonance)");
  app.add_flag("--no-cache", state.no_cache, "Disable the persistent result cache");
  app.add_option("--cache-dir", state.cache_dir,
                 "Cache directory (default $SPT_CACHE_DIR or ~/.cache/spt)");
  app.add_flag("--oracle-check", state.oracle,
               "Cross-validate the symmetry-reduced eigensolve against the dense solver");
  app.add_flag("--verbose", state.verbose, "Report pipeline stages on stderr");
  app.add_option("--format", state.format_text, "Output format: table, csv, json")
      ->capture_default_str();
  app.add_option("--output", state.output_path, "Write output to a file instead of stdout");
  app.add_flag("--boson-reference", state.boson_reference,
               "Assemble with the all-zero occupancy (no exclusion constraints)");
  app.add_flag("--hw,--harmonic-weights", state.harmonic_weights,
               "Include per-mode harmonic contributions in energy output");

  struct Pending {
    void (*fn)(const CliState&, std::ostream&) = nullptr;
  } pending;
  auto arm = [&](CLI::App* sub, void (*fn)(const CliState&, std::ostream&)) {
    sub->fallthrough();
    sub->callback([&pending, fn] { pending.fn = fn; });
  };

  arm(app.add_subcommand("tune", "Tune the square well to the zero-energy resonance"), cmd_tune);
  arm(app.add_subcommand("minimize", "Locate the symmetric large-dimension minimum"),
      cmd_minimize);
  arm(app.add_subcommand("modes", "Normal-mode frequencies, multiplicities, characters"),
      cmd_modes);
  arm(app.add_subcommand("energy", "Ground-state energy through harmonic order"), cmd_energy);
  arm(app.add_subcommand("sweep", "Ground-state energies over a range of particle numbers"),
      cmd_sweep);
  auto* sub_spectrum =
      app.add_subcommand("spectrum", "Low-lying excitation spectrum with degeneracies");
  sub_spectrum->add_option("--emax", state.emax, "Upper energy cutoff (trap units)");
  arm(sub_spectrum, cmd_spectrum);
  auto* sub_partition = app.add_subcommand("partition", "Canonical partition function Z(beta)");
  sub_partition->add_option("--emax", state.emax, "Upper energy cutoff (trap units)");
  sub_partition->add_option("--beta", state.beta, "Inverse temperature (trap units)");
  arm(sub_partition, cmd_partition);
  auto* sub_extrapolate =
      app.add_subcommand("extrapolate", "Zero-range extrapolation over well radii");
  sub_extrapolate->add_option("--r-list", state.r_list_text, "Comma list of well radii (>= 3)");
  arm(sub_extrapolate, cmd_extrapolate);
  auto* sub_compare =
      app.add_subcommand("compare", "Compare sweep energies against reference data");
  sub_compare->add_option("--refs", state.refs_path, "Reference CSV (N,E_ref,sigma,source)");
  arm(sub_compare, cmd_compare);
  auto* sub_cache = app.add_subcommand("cache", "Inspect or clear the persistent cache");
  sub_cache->require_subcommand(1);
  sub_cache->fallthrough();
  arm(sub_cache->add_subcommand("list", "List cache entries"), cmd_cache_list);
  arm(sub_cache->add_subcommand("clear", "Remove all cache entries"), cmd_cache_clear);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
    state.n_set = opt_n->count() > 0;
    state.nup_set = opt_nup->count() > 0;
    state.ndown_set = opt_ndown->count() > 0;
    state.lambda_set = opt_lambda->count() > 0;
    state.radius_set = opt_radius->count() > 0;
    state.depth_set = opt_depth->count() > 0;
    if (!pending.fn) throw std::invalid_argument("no subcommand selected");
    if (state.verbose) err << "[spt] running with interaction=" << state.interaction << "\n";
    pending.fn(state, out);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace spt
