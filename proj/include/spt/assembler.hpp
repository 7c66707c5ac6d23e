#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spt/pauli.hpp"

namespace spt {

// Published reference energy for one particle number.
struct BenchmarkRecord {
  int n_particles = 0;
  double energy_ref = 0.0;  // hbar*omega_ho
  double uncertainty = 0.0;
  std::string source_label;
};

// CSV columns: N,E_ref,sigma,source ('#' comments allowed). Throws with the
// line number on malformed rows.
std::vector<BenchmarkRecord> load_reference_csv(const std::string& path);

struct PipelineOptions {
  bool use_cache = true;
  std::string cache_dir;      // empty -> $SPT_CACHE_DIR or ~/.cache/spt
  bool oracle_check = false;  // dense FG validation of the reduced solve
  int max_promotion = 8;      // parity-promotion search depth
  // When set, bypass Pauli selection and assemble with this occupancy
  // (e.g. the all-zero boson reference).
  std::optional<OccupancyState> occupancy_override;
};

struct PipelineResult {
  SystemSpec spec;
  ScalingFrame frame;
  InteractionModel tuned_model;  // interaction with depth parameter resolved
  SymmetricMinimum minimum;
  NormalModeSpectrum spectrum;
  GroundSelection selection;
  EnergyResult energy;
  bool from_cache = false;
};

// Scaled/unscaled harmonic-order energy for one occupancy:
//   Ebar = Ebar_inf + delta * [ sum_mu (n_mu + d_mu/2) omega_mu + v0 ].
EnergyResult assemble_energy(const SymmetricMinimum& minimum, const NormalModeSpectrum& spectrum,
                             const OccupancyState& occupancy, const ScalingFrame& frame);

// tune (square well) -> minimize -> FG patterns -> reduced eigensolve
// [-> dense spot check] -> Pauli selection (with parity promotion) ->
// assemble; persistent cache consulted for the building blocks. Failures
// carry a "stage <name>:" prefix.
PipelineResult run_pipeline(const SystemSpec& spec, const PipelineOptions& options = {});

struct SweepRow {
  int n = 0;
  EnergyResult energy;
  double first_difference = 0.0;  // E(N) - E(previous N in table); 0 for first
  bool ok = true;
  std::string error;  // failure message when !ok (sweep continues)
};

// Runs the pipeline for each N (n_up = ceil(N/2), n_down = floor(N/2)) in
// parallel; rows sorted by N with first differences attached.
std::vector<SweepRow> sweep(const SystemSpec& spec_template, const std::vector<int>& n_list,
                            const PipelineOptions& options = {});

struct ExtrapolationResult {
  double e0 = 0.0;        // zero-range intercept
  double slope = 0.0;     // leading linear coefficient
  double residual = 0.0;  // max |fit - data|
  int order = 1;          // 1, or 2 when the quadratic fallback engaged
  bool monotone = true;   // energies monotone in R
  std::vector<std::pair<double, double>> points;  // (R, E)
};

// Fits E(R) = E0 + c*R over >= 3 ranges (quadratic fallback when the linear
// residual exceeds tolerance).
ExtrapolationResult extrapolate_zero_range(const SystemSpec& spec_template,
                                           const std::vector<double>& r_list,
                                           const PipelineOptions& options = {});

struct ComparisonRow {
  int n = 0;
  double e_computed = 0.0;
  double e_ref = 0.0;
  double sigma = 0.0;
  double abs_dev = 0.0;
  double rel_dev = 0.0;
  bool within_tolerance = false;
  std::string source_label;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  double abs_tolerance = 0.3;
  double rel_tolerance = 0.05;
  double max_abs_dev = 0.0;
  double max_rel_dev = 0.0;
  int n_within = 0;
  bool deviation_grows_with_n = false;
  bool empty_overlap = true;
};

// Per-N deviations against reference records; a row is within tolerance when
// |dev| <= sigma + abs_tol + rel_tol * |E_ref|.
ComparisonReport compare(const std::vector<SweepRow>& table,
                         const std::vector<BenchmarkRecord>& references, double abs_tol = 0.3,
                         double rel_tol = 0.05);

// Cache administration.
std::string default_cache_dir();
std::vector<std::string> cache_list(const std::string& cache_dir);
int cache_clear(const std::string& cache_dir);  // returns number removed

}  // namespace spt
