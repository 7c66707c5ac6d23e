#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "spt/spectrum.hpp"

namespace spt {

// One 3D oscillator filling of both spin species. Orbitals are (nu, l, count)
// per spin; shell index n = 2*nu + l, per-spin orbital capacity 2l+1.
struct HOConfiguration {
  std::vector<std::array<int, 3>> orbitals_up;    // {nu, l, count}
  std::vector<std::array<int, 3>> orbitals_down;  // {nu, l, count}
  int radial_sum = 0;   // sum over particles of 2*nu
  int angular_sum = 0;  // sum over particles of l
  int shell_energy = 0; // sum over particles of 2*nu + l
};

// All minimal-shell-energy fillings: closed shells filled lowest-first, every
// distribution of the remaining particles over the Fermi shell's (nu, l)
// orbitals enumerated; one configuration per distinct (radial_sum,
// angular_sum).
std::vector<HOConfiguration> fill_shells(int n_up, int n_down);

// Same, but with total shell energy equal to the minimum plus extra_quanta
// (extra_quanta = 0 reduces to fill_shells). Used for excited spectra and for
// parity-obstructed ground states.
std::vector<HOConfiguration> fill_shells_promoted(int n_up, int n_down, int extra_quanta);

// (sum 2*nu_i, sum l_i): the two integer targets an admissible normal-mode
// occupancy must meet: 2(n_0- + n_1-) = first, 2(n_0+ + n_1+ + n_2) = second.
std::pair<int, int> constraint_sums(const HOConfiguration& config);

// Normal-mode occupancy (n_0+, n_0-, n_1+, n_1-, n_2).
struct OccupancyState {
  int n0p = 0, n0m = 0, n1p = 0, n1m = 0, n2 = 0;
  int get(const std::string& mode) const;
  bool operator==(const OccupancyState&) const = default;
};

struct GroundSelection {
  bool feasible = false;  // false iff every configuration has odd angular_sum
  OccupancyState occupancy;
  HOConfiguration configuration;
  double quanta_energy = 0.0;  // scaled sum n_mu * omega_mu at the optimum
};

// Minimizes sum_mu n_mu * omega_mu over all configurations and admissible
// occupancies (all radial quanta on the cheapest radial mode, all angular on
// the cheapest angular mode; ties enumerated, deterministic representative
// returned). Never rounds an odd angular_sum — reports infeasible instead.
GroundSelection select_ground_occupancy(const std::vector<HOConfiguration>& configs,
                                        const NormalModeSpectrum& spectrum);

// One excited level of the harmonic-order spectrum.
struct SpectrumLevel {
  double energy = 0.0;      // unscaled, hbar*omega_ho
  double degeneracy = 1.0;  // prod_mu C(n_mu + d_mu - 1, n_mu), exact in double
  OccupancyState occupancy;
  int radial_sum = 0;
  int angular_sum = 0;
};

struct SpectrumEnumeration {
  std::vector<SpectrumLevel> levels;  // ascending energy, deduplicated
  double e_max = 0.0;
  int truncated_count = 0;  // candidates discarded at the enumeration boundary
};

// Enumerates admissible levels with assembled energy <= e_max (promotions of
// the shell filling and all occupancy splits), attaching stars-and-bars
// degeneracies.
SpectrumEnumeration enumerate_spectrum(const SymmetricMinimum& minimum,
                                       const NormalModeSpectrum& spectrum,
                                       const SystemSpec& spec, double e_max);

struct PartitionResult {
  double value = 0.0;       // Z(beta), ground-referenced
  double tail_bound = 0.0;  // contribution of the last included level
  bool tail_warning = false;  // tail_bound > 1e-6 * value
};

PartitionResult partition_function(const std::vector<SpectrumLevel>& levels, double beta);

}  // namespace spt
