#include "spt/pauli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "spt/model.hpp"

namespace spt {

namespace {

struct Orbital {
  int nu = 0;
  int l = 0;
  int shell() const { return 2 * nu + l; }
  int capacity() const { return 2 * l + 1; }  // per spin species
};

// All (nu, l) orbitals with shell index <= n_max, ordered by shell then l.
std::vector<Orbital> orbital_list(int n_max) {
  std::vector<Orbital> out;
  for (int n = 0; n <= n_max; ++n)
    for (int l = n % 2; l <= n; l += 2) out.push_back({(n - l) / 2, l});
  return out;
}

// Minimal total shell quanta for ns same-spin fermions (closed shells
// lowest-first, shell capacity (n+1)(n+2)/2).
int minimal_quanta(int ns) {
  int left = ns, quanta = 0;
  for (int n = 0; left > 0; ++n) {
    const int cap = (n + 1) * (n + 2) / 2;
    const int take = std::min(left, cap);
    quanta += n * take;
    left -= take;
  }
  return quanta;
}

// Highest shell touched by the minimal filling.
int fermi_shell(int ns) {
  int left = ns;
  for (int n = 0;; ++n) {
    const int cap = (n + 1) * (n + 2) / 2;
    if (left <= cap) return n;
    left -= cap;
  }
}

struct SpinFilling {
  std::vector<std::array<int, 3>> orbitals;  // {nu, l, count}
  int radial_sum = 0;                        // sum of 2*nu
  int angular_sum = 0;                       // sum of l
};

// All fillings of ns same-spin fermions with total shell quanta equal to
// minimal_quanta(ns) + extra, one representative per distinct
// (radial_sum, angular_sum).
std::vector<SpinFilling> spin_fillings(int ns, int extra) {
  std::vector<SpinFilling> out;
  if (ns == 0) {
    if (extra == 0) out.push_back({});
    return out;
  }
  const int target = minimal_quanta(ns) + extra;
  const int n_max = fermi_shell(ns) + extra;
  const std::vector<Orbital> orbitals = orbital_list(n_max);
  // Suffix capacity for the fit prune.
  std::vector<int> suffix_cap(orbitals.size() + 1, 0);
  for (int i = int(orbitals.size()) - 1; i >= 0; --i)
    suffix_cap[i] = suffix_cap[i + 1] + orbitals[i].capacity();

  std::set<std::pair<int, int>> seen;
  std::vector<std::array<int, 3>> current;
  std::function<void(int, int, int, int, int)> rec = [&](int idx, int left, int quanta_left,
                                                         int radial, int angular) {
    if (left == 0) {
      if (quanta_left == 0 && seen.insert({radial, angular}).second)
        out.push_back({current, radial, angular});
      return;
    }
    if (idx == int(orbitals.size())) return;
    if (suffix_cap[idx] < left) return;
    // Orbitals are shell-ordered: every remaining particle costs at least
    // the current shell.
    if (left * orbitals[idx].shell() > quanta_left) return;
    const Orbital& orb = orbitals[idx];
    const int max_take = std::min(left, orb.capacity());
    for (int take = max_take; take >= 0; --take) {
      const int cost = take * orb.shell();
      if (cost > quanta_left) continue;
      if (take > 0) current.push_back({orb.nu, orb.l, take});
      rec(idx + 1, left - take, quanta_left - cost, radial + 2 * orb.nu * take,
          angular + orb.l * take);
      if (take > 0) current.pop_back();
    }
  };
  rec(0, ns, target, 0, 0);
  return out;
}

double binomial(int top, int bottom) {
  // C(top, bottom) exactly representable products for the sizes used here
  double result = 1.0;
  for (int i = 1; i <= bottom; ++i) result = result * double(top - bottom + i) / double(i);
  return result;
}

// Energy of one occupancy at harmonic order (unscaled, hbar*omega_ho units):
// unscale( E_infinity + delta * (sum_mu (n_mu + d_mu/2) omega_mu + v0) ).
double level_energy(const SymmetricMinimum& minimum, const NormalModeSpectrum& modes,
                    const OccupancyState& occ, const ScalingFrame& frame) {
  double quanta = 0.0;
  for (const auto& [mode, omega] : modes.omega) {
    const double d = modes.multiplicity.at(mode);
    quanta += (occ.get(mode) + d / 2.0) * omega;
  }
  const double scaled = minimum.e_infinity + frame.delta * (quanta + modes.v0);
  return unscale_energy(scaled, frame);
}

}  // namespace

std::vector<HOConfiguration> fill_shells_promoted(int n_up, int n_down, int extra_quanta) {
  if (n_up < 0 || n_down < 0 || n_up + n_down < 1)
    throw std::invalid_argument("fill_shells_promoted: need at least one particle");
  if (extra_quanta < 0)
    throw std::invalid_argument("fill_shells_promoted: extra_quanta must be >= 0");
  std::vector<HOConfiguration> out;
  std::set<std::pair<int, int>> seen;
  for (int extra_up = 0; extra_up <= extra_quanta; ++extra_up) {
    const int extra_down = extra_quanta - extra_up;
    const auto ups = spin_fillings(n_up, extra_up);
    if (ups.empty()) continue;
    const auto downs = spin_fillings(n_down, extra_down);
    for (const auto& u : ups)
      for (const auto& d : downs) {
        HOConfiguration cfg;
        cfg.orbitals_up = u.orbitals;
        cfg.orbitals_down = d.orbitals;
        cfg.radial_sum = u.radial_sum + d.radial_sum;
        cfg.angular_sum = u.angular_sum + d.angular_sum;
        cfg.shell_energy = cfg.radial_sum + cfg.angular_sum;
        if (seen.insert({cfg.radial_sum, cfg.angular_sum}).second) out.push_back(cfg);
      }
  }
  std::sort(out.begin(), out.end(), [](const HOConfiguration& a, const HOConfiguration& b) {
    return std::tie(a.radial_sum, a.angular_sum) < std::tie(b.radial_sum, b.angular_sum);
  });
  return out;
}

std::vector<HOConfiguration> fill_shells(int n_up, int n_down) {
  return fill_shells_promoted(n_up, n_down, 0);
}

std::pair<int, int> constraint_sums(const HOConfiguration& config) {
  return {config.radial_sum, config.angular_sum};
}

int OccupancyState::get(const std::string& mode) const {
  if (mode == "0+") return n0p;
  if (mode == "0-") return n0m;
  if (mode == "1+") return n1p;
  if (mode == "1-") return n1m;
  if (mode == "2") return n2;
  throw std::invalid_argument("OccupancyState::get: unknown mode label '" + mode + "'");
}

GroundSelection select_ground_occupancy(const std::vector<HOConfiguration>& configs,
                                        const NormalModeSpectrum& spectrum) {
  // Cheapest mode per family, preferring the earlier label on ties.
  auto cheapest = [&](const std::vector<std::string>& family) {
    std::string best;
    double best_omega = std::numeric_limits<double>::infinity();
    for (const auto& mode : family) {
      auto it = spectrum.omega.find(mode);
      if (it == spectrum.omega.end()) continue;
      if (it->second < best_omega * (1.0 - 1e-9)) {
        best = mode;
        best_omega = it->second;
      }
    }
    if (best.empty()) throw std::runtime_error("select_ground_occupancy: empty mode family");
    return std::make_pair(best, best_omega);
  };
  const auto [radial_mode, radial_omega] = cheapest({"0-", "1-"});
  const auto [angular_mode, angular_omega] = cheapest({"0+", "1+", "2"});

  GroundSelection sel;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& cfg : configs) {
    if (cfg.angular_sum % 2 != 0) continue;  // odd parity cannot carry L = 0
    if (cfg.radial_sum % 2 != 0)
      throw std::runtime_error("select_ground_occupancy: odd radial quanta sum");
    const int kr = cfg.radial_sum / 2;
    const int ka = cfg.angular_sum / 2;
    const double cost = kr * radial_omega + ka * angular_omega;
    // Strict improvement beyond tolerance; ties keep the earlier (sorted)
    // configuration for determinism.
    if (sel.feasible && !(cost < best - 1e-9 * std::max(1.0, best))) continue;
    {
      best = cost;
      sel.feasible = true;
      sel.configuration = cfg;
      sel.quanta_energy = cost;
      OccupancyState occ;
      if (radial_mode == "0-") occ.n0m = kr; else occ.n1m = kr;
      if (angular_mode == "0+") occ.n0p = ka;
      else if (angular_mode == "1+") occ.n1p = ka;
      else occ.n2 = ka;
      sel.occupancy = occ;
    }
  }
  return sel;
}

SpectrumEnumeration enumerate_spectrum(const SymmetricMinimum& minimum,
                                       const NormalModeSpectrum& spectrum,
                                       const SystemSpec& spec, double e_max) {
  if (!(e_max > 0.0)) throw std::invalid_argument("enumerate_spectrum: e_max must be > 0");
  const ScalingFrame frame = build_scaling_frame(spec.dimension_target, spec.trap_frequency);
  SpectrumEnumeration out;
  out.e_max = e_max;

  std::vector<std::string> radial_modes, angular_modes;
  for (const char* m : {"0-", "1-"})
    if (spectrum.omega.count(m)) radial_modes.push_back(m);
  for (const char* m : {"0+", "1+", "2"})
    if (spectrum.omega.count(m)) angular_modes.push_back(m);
  double omega_min = std::numeric_limits<double>::infinity();
  for (const auto& [mode, omega] : spectrum.omega) omega_min = std::min(omega_min, omega);

  std::set<std::tuple<int, int, int, int, int>> seen;
  auto add_level = [&](const OccupancyState& occ, const HOConfiguration& cfg) {
    const double energy = level_energy(minimum, spectrum, occ, frame);
    if (energy > e_max) {
      ++out.truncated_count;
      return;
    }
    if (!seen.insert({occ.n0p, occ.n0m, occ.n1p, occ.n1m, occ.n2}).second) return;
    SpectrumLevel level;
    level.energy = energy;
    level.occupancy = occ;
    level.radial_sum = cfg.radial_sum;
    level.angular_sum = cfg.angular_sum;
    level.degeneracy = 1.0;
    for (const auto& [mode, d] : spectrum.multiplicity)
      level.degeneracy *= binomial(occ.get(mode) + d - 1, occ.get(mode));
    out.levels.push_back(level);
  };

  const int minimal = minimal_quanta(spec.n_up) + minimal_quanta(spec.n_down);
  const OccupancyState vacuum;
  const double floor_energy = level_energy(minimum, spectrum, vacuum, frame);
  constexpr int kTierCap = 400;
  for (int tier = 0; tier <= kTierCap; ++tier) {
    // Lower bound on the energy any tier-`tier` level can have: the vacuum
    // floor plus (minimal + tier)/2 quanta at the cheapest mode frequency.
    const double tier_floor =
        floor_energy +
        unscale_energy(frame.delta * (minimal + tier) / 2.0 * omega_min, frame);
    if (tier_floor > e_max && tier > 0) break;
    for (const HOConfiguration& cfg : fill_shells_promoted(spec.n_up, spec.n_down, tier)) {
      if (cfg.angular_sum % 2 != 0) continue;
      const int kr = cfg.radial_sum / 2;
      const int ka = cfg.angular_sum / 2;
      // All splits of kr over the radial modes and ka over the angular modes.
      for (int r0 = 0; r0 <= kr; ++r0) {
        OccupancyState occ;
        const int r1 = kr - r0;
        occ.n0m = r0;
        if (radial_modes.size() > 1) occ.n1m = r1;
        else if (r1 > 0) continue;
        for (int a0 = 0; a0 <= ka; ++a0)
          for (int a1 = 0; a1 <= ka - a0; ++a1) {
            const int a2 = ka - a0 - a1;
            occ.n0p = a0;
            occ.n1p = 0;
            occ.n2 = 0;
            if (angular_modes.size() > 1) occ.n1p = a1;
            else if (a1 > 0) continue;
            if (angular_modes.size() > 2) occ.n2 = a2;
            else if (a2 > 0) continue;
            add_level(occ, cfg);
          }
      }
    }
  }
  std::sort(out.levels.begin(), out.levels.end(),
            [](const SpectrumLevel& a, const SpectrumLevel& b) {
              if (a.energy != b.energy) return a.energy < b.energy;
              return std::make_tuple(a.occupancy.n0p, a.occupancy.n0m, a.occupancy.n1p,
                                     a.occupancy.n1m, a.occupancy.n2) <
                     std::make_tuple(b.occupancy.n0p, b.occupancy.n0m, b.occupancy.n1p,
                                     b.occupancy.n1m, b.occupancy.n2);
            });
  return out;
}

PartitionResult partition_function(const std::vector<SpectrumLevel>& levels, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("partition_function: beta must be > 0");
  if (levels.empty()) throw std::invalid_argument("partition_function: no levels");
  double e0 = std::numeric_limits<double>::infinity();
  for (const auto& level : levels) e0 = std::min(e0, level.energy);
  PartitionResult out;
  double last_term = 0.0;
  double last_energy = -std::numeric_limits<double>::infinity();
  for (const auto& level : levels) {
    const double term = level.degeneracy * std::exp(-beta * (level.energy - e0));
    out.value += term;
    if (level.energy >= last_energy) {
      last_energy = level.energy;
      last_term = term;
    }
  }
  out.tail_bound = last_term;
  out.tail_warning = out.tail_bound > 1e-6 * out.value;
  return out;
}

}  // namespace spt
