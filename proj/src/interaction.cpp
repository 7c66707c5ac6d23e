#include "spt/interaction.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace spt {

namespace {

constexpr double kThird = 1.0 / 3.0;
// Scaled length unit at D = 3 (omega = 1): rbar = r / sqrt(3/2).
const double kLengthUnit3 = std::sqrt(1.5);
// Scaled energy factor at D = 3: Ebar = (2/3) E.
constexpr double kKappa3 = 2.0 / 3.0;

void check_delta(double delta) {
  if (delta < 0.0 || delta > kThird)
    throw std::invalid_argument(
        "evaluate_pair_potential: continued well requires 0 <= delta <= 1/3");
}

}  // namespace

InteractionModel InteractionModel::non_interacting() { return {}; }

InteractionModel InteractionModel::harmonic_pair(double lambda) {
  InteractionModel m;
  m.kind = InteractionKind::HarmonicPair;
  m.lambda = lambda;
  return m;
}

InteractionModel InteractionModel::square_well(double range, double depth_parameter) {
  if (!(range > 0.0))
    throw std::invalid_argument("InteractionModel: square-well range must be > 0");
  InteractionModel m;
  m.kind = InteractionKind::SquareWellContinued;
  m.range = range;
  m.depth_parameter = depth_parameter;
  return m;
}

InteractionModel InteractionModel::unitary_well(double range) {
  return square_well(range, tune_unitarity(range).depth_parameter);
}

double InteractionModel::scaled_depth() const {
  if (!is_square_well() || depth_parameter <= 1.0) return 0.0;
  return 2.0 / (depth_parameter - 1.0);
}

double InteractionModel::scaled_range() const { return range / kLengthUnit3; }

std::string InteractionModel::fingerprint() const {
  char buf[128];
  switch (kind) {
    case InteractionKind::NonInteracting:
      return "ideal";
    case InteractionKind::HarmonicPair:
      std::snprintf(buf, sizeof buf, "harmonic_l%.17g", lambda);
      return buf;
    case InteractionKind::SquareWellContinued:
      std::snprintf(buf, sizeof buf, "well_r%.17g_b%.17g", range, depth_parameter);
      return buf;
  }
  return "unknown";
}

double evaluate_pair_potential(const InteractionModel& model, double r, double delta) {
  return pair_potential_derivatives(model, r, delta).value;
}

PotentialTerms pair_potential_derivatives(const InteractionModel& model, double r, double delta) {
  PotentialTerms out;
  switch (model.kind) {
    case InteractionKind::NonInteracting:
      return out;
    case InteractionKind::HarmonicPair:
      out.value = 0.5 * model.lambda * r * r;
      out.first = model.lambda * r;
      out.second = model.lambda;
      return out;
    case InteractionKind::SquareWellContinued: {
      check_delta(delta);
      const double b = model.depth_parameter;
      const double vbar_d = model.scaled_depth();
      const double rbar_well = model.scaled_range();
      if (delta == kThird) {
        // Exact endpoint: attractive well of scaled depth vbar_d.
        out.value = r < rbar_well ? -vbar_d : 0.0;
        return out;
      }
      const double v0 = -0.5 * vbar_d * (1.0 - b) / (1.0 - 3.0 * b * delta);
      const double width = 1.0 - 3.0 * delta;
      const double u = (r - 3.0 * delta * rbar_well) / width;
      const double t = std::tanh(u);
      const double sech2 = 1.0 - t * t;
      out.value = v0 * (1.0 - t);
      out.first = -v0 * sech2 / width;
      out.second = 2.0 * v0 * t * sech2 / (width * width);
      return out;
    }
  }
  return out;
}

double pair_potential_delta_slope(const InteractionModel& model, double r) {
  switch (model.kind) {
    case InteractionKind::NonInteracting:
    case InteractionKind::HarmonicPair:
      return 0.0;
    case InteractionKind::SquareWellContinued: {
      const double b = model.depth_parameter;
      const double vbar_d = model.scaled_depth();
      const double rbar_well = model.scaled_range();
      const double v0 = -0.5 * vbar_d * (1.0 - b);  // V0 at delta = 0
      const double t = std::tanh(r);
      const double sech2 = 1.0 - t * t;
      // d/d delta at delta = 0 of V0(delta) [1 - tanh((r - 3 delta Rbar)/(1 - 3 delta))]:
      //   V0'(0) = 3 b V0(0);  argument slope = 3 (r - Rbar).
      return 3.0 * b * v0 * (1.0 - t) - 3.0 * v0 * (r - rbar_well) * sech2;
    }
  }
  return 0.0;
}

ScatteringResult compute_scattering_length(double v_depth, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("compute_scattering_length: R must be > 0");
  if (v_depth < 0.0)
    throw std::invalid_argument("compute_scattering_length: v_depth must be >= 0");
  ScatteringResult res;
  res.method = "closed-form";
  if (v_depth == 0.0) return res;
  const double k = std::sqrt(v_depth);  // reduced mass m/2: k^2 = v_depth
  const double kr = k * R;
  res.scattering_length = R * (1.0 - std::tan(kr) / kr);
  res.inverse_scattering_length =
      res.scattering_length != 0.0 ? 1.0 / res.scattering_length : 0.0;
  res.near_resonance = std::abs(res.inverse_scattering_length) < 1e-8;
  return res;
}

ScatteringResult integrate_scattering_length(double v_depth, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("integrate_scattering_length: R must be > 0");
  ScatteringResult res;
  res.method = "numerical-integration";
  if (v_depth == 0.0) return res;
  // Zero-energy radial equation u'' = -v u with v = v_depth inside the well
  // and 0 outside; u(0) = 0, u'(0) = 1. Fixed-step RK4 with step R/2000,
  // integrating each region with its constant potential (the discontinuity at
  // r = R is a step boundary, never sampled inside a step), continued to the
  // matching point 2R, where u is exactly linear: u(r) = u'(2R) (r - a_s).
  const int steps_per_region = 2000;
  double u = 0.0, up = 1.0;
  auto rk4_span = [&](double v, double length) {
    const double h = length / steps_per_region;
    for (int i = 0; i < steps_per_region; ++i) {
      // y = (u, u'), y' = (u', -v u)
      const double k1u = up, k1p = -v * u;
      const double k2u = up + 0.5 * h * k1p, k2p = -v * (u + 0.5 * h * k1u);
      const double k3u = up + 0.5 * h * k2p, k3p = -v * (u + 0.5 * h * k2u);
      const double k4u = up + h * k3p, k4p = -v * (u + h * k3u);
      u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
      up += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
    }
  };
  rk4_span(v_depth, R);
  rk4_span(0.0, R);
  if (up == 0.0) {
    // u' vanishing at the matching point: a_s = -inf; report reciprocal 0.
    res.scattering_length = -std::numeric_limits<double>::infinity();
    res.inverse_scattering_length = 0.0;
    res.near_resonance = true;
    return res;
  }
  res.scattering_length = 2.0 * R - u / up;
  res.inverse_scattering_length =
      res.scattering_length != 0.0 ? 1.0 / res.scattering_length : 0.0;
  res.near_resonance = std::abs(res.inverse_scattering_length) < 1e-8;
  return res;
}

TuneResult tune_unitarity(double R) {
  if (!(R > 0.0)) throw std::invalid_argument("tune_unitarity: R must be > 0");
  // First resonance sits at k R = pi/2; bracket it and bisect on 1/a_s,
  // which crosses zero continuously (negative below, positive above).
  auto inv_a = [&](double v) { return compute_scattering_length(v, R).inverse_scattering_length; };
  const double kr_lo = M_PI / 2.0 - 0.3, kr_hi = M_PI / 2.0 + 0.3;
  double lo = kr_lo * kr_lo / (R * R), hi = kr_hi * kr_hi / (R * R);
  double f_lo = inv_a(lo), f_hi = inv_a(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0))
    throw std::runtime_error("tune_unitarity: bisection bracket failure on v in [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "]");
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (inv_a(mid) < 0.0 ? lo : hi) = mid;
  }
  TuneResult out;
  out.v_depth = 0.5 * (lo + hi);
  out.inverse_scattering_length = inv_a(out.v_depth);
  if (std::abs(out.inverse_scattering_length) > 1e-10)
    throw std::runtime_error("tune_unitarity: residual |1/a_s| above 1e-10");
  // Depth parameter of the continued family: scaled depth vbar_d = (2/3) v_depth,
  // b = 1 + 2/vbar_d.
  out.depth_parameter = 1.0 + 2.0 / (kKappa3 * out.v_depth);
  return out;
}

}  // namespace spt
