#include "spt/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spt {

namespace {

// Incremental Cholesky that reports the first failing leading minor.
void require_positive_definite(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0))
      throw std::invalid_argument(
          "gramian not positive definite: leading minor of order " + std::to_string(j + 1) +
          " is non-positive");
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
}

struct Reduced {
  double v, gr, gg, hrr, hrg, hgg;  // value, gradient, Hessian of V(r, g)
};

// Symmetric-configuration inverse-Gramian diagonal A(g) and derivatives.
struct ADerivs {
  double a, a1, a2;
};

ADerivs a_derivs(int n, double g) {
  const double num = 1.0 + (n - 2) * g;
  const double num1 = n - 2.0;
  const double den = 1.0 + (n - 2) * g - (n - 1) * g * g;
  const double den1 = (n - 2.0) - 2.0 * (n - 1) * g;
  const double den2 = -2.0 * (n - 1);
  ADerivs out;
  out.a = num / den;
  out.a1 = num1 / den - num * den1 / (den * den);
  out.a2 = (-2.0 * num1 * den1 - num * den2) / (den * den) +
           2.0 * num * den1 * den1 / (den * den * den);
  return out;
}

Reduced reduced_terms(double r, double g, int n, double weight, const InteractionModel& model) {
  const double pairs = n * (n - 1) / 2.0;
  const ADerivs A = a_derivs(n, g);
  const double r2 = r * r;
  Reduced out{};
  out.v = n * (A.a / (2.0 * r2) + 0.5 * r2);
  out.gr = n * (-A.a / (r2 * r) + r);
  out.gg = n * A.a1 / (2.0 * r2);
  out.hrr = n * (3.0 * A.a / (r2 * r2) + 1.0);
  out.hrg = -n * A.a1 / (r2 * r);
  out.hgg = n * A.a2 / (2.0 * r2);
  if (weight != 0.0 && n >= 2) {
    const double rho = r * std::sqrt(2.0 * (1.0 - g));
    const PotentialTerms p = pair_potential_derivatives(model, rho, 0.0);
    const double drho_dr = rho / r;           // rho is linear in r
    const double drho_dg = -r2 / rho;
    const double d2rho_dg2 = -r2 * r2 / (rho * rho * rho);
    const double d2rho_drdg = -r / rho;
    const double wp = weight * pairs;
    out.v += wp * p.value;
    out.gr += wp * p.first * drho_dr;
    out.gg += wp * p.first * drho_dg;
    out.hrr += wp * p.second * drho_dr * drho_dr;  // d2rho/dr2 = 0
    out.hrg += wp * (p.second * drho_dr * drho_dg + p.first * d2rho_drdg);
    out.hgg += wp * (p.second * drho_dg * drho_dg + p.first * d2rho_dg2);
  }
  return out;
}

}  // namespace

double symmetric_gramian_inverse_diagonal(int n, double g) {
  return (1.0 + (n - 2) * g) / ((1.0 - g) * (1.0 + (n - 1) * g));
}

double symmetric_gramian_inverse_offdiagonal(int n, double g) {
  return -g / ((1.0 - g) * (1.0 + (n - 1) * g));
}

Eigen::VectorXd gramian_inverse_diagonal(const Eigen::MatrixXd& gammas) {
  if (gammas.rows() != gammas.cols())
    throw std::invalid_argument("gramian_inverse_diagonal: matrix must be square");
  require_positive_definite(gammas);
  return gammas.inverse().diagonal();
}

double effective_potential(const InternalCoordinates& coords, const InteractionModel& model,
                           const SystemSpec& spec) {
  const int n = static_cast<int>(coords.radii.size());
  if (coords.gammas.rows() != n || coords.gammas.cols() != n)
    throw std::invalid_argument("effective_potential: size mismatch between radii and gammas");
  for (int i = 0; i < n; ++i)
    if (!(coords.radii[i] > 0.0))
      throw std::invalid_argument("effective_potential: radii must be positive");
  const Eigen::VectorXd inv_diag = gramian_inverse_diagonal(coords.gammas);
  double v = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r2 = coords.radii[i] * coords.radii[i];
    v += inv_diag[i] / (2.0 * r2) + 0.5 * r2;
  }
  const double w = pair_weight(spec);
  if (w != 0.0) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double ri = coords.radii[i], rj = coords.radii[j];
        const double rho =
            std::sqrt(ri * ri + rj * rj - 2.0 * ri * rj * coords.gammas(i, j));
        v += w * evaluate_pair_potential(model, rho, 0.0);
      }
    }
  }
  return v;
}

double restricted_potential(double r, double g, int n, double weight,
                            const InteractionModel& model) {
  return reduced_terms(r, g, n, weight, model).v;
}

SymmetricMinimum find_symmetric_minimum(const InteractionModel& model, const SystemSpec& spec) {
  spec.validate();
  const int n = spec.n();
  if (n < 2) throw std::invalid_argument("find_symmetric_minimum: needs N >= 2");
  const double w = pair_weight(spec);
  // Domain of the symmetric Gramian: -1/(N-1) < g < 1, r > 0.
  const double g_lo = -1.0 / (n - 1);
  auto in_domain = [&](double r, double g) {
    return r > 1e-8 && g > g_lo + 1e-12 && g < 1.0 - 1e-12;
  };

  double r = 1.0, g = 0.0;
  Reduced cur = reduced_terms(r, g, n, w, model);
  int iter = 0;
  const int max_iter = 500;
  for (; iter < max_iter; ++iter) {
    const double gnorm = std::max(std::abs(cur.gr), std::abs(cur.gg));
    if (gnorm < 1e-11) break;
    // Newton step on the 2x2 system; gradient-descent fallback when the
    // Hessian is not positive definite.
    double sr, sg;
    const double det = cur.hrr * cur.hgg - cur.hrg * cur.hrg;
    if (cur.hrr > 0.0 && det > 0.0) {
      sr = -(cur.hgg * cur.gr - cur.hrg * cur.gg) / det;
      sg = -(cur.hrr * cur.gg - cur.hrg * cur.gr) / det;
    } else {
      const double scale = 1.0 / std::max(1.0, gnorm);
      sr = -cur.gr * scale;
      sg = -cur.gg * scale;
    }
    // Inside the quadratic basin the potential is flat to roundoff, so a
    // function-value line search can only chase noise; take the raw Newton
    // step while it keeps shrinking the gradient.
    const double step_norm = std::max(std::abs(sr), std::abs(sg));
    if (cur.hrr > 0.0 && det > 0.0 && step_norm < 1e-9 * (1.0 + std::abs(r) + std::abs(g))) {
      const double rn = r + sr, gn = g + sg;
      if (!in_domain(rn, gn) || (rn == r && gn == g)) break;
      const Reduced cand = reduced_terms(rn, gn, n, w, model);
      if (std::max(std::abs(cand.gr), std::abs(cand.gg)) >= gnorm) break;
      r = rn;
      g = gn;
      cur = cand;
      continue;
    }
    double step = 1.0;
    bool moved = false;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      const double rn = r + step * sr, gn = g + step * sg;
      if (!in_domain(rn, gn)) continue;
      const Reduced cand = reduced_terms(rn, gn, n, w, model);
      const double descent = step * (cur.gr * sr + cur.gg * sg);
      if (cand.v <= cur.v + 1e-4 * descent || cand.v < cur.v) {
        if (rn == r && gn == g) {
          moved = false;  // accepted step is below the representable resolution
          break;
        }
        r = rn;
        g = gn;
        cur = cand;
        moved = true;
        break;
      }
    }
    if (!moved) {
      // No further decrease representable; accept if the gradient target is
      // already met, otherwise report the stall.
      if (std::max(std::abs(cur.gr), std::abs(cur.gg)) < 1e-10) break;
      throw std::runtime_error("find_symmetric_minimum: line search stalled at iteration " +
                               std::to_string(iter));
    }
    if (std::abs(step * sr) < 1e-13 && std::abs(step * sg) < 1e-13 &&
        std::max(std::abs(cur.gr), std::abs(cur.gg)) < 1e-10)
      break;
  }
  if (std::max(std::abs(cur.gr), std::abs(cur.gg)) >= 1e-10)
    throw std::runtime_error("find_symmetric_minimum: no convergence after " +
                             std::to_string(max_iter) + " iterations");
  const double det = cur.hrr * cur.hgg - cur.hrg * cur.hrg;
  if (!(cur.hrr > 0.0 && det > 0.0))
    throw std::runtime_error(
        "find_symmetric_minimum: stationary point is a saddle (indefinite reduced Hessian)");

  SymmetricMinimum out;
  out.r_infinity = r;
  out.gamma_infinity = g;
  out.e_infinity = cur.v;
  out.reduced_hessian << cur.hrr, cur.hrg, cur.hrg, cur.hgg;
  out.pair_weight = w;
  out.n = n;
  out.iterations = iter;
  return out;
}

}  // namespace spt
