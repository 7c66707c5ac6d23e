#include "spt/spectrum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace spt {

namespace {

int pair_count(int n) { return n * (n - 1) / 2; }

// Second derivative of the inverse-Gramian diagonal entry (Gamma^-1)_mm with
// respect to gamma_kl and gamma_pq, evaluated at the symmetric point where
// (Gamma^-1)_xy = A (x == y) or B (x != y). Both index orderings of each
// symmetric gamma coordinate contribute.
double ginv_second(int m, int k, int l, int p, int q, double a, double b) {
  auto entry = [&](int x, int y) { return x == y ? a : b; };
  const int kl[2][2] = {{k, l}, {l, k}};
  const int pq[2][2] = {{p, q}, {q, p}};
  double sum = 0.0;
  for (const auto& ab : kl) {
    for (const auto& rs : pq) {
      const int al = ab[0], be = ab[1], rh = rs[0], sg = rs[1];
      sum += entry(m, al) * entry(be, rh) * entry(sg, m);
      sum += entry(m, rh) * entry(sg, al) * entry(be, m);
    }
  }
  return sum;
}

// Sum over all particles of the centrifugal second derivative for one
// concrete (gamma_kl, gamma_pq) index tuple.
double centrifugal_gg(int n, double r, double a, double b, int k, int l, int p, int q) {
  double sum = 0.0;
  for (int m = 0; m < n; ++m) sum += ginv_second(m, k, l, p, q, a, b);
  return sum / (2.0 * r * r);
}

struct PatternVec {
  Eigen::VectorXd radial;  // size N
  Eigen::VectorXd pair;    // size P, lexicographic (i < j)
};

int pair_index(int n, int i, int j) {
  // lexicographic index of (i, j), i < j
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

struct PatternScalars {
  double a, b, c1, c2, c3, e1, e2;
};

// Applies the S_N pattern matrix to a vector in O(N^2).
PatternVec apply_pattern(const PatternScalars& s, int n, const PatternVec& v) {
  const int np = pair_count(n);
  const double sr = v.radial.sum();
  const double sp = v.pair.sum();
  Eigen::VectorXd t = Eigen::VectorXd::Zero(n);  // t_i = sum of pair entries containing i
  {
    int idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++idx) {
        t[i] += v.pair[idx];
        t[j] += v.pair[idx];
      }
  }
  PatternVec out;
  out.radial.resize(n);
  out.pair.resize(np);
  for (int i = 0; i < n; ++i)
    out.radial[i] =
        (s.a - s.b) * v.radial[i] + s.b * sr + (s.e1 - s.e2) * t[i] + s.e2 * sp;
  int idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j, ++idx) {
      const double same = v.pair[idx];
      const double share = t[i] + t[j] - 2.0 * same;
      const double disjoint = sp - t[i] - t[j] + same;
      out.pair[idx] = s.c1 * same + s.c2 * share + s.c3 * disjoint +
                      s.e1 * (v.radial[i] + v.radial[j]) +
                      s.e2 * (sr - v.radial[i] - v.radial[j]);
    }
  return out;
}

double dot(const PatternVec& x, const PatternVec& y) {
  return x.radial.dot(y.radial) + x.pair.dot(y.pair);
}

PatternScalars f_scalars(const FGPatterns& p) {
  return {p.f_a, p.f_b, p.f_c1, p.f_c2, p.f_c3, p.f_e1, p.f_e2};
}
PatternScalars g_scalars(const FGPatterns& p) {
  return {p.g_a, p.g_b, p.g_c1, p.g_c2, p.g_c3, p.g_e1, p.g_e2};
}

// One root of a 2x2 sector problem (G_s F_s) c = lambda c with its
// displacement-space coordinates c in the orthonormal sector basis.
struct SectorRoot {
  double lambda = 0.0;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
};

// Solves via Cholesky G_s = L L^T and the symmetric problem
// L^T F_s L z = lambda z; displacements are c = L z.
std::array<SectorRoot, 2> solve_sector_2x2(const Eigen::Matrix2d& fs, const Eigen::Matrix2d& gs) {
  if (!(gs(0, 0) > 0.0)) throw std::runtime_error("sector metric not positive definite");
  const double l00 = std::sqrt(gs(0, 0));
  const double l10 = gs(1, 0) / l00;
  const double d2 = gs(1, 1) - l10 * l10;
  if (!(d2 > 0.0)) throw std::runtime_error("sector metric not positive definite");
  const double l11 = std::sqrt(d2);
  Eigen::Matrix2d l;
  l << l00, 0.0, l10, l11;
  const Eigen::Matrix2d m = l.transpose() * fs * l;
  // Cancellation-free eigenvalues of the (symmetric) 2x2: mean +- disc with
  // disc^2 = ((m00 - m11)/2)^2 + m01^2. The textbook tr^2/4 - det form loses
  // half the mantissa when the roots are (near-)degenerate.
  const double mean = 0.5 * (m(0, 0) + m(1, 1));
  const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
  const double off = 0.5 * (m(0, 1) + m(1, 0));
  const double disc = std::hypot(half_diff, off);
  auto root_for = [&](double lam) {
    Eigen::Vector2d z;
    if (std::abs(off) > 1e-14 * (std::abs(m(0, 0)) + std::abs(m(1, 1)))) {
      z << off, lam - m(0, 0);
      if (z.norm() < 1e-300) z << lam - m(1, 1), off;
    } else {
      // numerically diagonal: pick the axis whose diagonal entry is closer
      z = std::abs(m(0, 0) - lam) <= std::abs(m(1, 1) - lam) ? Eigen::Vector2d(1, 0)
                                                             : Eigen::Vector2d(0, 1);
    }
    z.normalize();
    return SectorRoot{lam, l * z};
  };
  return {root_for(mean - disc), root_for(mean + disc)};
}

// Relative weight of the radial coordinate in a sector displacement.
double radial_weight(const SectorRoot& root) {
  const double denom = std::abs(root.c[0]) + std::abs(root.c[1]);
  return denom > 0.0 ? std::abs(root.c[0]) / denom : 0.0;
}

}  // namespace

int NormalModeSpectrum::total_modes() const {
  int total = 0;
  for (const auto& [mode, d] : multiplicity) total += d;
  return total;
}

JohnsonEigenvalues johnson_eigenvalues(double c1, double c2, double c3, int n) {
  if (n < 2) throw std::invalid_argument("johnson_eigenvalues: n must be >= 2");
  JohnsonEigenvalues out;
  out.sym = c1 + 2.0 * (n - 2) * c2 + (n - 2) * (n - 3) / 2.0 * c3;
  out.mixed = c1 + (n - 4) * c2 - (n - 3) * c3;
  out.pair = c1 - 2.0 * c2 + c3;
  return out;
}

FGPatterns build_fg_patterns(const SymmetricMinimum& minimum, const InteractionModel& model,
                             const SystemSpec& spec) {
  const int n = minimum.n;
  if (n != spec.n())
    throw std::invalid_argument("build_fg_patterns: minimum/spec particle-count mismatch");
  const double r = minimum.r_infinity;
  const double g = minimum.gamma_infinity;
  const double w = minimum.pair_weight;
  const double a_inv = symmetric_gramian_inverse_diagonal(n, g);
  const double b_inv = symmetric_gramian_inverse_offdiagonal(n, g);
  const double r2 = r * r, r3 = r2 * r, r4 = r2 * r2;

  FGPatterns p;
  p.n = n;
  p.r = r;
  p.gamma = g;

  // Interaction chain-rule pieces at the symmetric point.
  const double rho = r * std::sqrt(2.0 * (1.0 - g));
  const PotentialTerms pot = pair_potential_derivatives(model, rho, 0.0);
  const double dr = r * (1.0 - g) / rho;          // d rho / d r_i
  const double d2rr_same = (1.0 - dr * dr) / rho;  // d2 rho / d r_i^2
  const double d2rr_cross = (-g - dr * dr) / rho;  // d2 rho / d r_i d r_j
  const double dgam = -r2 / rho;                   // d rho / d gamma_ij
  const double d2gg = -r4 / (rho * rho * rho);
  const double d2rg = (-r - dr * dgam) / rho;

  // F: analytic second derivatives of the effective potential.
  p.f_a = 3.0 * a_inv / r4 + 1.0 + w * (n - 1) * (pot.second * dr * dr + pot.first * d2rr_same);
  p.f_b = w * (pot.second * dr * dr + pot.first * d2rr_cross);
  p.f_e1 = 2.0 * a_inv * b_inv / r3 + w * (pot.second * dr * dgam + pot.first * d2rg);
  p.f_e2 = 2.0 * b_inv * b_inv / r3;
  p.f_c1 = centrifugal_gg(n, r, a_inv, b_inv, 0, 1, 0, 1) +
           w * (pot.second * dgam * dgam + pot.first * d2gg);
  p.f_c2 = n >= 3 ? centrifugal_gg(n, r, a_inv, b_inv, 0, 1, 0, 2) : 0.0;
  p.f_c3 = n >= 4 ? centrifugal_gg(n, r, a_inv, b_inv, 0, 1, 2, 3) : 0.0;

  // G: internal-coordinate kinetic tensor (includes the 4 delta^2 prefactor).
  p.g_a = 4.0;
  p.g_b = 0.0;
  p.g_c1 = 8.0 * (1.0 - g * g) / r2;
  p.g_c2 = n >= 3 ? 4.0 * (g - g * g) / r2 : 0.0;
  p.g_c3 = 0.0;
  p.g_e1 = 0.0;
  p.g_e2 = 0.0;

  // S_N-invariance witness: the centrifugal class sums must not depend on the
  // representative index tuple.
  double residual = 0.0;
  auto spread = [&](double ref, int k, int l, int q, int s) {
    residual = std::max(residual,
                        std::abs(centrifugal_gg(n, r, a_inv, b_inv, k, l, q, s) - ref));
  };
  if (n >= 4) {
    spread(p.f_c1 - w * (pot.second * dgam * dgam + pot.first * d2gg), n - 2, n - 1, n - 2, n - 1);
    spread(p.f_c2, 1, n - 1, 2, n - 1);
    spread(p.f_c3, 0, 2, 1, 3);
  }
  if (n >= 5) {
    spread(p.f_c2, 2, 3, 3, 4);
    spread(p.f_c3, 0, 4, 1, 3);
  }
  p.residual = residual;
  if (!(residual < 1e-8))
    throw std::runtime_error("build_fg_patterns: S_N pattern residual " +
                             std::to_string(residual) + " exceeds 1e-8 (symmetry bug)");
  return p;
}

NormalModeSpectrum reduced_eigensolve(const FGPatterns& patterns, int n) {
  if (n < 2) throw std::invalid_argument("reduced_eigensolve: n must be >= 2");
  if (patterns.n != n)
    throw std::invalid_argument("reduced_eigensolve: pattern/particle-count mismatch");
  const int np = pair_count(n);
  const PatternScalars fs = f_scalars(patterns);
  const PatternScalars gs = g_scalars(patterns);

  auto zero_vec = [&]() {
    PatternVec v;
    v.radial = Eigen::VectorXd::Zero(n);
    v.pair = Eigen::VectorXd::Zero(np);
    return v;
  };
  Eigen::Matrix2d gmat_last = Eigen::Matrix2d::Identity();
  auto sector_2x2 = [&](const PatternVec& u1, const PatternVec& u2) {
    const PatternVec fu1 = apply_pattern(fs, n, u1), fu2 = apply_pattern(fs, n, u2);
    const PatternVec gu1 = apply_pattern(gs, n, u1), gu2 = apply_pattern(gs, n, u2);
    Eigen::Matrix2d fmat, gmat;
    fmat << dot(u1, fu1), dot(u1, fu2), dot(u2, fu1), dot(u2, fu2);
    gmat << dot(u1, gu1), dot(u1, gu2), dot(u2, gu1), dot(u2, gu2);
    gmat_last = gmat;
    return solve_sector_2x2(fmat, gmat);
  };
  auto sector_1x1 = [&](const PatternVec& u) {
    const double f = dot(u, apply_pattern(fs, n, u));
    const double g = dot(u, apply_pattern(gs, n, u));
    const double norm2 = dot(u, u);
    return f * g / (norm2 * norm2);
  };

  std::map<std::string, double> lambda;

  // [N] sector: uniform radial and uniform pair basis vectors. The root whose
  // displacement lies along the center-of-mass direction (radial parts
  // uniform, every pair cosine responding by 2*(1-gamma)/r per unit radial
  // motion) is the Kohn mode 0+; the orthogonal root is the breathing 0-.
  {
    PatternVec u1 = zero_vec(), u2 = zero_vec();
    u1.radial.setConstant(1.0 / std::sqrt(double(n)));
    u2.pair.setConstant(1.0 / std::sqrt(double(np)));
    const auto roots = sector_2x2(u1, u2);
    Eigen::Vector2d cm;
    cm << std::sqrt(double(n)),
        2.0 * (1.0 - patterns.gamma) / patterns.r * std::sqrt(double(np));
    // Displacements of distinct roots are orthogonal in the inverse sector
    // metric, so the overlap is measured there.
    const Eigen::Matrix2d ginv = gmat_last.inverse();
    auto cm_overlap = [&](const SectorRoot& root) {
      const double num = std::abs(root.c.dot(ginv * cm));
      const double den = std::sqrt(root.c.dot(ginv * root.c) * cm.dot(ginv * cm));
      return den > 0.0 ? num / den : 0.0;
    };
    const bool first_is_cm = cm_overlap(roots[0]) >= cm_overlap(roots[1]);
    lambda["0+"] = roots[first_is_cm ? 0 : 1].lambda;
    lambda["0-"] = roots[first_is_cm ? 1 : 0].lambda;
  }

  // [N-1,1] sector: x perpendicular to (1..1); its pair image is x_i + x_j.
  {
    PatternVec u1 = zero_vec();
    u1.radial[0] = 1.0 / std::sqrt(2.0);
    u1.radial[1] = -1.0 / std::sqrt(2.0);
    if (n == 2) {
      lambda["1-"] = sector_1x1(u1);
    } else {
      PatternVec u2 = zero_vec();
      int idx = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++idx) u2.pair[idx] = u1.radial[i] + u1.radial[j];
      u2.pair /= std::sqrt(double(n - 2));  // ||image||^2 = (N-2) ||x||^2
      const auto roots = sector_2x2(u1, u2);
      const bool first_is_radial = radial_weight(roots[0]) >= radial_weight(roots[1]);
      lambda["1-"] = roots[first_is_radial ? 0 : 1].lambda;
      lambda["1+"] = roots[first_is_radial ? 1 : 0].lambda;
    }
  }

  // [N-2,2] sector (pair space only): tetrad basis vector.
  if (n >= 4) {
    PatternVec u = zero_vec();
    u.pair[pair_index(n, 0, 1)] = 0.5;
    u.pair[pair_index(n, 2, 3)] = 0.5;
    u.pair[pair_index(n, 0, 2)] = -0.5;
    u.pair[pair_index(n, 1, 3)] = -0.5;
    lambda["2"] = sector_1x1(u);
  }

  NormalModeSpectrum spec;
  spec.n = n;
  for (const auto& [mode, lam] : lambda) {
    if (!(lam > 0.0))
      throw std::runtime_error("reduced_eigensolve: non-positive root in sector " + mode +
                               " (saddle point, lambda = " + std::to_string(lam) + ")");
    spec.omega[mode] = std::sqrt(lam);
  }
  spec.multiplicity["0+"] = 1;
  spec.multiplicity["0-"] = 1;
  spec.character["0+"] = "center-of-mass";
  spec.character["0-"] = "breathing";
  spec.multiplicity["1-"] = n - 1;
  spec.character["1-"] = "single-particle";
  if (n >= 3) {
    spec.multiplicity["1+"] = n - 1;
    spec.character["1+"] = "single-particle";
  }
  if (n >= 4) {
    spec.multiplicity["2"] = n * (n - 3) / 2;
    spec.character["2"] = "phonon";
  }
  return spec;
}

std::vector<double> full_eigensolve(const FGPatterns& patterns, int n) {
  if (n < 2) throw std::invalid_argument("full_eigensolve: n must be >= 2");
  if (n > 60) throw std::invalid_argument("full_eigensolve: dense oracle capped at n = 60");
  const int np = pair_count(n);
  const int dim = n + np;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(dim, dim);
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(np);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      f(i, j) = i == j ? patterns.f_a : patterns.f_b;
      g(i, j) = i == j ? patterns.g_a : patterns.g_b;
    }
  for (int pi = 0; pi < np; ++pi) {
    const auto [i, j] = pairs[pi];
    for (int k = 0; k < n; ++k) {
      const bool in_pair = (k == i || k == j);
      f(k, n + pi) = f(n + pi, k) = in_pair ? patterns.f_e1 : patterns.f_e2;
      g(k, n + pi) = g(n + pi, k) = in_pair ? patterns.g_e1 : patterns.g_e2;
    }
    for (int qi = 0; qi < np; ++qi) {
      const auto [k, l] = pairs[qi];
      const int shared = int(k == i) + int(k == j) + int(l == i) + int(l == j);
      const double fv = shared == 2 ? patterns.f_c1 : (shared == 1 ? patterns.f_c2 : patterns.f_c3);
      const double gv = shared == 2 ? patterns.g_c1 : (shared == 1 ? patterns.g_c2 : patterns.g_c3);
      f(n + pi, n + qi) = fv;
      g(n + pi, n + qi) = gv;
    }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.compute(f, g, Eigen::EigenvaluesOnly | Eigen::BAx_lx);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("full_eigensolve: dense generalized eigensolver failed");
  std::vector<double> out(solver.eigenvalues().data(), solver.eigenvalues().data() + dim);
  std::sort(out.begin(), out.end());
  return out;
}

double compute_v0(const SymmetricMinimum& minimum, const FGPatterns& patterns,
                  const SystemSpec& spec) {
  const int n = minimum.n;
  if (patterns.n != n) throw std::invalid_argument("compute_v0: pattern/minimum mismatch");
  const double r = minimum.r_infinity;
  const double g = minimum.gamma_infinity;
  const double r2 = r * r;
  const double a_inv = symmetric_gramian_inverse_diagonal(n, g);
  const double b_inv = symmetric_gramian_inverse_offdiagonal(n, g);
  const double np = pair_count(n);

  // Scalar similarity-transform remainder of the scaled kinetic operator,
  // exactly quadratic in the dimension D; evaluated at D = -1, 0, 1 at the
  // symmetric point. Metric entries: g_rr = 1, same-pair 2(1-g^2)/r^2,
  // share-one (g - g^2)/r^2 (zero otherwise).
  const double c1g = 2.0 * (1.0 - g * g) / r2;
  const double c2g = (g - g * g) / r2;
  const double share_count = 2.0 * np * (n - 2);  // ordered pairs-of-pairs sharing one index
  auto u_of_d = [&](double d) {
    const double lr = (d - 1.0) / r;
    const double lg = (d - n - 1.0) * b_inv;
    const double hr = (d - 1.0) / r;
    const double hg = -(d - 1.0) * g * 2.0 / r2;
    const double dl_same = -(d - n - 1.0) * (a_inv * a_inv + b_inv * b_inv);
    const double dl_share = -(d - n - 1.0) * (a_inv * b_inv + b_inv * b_inv);
    const double term1 =
        -0.125 * (n * lr * lr + lg * lg * (np * c1g + share_count * c2g));
    const double term2 =
        0.25 * (-n * (d - 1.0) / r2 + np * c1g * dl_same + share_count * c2g * dl_share);
    const double term3 = 0.25 * (n * hr * lr + np * hg * lg);
    return term1 + term2 + term3;
  };
  const double u_plus = u_of_d(1.0), u_minus = u_of_d(-1.0), u_zero = u_of_d(0.0);
  const double u1 = 0.5 * (u_plus - u_minus);
  const double u2 = 0.5 * (u_plus + u_minus) - u_zero;

  // Structural cross-check: the quadratic coefficient must reproduce the
  // centrifugal term of the effective potential.
  const double centrifugal = n * a_inv / (2.0 * r2);
  if (std::abs(4.0 * u2 - centrifugal) > 1e-9 * std::max(1.0, std::abs(centrifugal)))
    throw std::runtime_error("compute_v0: quadratic-extraction cross-check failed");

  const double rho = r * std::sqrt(2.0 * (1.0 - g));
  const double slope = pair_potential_delta_slope(spec.interaction, rho);
  return 4.0 * u1 + minimum.pair_weight * np * slope;
}

}  // namespace spt
