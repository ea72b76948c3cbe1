#pragma once
// Both sides of the decoupling inequalities: the small-cap decoupling ratio
//   D = ||F||_p / (sum_gamma ||P_gamma F||_p^p)^{1/p},
// its multilinear variant for transverse tuples, trivial flat decoupling over
// congruent sub-boxes, and the critical-exponent arithmetic audit.
//
// All norms are averaged norms under one shared QuadratureSpec, so lhs and
// every projected norm see identical sample points.  Caps holding a single
// unimodular-ish atom short-circuit: a one-term exponential sum has constant
// modulus |a|, so its averaged L^p norm is |a| exactly for every p.

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "smallcap/norms.hpp"
#include "smallcap/regression.hpp"
#include "smallcap/rng.hpp"
#include "smallcap/signal.hpp"

namespace smallcap {

inline double critical_p(const AlphaVector& alpha) { return 2.0 + 2.0 / alpha.weight(); }

struct DecouplingReport {
  AlphaVector alpha;
  Scale R;
  double p = 0;
  std::string family;
  double lhs = 0;
  double rhs_core = 0;
  double ratio = 0;
  double predicted_exponent = 0;
  std::string region;
  std::string mode;
  std::uint64_t seed = 0;
  bool warning = false;
};

namespace detail {
inline std::string region_name(const Region& r) {
  std::ostringstream os;
  if (r.kind == Region::Kind::ball)
    os << "ball:r=" << r.radius;
  else
    os << "box:side=" << r.side;
  return os.str();
}
inline std::string mode_name(QuadMode m) {
  switch (m) {
    case QuadMode::lattice_exact: return "lattice-exact";
    case QuadMode::uniform_grid: return "uniform-grid";
    default: return "monte-carlo";
  }
}
}  // namespace detail

// (sum over caps of ||P_gamma F||_p^p)^{1/p}; exact for <= 1 atom per cap.
inline double rhs_core_norm(const AtomicSignal& F, double p, const QuadratureSpec& quad,
                            CapKind kind = CapKind::small) {
  auto groups = group_by_cap(F, kind);
  double s = 0;
  for (const auto& [corner, g] : groups) {
    double nv;
    if (g.atoms.size() == 1) {
      nv = std::abs(g.atoms[0].amp);
    } else {
      nv = lp_norm(g, p, quad).value;
    }
    s += std::pow(nv, p);
  }
  return std::pow(s, 1.0 / p);
}

inline DecouplingReport decoupling_ratio(const AtomicSignal& F, double p,
                                         const QuadratureSpec& quad,
                                         const std::string& family = "") {
  if (F.atoms.empty()) throw std::invalid_argument("decoupling_ratio: empty signal");
  DecouplingReport rep;
  rep.alpha = F.alpha;
  rep.R = F.scale;
  rep.p = p;
  rep.family = family;
  NormResult lhs = lp_norm(F, p, quad);
  rep.lhs = lhs.value;
  rep.warning = lhs.warning;
  rep.rhs_core = rhs_core_norm(F, p, quad);
  rep.ratio = rep.lhs / rep.rhs_core;
  rep.predicted_exponent = F.alpha.weight() * (0.5 - 1.0 / p);
  rep.region = detail::region_name(quad.region);
  rep.mode = detail::mode_name(quad.mode);
  rep.seed = quad.seed;
  return rep;
}

struct CurveResult {
  FitResult fit;
  std::vector<DecouplingReport> reports;
  double predicted_exponent = 0;
  bool slope_within_bound = false;  // slope <= prediction + 0.1
};

// Quadrature policy: builds the spec for a given signal/scale.
using QuadPolicy = QuadratureSpec (*)(const AtomicSignal&, std::uint64_t seed);

inline QuadratureSpec default_quad_policy(const AtomicSignal& F, std::uint64_t seed) {
  QuadratureSpec q;
  q.mode = QuadMode::monte_carlo;
  q.samples = 30000;
  q.seed = seed;
  const int n = F.n();
  q.region = Region::ball_at(Vec(static_cast<std::size_t>(n), 0.0),
                             static_cast<double>(F.scale.R));
  return q;
}

inline CurveResult decoupling_curve(const AlphaVector& alpha, double p,
                                    const std::vector<std::uint64_t>& R_list,
                                    const std::string& family, std::uint64_t seed,
                                    QuadPolicy policy = default_quad_policy) {
  if (R_list.size() < 3)
    throw std::invalid_argument("decoupling_curve: need >= 3 scales");
  CurveResult out;
  std::vector<std::pair<double, double>> samples;
  for (std::uint64_t Rv : R_list) {
    Scale R = Scale::of(Rv);
    AtomicSignal F = family == "constant" ? synth_constant(alpha, R)
                                          : synth_random(alpha, R, seed);
    QuadratureSpec q = policy(F, seed);
    DecouplingReport rep = decoupling_ratio(F, p, q, family);
    samples.push_back({static_cast<double>(Rv), rep.ratio});
    out.reports.push_back(std::move(rep));
  }
  out.fit = fit_exponent(samples);
  out.predicted_exponent = alpha.weight() * (0.5 - 1.0 / p);
  out.slope_within_bound = out.fit.slope <= out.predicted_exponent + 0.1;
  return out;
}

struct MultilinearReport {
  double lhs = 0;        // averaged L^p norm of prod |F_i|^{1/n}
  double rhs_core = 0;   // geometric mean of per-signal cap sums
  double ratio = 0;
  double transversality = 0;
  double predicted_exponent = 0;
};

// Minimum wedge over seeded random n-tuples of atom frequencies (10^3 draws).
inline double sampled_transversality(const std::vector<AtomicSignal>& sig,
                                     std::uint64_t seed) {
  const int n = static_cast<int>(sig.size());
  CounterRng rng(seed, "multilinear/transversality");
  double best = 1e300;
  for (int draw = 0; draw < 1000; ++draw) {
    std::vector<Vec> pts;
    for (int i = 0; i < n; ++i) {
      const auto& atoms = sig[static_cast<std::size_t>(i)].atoms;
      const auto& a =
          atoms[rng.below(static_cast<std::uint64_t>(draw * n + i), atoms.size())];
      pts.emplace_back(a.xi.begin(), a.xi.end() - 1);
    }
    best = std::min(best, transversality_measure(pts));
  }
  return best;
}

inline MultilinearReport multilinear_ratio(const std::vector<AtomicSignal>& sig,
                                           double A_min, double p,
                                           const QuadratureSpec& quad,
                                           std::uint64_t seed = 0) {
  const int n = static_cast<int>(sig.size());
  if (n < 2 || sig[0].n() != n)
    throw std::invalid_argument("multilinear_ratio: need n signals in dimension n");
  MultilinearReport rep;
  rep.transversality = sampled_transversality(sig, seed);
  if (rep.transversality < A_min) {
    std::ostringstream os;
    os << "multilinear_ratio: transversality " << rep.transversality << " below A_min "
       << A_min;
    throw std::invalid_argument(os.str());
  }
  // lhs: averaged L^p of the pointwise geometric mean, on monte-carlo points
  CounterRng rng(quad.seed, "lp_norm/mc");
  const Vec blo = quad.region.bbox_lo(n);
  const double bside = quad.region.bbox_side();
  double sum = 0;
  std::uint64_t kept = 0;
  for (std::uint64_t i = 0; i < quad.samples; ++i) {
    Vec x(static_cast<std::size_t>(n));
    for (std::uint64_t trial = 0;; ++trial) {
      for (int d = 0; d < n; ++d)
        x[static_cast<std::size_t>(d)] =
            blo[static_cast<std::size_t>(d)] +
            bside * rng.uniform(i * 64 + trial * static_cast<std::uint64_t>(n) +
                                static_cast<std::uint64_t>(d));
      if (quad.region.contains(x) || trial > 50) break;
    }
    double prod = 1.0;
    for (const auto& Fi : sig) {
      cplx v(0, 0);
      for (const auto& atom : Fi.atoms) {
        double ph = 0;
        for (int d = 0; d < n; ++d)
          ph += atom.xi[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
        v += atom.amp * std::polar(1.0, 2.0 * 3.141592653589793238462643 * ph);
      }
      prod *= std::pow(std::abs(v), 1.0 / static_cast<double>(n));
    }
    sum += std::pow(prod, p);
    ++kept;
  }
  rep.lhs = std::pow(sum / static_cast<double>(kept), 1.0 / p);
  double geo = 1.0;
  for (const auto& Fi : sig)
    geo *= std::pow(rhs_core_norm(Fi, p, quad), 1.0 / static_cast<double>(n));
  rep.rhs_core = geo;
  rep.ratio = rep.lhs / rep.rhs_core;
  rep.predicted_exponent = sig[0].alpha.weight() * (0.5 - 1.0 / p);
  return rep;
}

// Trivial flat decoupling over L congruent sub-boxes of one box: compares the
// measured ratio against the count bound L^{1-2/p}.
struct FlatReport {
  double ratio = 0;
  double bound = 0;  // L^{1-2/p}
  int nonempty = 0;
};

inline FlatReport flat_decoupling_ratio(const AtomicSignal& F, const Vec& box_lo,
                                        const Vec& box_hi,
                                        const std::vector<std::int64_t>& splits,
                                        double p, const QuadratureSpec& quad) {
  const int d = F.n() - 1;  // partition acts on horizontal frequency coords
  std::int64_t L = 1;
  for (std::int64_t s : splits) L *= s;
  std::map<std::vector<std::int64_t>, AtomicSignal> parts;
  for (const auto& atom : F.atoms) {
    std::vector<std::int64_t> key;
    for (int i = 0; i < d; ++i) {
      const double lo = box_lo[static_cast<std::size_t>(i)];
      const double hi = box_hi[static_cast<std::size_t>(i)];
      const double x = atom.xi[static_cast<std::size_t>(i)];
      if (x < lo || x > hi)
        throw std::invalid_argument("flat_decoupling_ratio: atom outside box");
      const double w = (hi - lo) / static_cast<double>(splits[static_cast<std::size_t>(i)]);
      std::int64_t k = static_cast<std::int64_t>(std::floor((x - lo) / w));
      if (k >= splits[static_cast<std::size_t>(i)]) k = splits[static_cast<std::size_t>(i)] - 1;
      key.push_back(k);
    }
    auto& g = parts[key];
    if (g.atoms.empty()) {
      g.scale = F.scale;
      g.alpha = F.alpha;
      g.lattice_period = F.lattice_period;
    }
    g.atoms.push_back(atom);
  }
  double lhs = lp_norm(F, p, quad).value;
  double s = 0;
  for (const auto& [key, g] : parts) {
    double nv = g.atoms.size() == 1 ? std::abs(g.atoms[0].amp) : lp_norm(g, p, quad).value;
    s += std::pow(nv, p);
  }
  FlatReport rep;
  rep.ratio = lhs / std::pow(s, 1.0 / p);
  rep.bound = std::pow(static_cast<double>(L), 1.0 - 2.0 / p);
  rep.nonempty = static_cast<int>(parts.size());
  return rep;
}

// Section-4 exponent arithmetic: with |gamma| = R^{-|alpha|-1}, verify
//   (|alpha|+1) * 2(1/2 - 1/p)  >=  |alpha|(1/2 - 1/p) + (1 - 1/p),
// i.e. the cap-volume factor covers the decoupling loss at p <= p_c.
struct ExponentAuditRow {
  double R = 0;
  double left = 0;
  double right = 0;
  double gap = 0;
  bool pass = false;
};

inline std::vector<ExponentAuditRow> restriction_exponent_audit(
    const AlphaVector& alpha, const std::vector<std::uint64_t>& R_list, double p) {
  const double w = alpha.weight();
  std::vector<ExponentAuditRow> rows;
  for (std::uint64_t R : R_list) {
    ExponentAuditRow row;
    row.R = static_cast<double>(R);
    row.left = (w + 1.0) * 2.0 * (0.5 - 1.0 / p);
    row.right = w * (0.5 - 1.0 / p) + (1.0 - 1.0 / p);
    row.gap = row.left - row.right;
    row.pass = row.gap >= -1e-12;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace smallcap
