#pragma once
// Test functions as finite atomic frequency measures
//   F(x) = sum_j a_j e(xi_j . x),  e(t) = e^{2 pi i t},
// with every atom inside the R^{-1}-neighborhood of the paraboloid.
// Projections onto caps are exact sub-sums, so Parseval-type checks carry no
// filtering error.

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "smallcap/fft.hpp"
#include "smallcap/geometry.hpp"
#include "smallcap/parallel.hpp"
#include "smallcap/rng.hpp"

namespace smallcap {

struct FrequencyAtom {
  Vec xi;
  cplx amp;
};

struct AtomicSignal {
  std::vector<FrequencyAtom> atoms;
  Scale scale;
  AlphaVector alpha;
  // Set when all atom frequencies lie on (1/Q) Z^n; the period box has side Q.
  std::optional<double> lattice_period;

  int n() const { return alpha.n; }
  double sum_sq_amp() const {
    double s = 0;
    for (const auto& a : atoms) s += std::norm(a.amp);
    return s;
  }
};

namespace detail {
inline std::int64_t lcm64(std::int64_t a, std::int64_t b) {
  std::int64_t g = a, h = b;
  while (h) {
    std::int64_t t = g % h;
    g = h;
    h = t;
  }
  return a / g * b;
}
}  // namespace detail

// One unimodular atom per cap, at the paraboloid lift of the cap's corner
// lattice point ("all coefficients equal to 1").  Frequencies lie on the
// lattice (1/Q) Z^n with Q = lcm(m_i)^2.
inline AtomicSignal synth_constant(const AlphaVector& alpha, const Scale& R) {
  CapCollection caps = enumerate_caps(alpha, R, CapKind::small);
  AtomicSignal F;
  F.scale = R;
  F.alpha = alpha;
  std::int64_t L = 1;
  for (std::int64_t m : caps.caps.front().m) L = detail::lcm64(L, m);
  F.lattice_period = static_cast<double>(L) * static_cast<double>(L);
  for (const Cap& cap : caps.caps) {
    FrequencyAtom atom;
    double s = 0;
    for (int i = 0; i < alpha.n - 1; ++i) {
      double x = cap.lo(i);
      atom.xi.push_back(x);
      s += x * x;
    }
    atom.xi.push_back(s);
    atom.amp = cplx(1.0, 0.0);
    F.atoms.push_back(std::move(atom));
  }
  return F;
}

// per_cap atoms per cap: uniform horizontal position inside the cap's box,
// lifted to the paraboloid, unimodular random phase.  Deterministic in seed.
inline AtomicSignal synth_random(const AlphaVector& alpha, const Scale& R,
                                 std::uint64_t seed, int per_cap = 1) {
  if (per_cap < 1) throw std::invalid_argument("synth_random: per_cap >= 1");
  CapCollection caps = enumerate_caps(alpha, R, CapKind::small);
  CounterRng pos(seed, "synth_random/pos");
  CounterRng phase(seed, "synth_random/phase");
  AtomicSignal F;
  F.scale = R;
  F.alpha = alpha;
  std::uint64_t ctr = 0;
  for (const Cap& cap : caps.caps) {
    for (int k = 0; k < per_cap; ++k) {
      FrequencyAtom atom;
      double s = 0;
      for (int i = 0; i < alpha.n - 1; ++i) {
        double x = pos.uniform(ctr * 8 + static_cast<std::uint64_t>(i), cap.lo(i), cap.hi(i));
        atom.xi.push_back(x);
        s += x * x;
      }
      atom.xi.push_back(s);
      double ph = phase.uniform(ctr, 0.0, 1.0);
      atom.amp = std::polar(1.0, 2.0 * 3.141592653589793238462643 * ph);
      F.atoms.push_back(std::move(atom));
      ++ctr;
    }
  }
  return F;
}

// Exact sub-sum of atoms lying in `cap` (half-open box membership of the
// horizontal coordinates).
inline AtomicSignal project(const AtomicSignal& F, const Cap& cap) {
  AtomicSignal out;
  out.scale = F.scale;
  out.alpha = F.alpha;
  out.lattice_period = F.lattice_period;
  for (const auto& atom : F.atoms) {
    Vec h(atom.xi.begin(), atom.xi.end() - 1);
    bool inside = true;
    for (int i = 0; i < cap.n() - 1 && inside; ++i) {
      double x = h[static_cast<std::size_t>(i)];
      // clamp the closed upper boundary at +1 into the last cap
      if (x == 1.0 && cap.corner[static_cast<std::size_t>(i)] ==
                          cap.m[static_cast<std::size_t>(i)] - 1)
        continue;
      if (x < cap.lo(i) || x >= cap.hi(i)) inside = false;
    }
    if (inside) out.atoms.push_back(atom);
  }
  return out;
}

// Groups atoms by their containing cap without enumerating the full family.
// Binning uses the horizontal lattice only (no neighborhood precondition), so
// modulated/translated copies of a signal group consistently.
inline std::map<std::vector<std::int64_t>, AtomicSignal> group_by_cap(
    const AtomicSignal& F, CapKind kind = CapKind::small) {
  const AlphaVector a =
      kind == CapKind::canonical ? AlphaVector::canonical(F.alpha.n) : F.alpha;
  const CapGrid grid = CapGrid::of(a, F.scale);
  std::map<std::vector<std::int64_t>, AtomicSignal> groups;
  for (const auto& atom : F.atoms) {
    std::vector<std::int64_t> corner;
    for (int i = 0; i < a.n - 1; ++i) {
      const double mi = static_cast<double>(grid.m[static_cast<std::size_t>(i)]);
      const double x = atom.xi[static_cast<std::size_t>(i)];
      std::int64_t c = static_cast<std::int64_t>(std::floor(x * mi));
      if (x == 1.0) c = grid.m[static_cast<std::size_t>(i)] - 1;  // closed upper face
      corner.push_back(c);
    }
    auto& g = groups[corner];
    if (g.atoms.empty()) {
      g.scale = F.scale;
      g.alpha = F.alpha;
      g.lattice_period = F.lattice_period;
    }
    g.atoms.push_back(atom);
  }
  return groups;
}

// Direct evaluation F(x) = sum_j a_j e(xi_j . x); deterministic chunked
// parallelism over points.
inline std::vector<cplx> evaluate(const AtomicSignal& F, const std::vector<Vec>& points) {
  std::vector<cplx> out(points.size(), cplx(0, 0));
  const int n = F.n();
  chunked_for(points.size(), 1024, [&](std::uint64_t b, std::uint64_t e) {
    for (std::uint64_t i = b; i < e; ++i) {
      const Vec& x = points[i];
      cplx acc(0, 0);
      for (const auto& atom : F.atoms) {
        double ph = 0;
        for (int d = 0; d < n; ++d)
          ph += atom.xi[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
        acc += atom.amp * std::polar(1.0, 2.0 * 3.141592653589793238462643 * ph);
      }
      out[i] = acc;
    }
  });
  return out;
}

// Uniform grid over a box: G points per dimension, x = lo + (j + 1/2) * h.
struct GridSpec {
  Vec lo;
  double side = 0;   // box side length (same per dimension)
  std::size_t G = 0; // points per dimension
  double spacing() const { return side / static_cast<double>(G); }
  std::size_t total(int n) const {
    std::size_t t = 1;
    for (int d = 0; d < n; ++d) t *= G;
    return t;
  }
  Vec point(std::size_t flat, int n) const {
    Vec x(static_cast<std::size_t>(n));
    const double h = spacing();
    for (int d = n - 1; d >= 0; --d) {
      x[static_cast<std::size_t>(d)] =
          lo[static_cast<std::size_t>(d)] + (static_cast<double>(flat % G) + 0.5) * h;
      flat /= G;
    }
    return x;
  }
};

// Transform-based fast path: when every frequency times the window side is an
// integer (atoms on the window's dual lattice), the sampled exponential sum
// equals an inverse DFT of the atom amplitudes accumulated into bins
// k_d = round(xi_d * side) mod G -- aliasing is exact on samples, not an
// approximation.  Returns empty if the precondition fails.
inline std::vector<cplx> evaluate_on_grid_fft(const AtomicSignal& F, const GridSpec& g) {
  const int n = F.n();
  if ((g.G & (g.G - 1)) != 0) return {};
  for (const auto& atom : F.atoms)
    for (int d = 0; d < n; ++d) {
      double k = atom.xi[static_cast<std::size_t>(d)] * g.side;
      if (std::abs(k - std::round(k)) > 1e-9) return {};
    }
  std::vector<cplx> spec(g.total(n), cplx(0, 0));
  const double two_pi = 2.0 * 3.141592653589793238462643;
  for (const auto& atom : F.atoms) {
    std::size_t flat = 0;
    double phase0 = 0;  // phase at the first sample point lo + h/2
    for (int d = 0; d < n; ++d) {
      const double xd = atom.xi[static_cast<std::size_t>(d)];
      std::int64_t k = static_cast<std::int64_t>(std::llround(xd * g.side));
      std::int64_t kb = ((k % static_cast<std::int64_t>(g.G)) + static_cast<std::int64_t>(g.G)) %
                        static_cast<std::int64_t>(g.G);
      flat = flat * g.G + static_cast<std::size_t>(kb);
      phase0 += xd * (g.lo[static_cast<std::size_t>(d)] + 0.5 * g.spacing());
    }
    spec[flat] += atom.amp * std::polar(1.0, two_pi * phase0);
  }
  // spec currently holds amplitudes with phases referenced to sample index 0;
  // the inverse DFT supplies e(2 pi i k j / G) per later samples.  The binned
  // index kb differs from the true index k by multiples of G, which is exact
  // on the sample lattice x_j - x_0 = j * side / G.
  ifftn_normalized(spec, g.G, n);
  double scale = 1.0;
  for (int d = 0; d < n; ++d) scale *= static_cast<double>(g.G);
  for (cplx& v : spec) v *= scale;  // undo the 1/G^n of the normalized inverse
  return spec;
}

}  // namespace smallcap
