#pragma once
// Wave packet decomposition at scale R and the census machinery built on it.
//
// For each canonical cap theta, the projected signal P_theta F is demodulated
// by the lifted cap center xi_c, leaving a function bandlimited to a small box
// in the cap's tangent/normal frame (tangential half-band ~ R^{-1/2}, normal
// half-band ~ 1/R).  Sampling it on the dual lattice (spacing R^{1/2}/4 along
// tangents, R/6 along the normal -- oversampled relative to Nyquist) gives the
// packet coefficients w_T; reconstruction interpolates with a separable
// raised-cosine kernel whose passband covers the signal band and whose
// stopband starts inside the alias-free gap.  The kernel vanishes at nonzero
// lattice points, so truncation (|u| <= reach samples) is the only error
// source.  Frame bounds are measured, not derived.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "smallcap/geometry.hpp"
#include "smallcap/norms.hpp"
#include "smallcap/parallel.hpp"
#include "smallcap/signal.hpp"

namespace smallcap {

struct WaveWindow {
  // Lattice spacings as multiples of R^{1/2} (tangent) and R (normal).  The
  // demodulated tangential band of a theta group reaches
  // sqrt(1+4|c|^2) |h| <= sqrt(4n-3) sqrt(n-1)/2 * R^{-1/2} at corner caps
  // (~1.12 R^{-1/2} for n=2, ~2.12 R^{-1/2} for n=3), so spacing R^{1/2}/8
  // keeps the band under 0.27 cycles/sample for n <= 3.  The normal band is
  // ((n-1)/4 + 1)/R <= 1.5/R, under 0.25 cycles/sample at spacing R/6.
  double tangent_step = 0.125;
  double normal_step = 1.0 / 6.0;
  // raised-cosine band edges, in cycles per sample, per axis type
  double f1_t = 0.27, f2_t = 0.73;
  double f1_n = 0.28, f2_n = 0.72;
  int reach = 5;  // kernel truncation, in samples
};

// Raised-cosine interpolation kernel: transfer function 1 on |f| <= f1,
// cosine-squared rolloff to zero at f2, unit DC gain.  Valid as a
// reconstruction filter for unit-spaced samples whenever the signal band fits
// in [-f1, f1] and f2 <= 1 - f1; vanishes at nonzero integers when
// f1 + f2 = 1 (exact interpolation at the sample points).
inline double rc_kernel(double u, double f1, double f2) {
  const double fs = f1 + f2;
  const double df = 0.5 * (f2 - f1);
  const double pi = 3.141592653589793238462643;
  const double su = pi * fs * u;
  const double s = (std::abs(su) < 1e-12) ? 1.0 : std::sin(su) / su;
  const double den = 1.0 - 16.0 * df * df * u * u;
  // removable singularity at |u| = 1/(4 df): limit of cos/den is pi/4
  const double c = (std::abs(den) < 1e-8) ? pi / 4.0 : std::cos(2.0 * pi * df * u) / den;
  return fs * s * c;
}

struct ThetaPackets {
  Cap theta;
  Frame frame;      // tangents first, normal last
  Vec xi_center;    // lifted cap center (demodulation frequency)
  Vec spacings;     // per frame axis
  std::vector<std::int64_t> lat_lo;  // lattice index ranges per axis
  std::vector<std::int64_t> lat_count;
  std::vector<cplx> w;  // dense, row-major over lat_count
  std::size_t total() const {
    std::size_t t = 1;
    for (auto c : lat_count) t *= static_cast<std::size_t>(c);
    return t;
  }
};

struct PacketDecomposition {
  Scale R;
  WaveWindow win;
  Vec window_lo;
  double window_side = 0;
  std::vector<ThetaPackets> groups;
  double error_bound = 0;  // measured reconstruction error x 2
};

struct Tube {
  std::vector<std::int64_t> theta_corner;
  std::vector<std::int64_t> translate;
  cplx weight;
  Vec direction;
  Vec center;
};

namespace detail {
inline Vec frame_coords(const Frame& f, const Vec& x) {
  const std::size_t n = f.axes.size();
  Vec out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < n; ++d) out[i] += f.axes[i][d] * x[d];
  return out;
}
}  // namespace detail

namespace detail {

// Builds the packet group of one canonical cap: frame, lattice ranges covering
// the window (inflated by the kernel reach), and sampled demodulated weights.
inline ThetaPackets build_theta(const std::vector<std::int64_t>& corner,
                                const AtomicSignal& sub, const Vec& window_lo,
                                double window_side, const WaveWindow& win,
                                const Scale& R) {
  const int n = sub.n();
  const double Rh = std::sqrt(static_cast<double>(R.R));
  {
    ThetaPackets tp;
    tp.theta.alpha = AlphaVector::canonical(n);
    tp.theta.scale = R;
    tp.theta.kind = CapKind::canonical;
    tp.theta.corner = corner;
    tp.theta.m = CapGrid::of(tp.theta.alpha, R).m;
    tp.frame = cap_frame(tp.theta);
    tp.xi_center = tp.theta.lifted_center();
    for (int i = 0; i < n - 1; ++i) tp.spacings.push_back(win.tangent_step * Rh);
    tp.spacings.push_back(win.normal_step * static_cast<double>(R.R));

    // lattice ranges: cover the window box in frame coordinates, inflated by
    // the kernel reach
    for (int i = 0; i < n; ++i) {
      double mn = 0, mx = 0;
      for (int d = 0; d < n; ++d) {
        const double a = tp.frame.axes[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
        const double lo = a * window_lo[static_cast<std::size_t>(d)];
        const double hi = a * (window_lo[static_cast<std::size_t>(d)] + window_side);
        mn += std::min(lo, hi);
        mx += std::max(lo, hi);
      }
      const double s = tp.spacings[static_cast<std::size_t>(i)];
      std::int64_t clo =
          static_cast<std::int64_t>(std::floor(mn / s)) - win.reach;
      std::int64_t chi = static_cast<std::int64_t>(std::ceil(mx / s)) + win.reach;
      tp.lat_lo.push_back(clo);
      tp.lat_count.push_back(chi - clo + 1);
    }

    // sample the demodulated projection at the lattice points
    tp.w.assign(tp.total(), cplx(0, 0));
    const double two_pi = 2.0 * 3.141592653589793238462643;
    const auto& atoms = sub.atoms;
    // demodulated frequencies in frame coordinates
    std::vector<Vec> dfreq;
    std::vector<cplx> amp;
    for (const auto& atom : atoms) {
      Vec d(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k)
        d[static_cast<std::size_t>(k)] =
            atom.xi[static_cast<std::size_t>(k)] - tp.xi_center[static_cast<std::size_t>(k)];
      dfreq.push_back(detail::frame_coords(tp.frame, d));
      amp.push_back(atom.amp);
    }
    chunked_for(tp.total(), 8192, [&](std::uint64_t b, std::uint64_t e) {
      std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
      for (std::uint64_t f = b; f < e; ++f) {
        std::uint64_t rem = f;
        for (int i = n - 1; i >= 0; --i) {
          idx[static_cast<std::size_t>(i)] =
              tp.lat_lo[static_cast<std::size_t>(i)] +
              static_cast<std::int64_t>(rem % static_cast<std::uint64_t>(
                                                  tp.lat_count[static_cast<std::size_t>(i)]));
          rem /= static_cast<std::uint64_t>(tp.lat_count[static_cast<std::size_t>(i)]);
        }
        // packet center in frame coordinates is idx * spacing; the demodulated
        // phase only needs frame coordinates, not ambient ones
        cplx acc(0, 0);
        for (std::size_t j = 0; j < dfreq.size(); ++j) {
          double ph = 0;
          for (int i = 0; i < n; ++i)
            ph += dfreq[j][static_cast<std::size_t>(i)] *
                  (static_cast<double>(idx[static_cast<std::size_t>(i)]) *
                   tp.spacings[static_cast<std::size_t>(i)]);
          acc += amp[j] * std::polar(1.0, two_pi * ph);
        }
        tp.w[f] = acc;
      }
    });
    return tp;
  }
}

// Adds one group's contribution sum_{T in theta} w_T W_T(x) to `out` at the
// given points.  Parallel over points; each out[i] is touched by one worker.
inline void add_theta_contribution(const ThetaPackets& tp, const WaveWindow& win,
                                   const std::vector<Vec>& points,
                                   std::vector<cplx>& out) {
  const int n = tp.theta.n();
  const double two_pi = 2.0 * 3.141592653589793238462643;
  const int reach = win.reach;
  chunked_for(points.size(), 64, [&](std::uint64_t pb, std::uint64_t pe) {
    std::vector<double> fc(static_cast<std::size_t>(n));
    std::vector<std::int64_t> c0(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> kv(static_cast<std::size_t>(n));
    for (std::uint64_t pi_ = pb; pi_ < pe; ++pi_) {
      const Vec& x = points[pi_];
      Vec xf = frame_coords(tp.frame, x);
      for (int i = 0; i < n; ++i) {
        const double s = tp.spacings[static_cast<std::size_t>(i)];
        fc[static_cast<std::size_t>(i)] = xf[static_cast<std::size_t>(i)] / s;
        c0[static_cast<std::size_t>(i)] =
            static_cast<std::int64_t>(std::llround(fc[static_cast<std::size_t>(i)]));
        auto& col = kv[static_cast<std::size_t>(i)];
        col.assign(static_cast<std::size_t>(2 * reach + 1), 0.0);
        const bool tangent = i < n - 1;
        for (int o = -reach; o <= reach; ++o) {
          const double u = fc[static_cast<std::size_t>(i)] -
                           static_cast<double>(c0[static_cast<std::size_t>(i)] + o);
          col[static_cast<std::size_t>(o + reach)] =
              tangent ? rc_kernel(u, win.f1_t, win.f2_t)
                      : rc_kernel(u, win.f1_n, win.f2_n);
        }
      }
      // sum over the local (2*reach+1)^n block of packets
      cplx acc(0, 0);
      std::size_t block = 1;
      for (int i = 0; i < n; ++i) block *= static_cast<std::size_t>(2 * reach + 1);
      for (std::size_t b = 0; b < block; ++b) {
        std::size_t rem = b;
        double kprod = 1.0;
        std::size_t flat = 0;
        bool inside = true;
        for (int i = 0; i < n; ++i) {
          const int o = static_cast<int>(rem % static_cast<std::size_t>(2 * reach + 1)) - reach;
          rem /= static_cast<std::size_t>(2 * reach + 1);
          const std::int64_t ci = c0[static_cast<std::size_t>(i)] + o;
          const std::int64_t li = ci - tp.lat_lo[static_cast<std::size_t>(i)];
          if (li < 0 || li >= tp.lat_count[static_cast<std::size_t>(i)]) {
            inside = false;
            break;
          }
          kprod *= kv[static_cast<std::size_t>(i)][static_cast<std::size_t>(o + reach)];
          flat = flat * static_cast<std::size_t>(tp.lat_count[static_cast<std::size_t>(i)]) +
                 static_cast<std::size_t>(li);
        }
        if (inside) acc += tp.w[flat] * kprod;
      }
      double ph = 0;
      for (int d = 0; d < n; ++d)
        ph += tp.xi_center[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
      out[pi_] += acc * std::polar(1.0, two_pi * ph);
    }
  });
}

}  // namespace detail

inline PacketDecomposition decompose(const AtomicSignal& F, const Vec& window_lo,
                                     double window_side, WaveWindow win = {}) {
  PacketDecomposition dec;
  dec.R = F.scale;
  dec.win = win;
  dec.window_lo = window_lo;
  dec.window_side = window_side;
  for (const auto& [corner, sub] : group_by_cap(F, CapKind::canonical))
    dec.groups.push_back(
        detail::build_theta(corner, sub, window_lo, window_side, win, F.scale));
  return dec;
}

inline std::vector<cplx> reconstruct(const PacketDecomposition& dec,
                                     const std::vector<Vec>& points) {
  std::vector<cplx> out(points.size(), cplx(0, 0));
  for (const ThetaPackets& tp : dec.groups)
    detail::add_theta_contribution(tp, dec.win, points, out);
  return out;
}

// Relative L2 reconstruction error on seeded random probe points.
inline double reconstruction_error(const AtomicSignal& F, const PacketDecomposition& dec,
                                   std::size_t probes = 512, std::uint64_t seed = 0) {
  const int n = F.n();
  CounterRng rng(seed, "packets/probe");
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < probes; ++i) {
    Vec x(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d)
      x[static_cast<std::size_t>(d)] =
          dec.window_lo[static_cast<std::size_t>(d)] +
          dec.window_side * rng.uniform(i * 8 + static_cast<std::uint64_t>(d));
    pts.push_back(std::move(x));
  }
  std::vector<cplx> truth = evaluate(F, pts);
  std::vector<cplx> rec = reconstruct(dec, pts);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < probes; ++i) {
    num += std::norm(truth[i] - rec[i]);
    den += std::norm(truth[i]);
  }
  return den > 0 ? std::sqrt(num / den) : 0.0;
}

// Frame energy ratio, per-theta: sum_T |w_T|^2 * cell volume against the
// averaged ||P_theta F||_2^2 times each theta's own (inflated) lattice volume.
// An exact tight frame would give 1; raised-cosine sampling gives a measured
// value in [1/2, 2].
inline double energy_frame_ratio(const AtomicSignal& F, const PacketDecomposition& dec) {
  const int n = F.n();
  auto groups = group_by_cap(F, CapKind::canonical);
  std::map<std::vector<std::int64_t>, double> amp_sq;
  for (const auto& [corner, sub] : groups) amp_sq[corner] = sub.sum_sq_amp();
  double num = 0, den = 0;
  for (const ThetaPackets& tp : dec.groups) {
    double cell = 1.0, vol = 1.0;
    for (int i = 0; i < n; ++i) {
      cell *= tp.spacings[static_cast<std::size_t>(i)];
      vol *= static_cast<double>(tp.lat_count[static_cast<std::size_t>(i)]) *
             tp.spacings[static_cast<std::size_t>(i)];
    }
    double s = 0;
    for (const cplx& w : tp.w) s += std::norm(w);
    num += s * cell;
    auto it = amp_sq.find(tp.theta.corner);
    den += (it != amp_sq.end() ? it->second : 0.0) * vol;
  }
  if (den == 0) return 1.0;
  return num / den;
}

struct RoundtripAudit {
  double rel_l2_error = 0;
  double energy_ratio = 1.0;
  std::size_t tube_count = 0;
};

// Streaming variant of decompose + reconstruct + energy_frame_ratio: builds
// one theta group at a time, accumulates its contribution at the probe points
// and its energy tallies, then discards it.  Keeps memory at O(one group)
// for large n = 3 windows where the full tube set would not fit.
inline RoundtripAudit packet_roundtrip_audit(const AtomicSignal& F, const Vec& window_lo,
                                             double window_side, std::size_t probes,
                                             std::uint64_t seed, WaveWindow win = {}) {
  const int n = F.n();
  CounterRng rng(seed, "packets/probe");
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < probes; ++i) {
    Vec x(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d)
      x[static_cast<std::size_t>(d)] =
          window_lo[static_cast<std::size_t>(d)] +
          window_side * rng.uniform(i * 8 + static_cast<std::uint64_t>(d));
    pts.push_back(std::move(x));
  }
  std::vector<cplx> rec(pts.size(), cplx(0, 0));
  RoundtripAudit out;
  double num = 0, den = 0;
  for (const auto& [corner, sub] : group_by_cap(F, CapKind::canonical)) {
    ThetaPackets tp = detail::build_theta(corner, sub, window_lo, window_side, win, F.scale);
    detail::add_theta_contribution(tp, win, pts, rec);
    double cell = 1.0, vol = 1.0;
    for (int i = 0; i < n; ++i) {
      cell *= tp.spacings[static_cast<std::size_t>(i)];
      vol *= static_cast<double>(tp.lat_count[static_cast<std::size_t>(i)]) *
             tp.spacings[static_cast<std::size_t>(i)];
    }
    double s = 0;
    for (const cplx& w : tp.w) s += std::norm(w);
    num += s * cell;
    den += sub.sum_sq_amp() * vol;
    out.tube_count += tp.total();
  }
  out.energy_ratio = den > 0 ? num / den : 1.0;
  std::vector<cplx> truth = evaluate(F, pts);
  double e2 = 0, t2 = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    e2 += std::norm(truth[i] - rec[i]);
    t2 += std::norm(truth[i]);
  }
  out.rel_l2_error = t2 > 0 ? std::sqrt(e2 / t2) : 0.0;
  return out;
}

inline std::vector<Tube> all_tubes(const PacketDecomposition& dec, double weight_floor = 0) {
  std::vector<Tube> out;
  if (dec.groups.empty()) return out;
  const int n = dec.groups[0].theta.n();
  for (const ThetaPackets& tp : dec.groups) {
    Vec dir = tp.frame.axes.back();
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    const std::size_t total = tp.total();
    for (std::size_t f = 0; f < total; ++f) {
      if (std::abs(tp.w[f]) <= weight_floor) continue;
      std::size_t rem = f;
      for (int i = n - 1; i >= 0; --i) {
        idx[static_cast<std::size_t>(i)] =
            tp.lat_lo[static_cast<std::size_t>(i)] +
            static_cast<std::int64_t>(rem % static_cast<std::size_t>(
                                                tp.lat_count[static_cast<std::size_t>(i)]));
        rem /= static_cast<std::size_t>(tp.lat_count[static_cast<std::size_t>(i)]);
      }
      Tube t;
      t.theta_corner = tp.theta.corner;
      t.translate = idx;
      t.weight = tp.w[f];
      t.direction = dir;
      Vec c(static_cast<std::size_t>(n), 0.0);
      for (int i = 0; i < n; ++i)
        for (int d = 0; d < n; ++d)
          c[static_cast<std::size_t>(d)] +=
              static_cast<double>(idx[static_cast<std::size_t>(i)]) *
              tp.spacings[static_cast<std::size_t>(i)] *
              tp.frame.axes[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
      t.center = std::move(c);
      out.push_back(std::move(t));
    }
  }
  return out;
}

// Dyadic weight classes: partition by floor(log2 |w|) above 1e-12 * max|w|,
// ordered by descending class mass sum |w|^2.
struct WeightClass {
  int log2bin = 0;
  std::vector<std::size_t> members;  // indices into the tube vector
  double mass = 0;
};

inline std::vector<WeightClass> pigeonhole_weights(const std::vector<Tube>& tubes) {
  double wmax = 0;
  for (const Tube& t : tubes) wmax = std::max(wmax, std::abs(t.weight));
  if (wmax == 0) return {};
  const double floor_w = 1e-12 * wmax;
  std::map<int, WeightClass> bins;
  for (std::size_t i = 0; i < tubes.size(); ++i) {
    const double a = std::abs(tubes[i].weight);
    if (a < floor_w) continue;
    int b = static_cast<int>(std::floor(std::log2(a)));
    auto& cls = bins[b];
    cls.log2bin = b;
    cls.members.push_back(i);
    cls.mass += a * a;
  }
  std::vector<WeightClass> out;
  for (auto& [b, cls] : bins) out.push_back(std::move(cls));
  std::sort(out.begin(), out.end(),
            [](const WeightClass& a, const WeightClass& b) { return a.mass > b.mass; });
  return out;
}

// Census of tubes per (R^alpha, R)-slab: tubes grouped by direction (theta)
// and binned by their tangential center coordinates at slab widths R^{alpha_i}.
struct CensusReport {
  std::map<std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>, int> per_slab;
  int N_i = 0;              // dyadic per-slab count maximizing retained mass
  double retained_fraction = 1.0;
  std::map<std::size_t, int> per_cube;  // cube flat index -> tube count
  std::map<int, std::vector<std::size_t>> Q_r;  // dyadic r -> cubes with count in [r, 2r)
};

inline CensusReport slab_census(const std::vector<Tube>& tubes, const AlphaVector& alpha,
                                const Scale& R) {
  CensusReport rep;
  const int n = alpha.n;
  std::map<std::vector<std::int64_t>, Frame> frames;  // frames per direction
  for (const Tube& t : tubes) {
    std::vector<std::int64_t> slab_idx;
    auto fit = frames.find(t.theta_corner);
    if (fit == frames.end()) {
      Cap th;
      th.alpha = AlphaVector::canonical(n);
      th.scale = R;
      th.kind = CapKind::canonical;
      th.corner = t.theta_corner;
      th.m = CapGrid::of(th.alpha, R).m;
      fit = frames.emplace(t.theta_corner, cap_frame(th)).first;
    }
    const Frame& f = fit->second;
    for (int i = 0; i < n - 1; ++i) {
      double proj = 0;
      for (int d = 0; d < n; ++d)
        proj += t.center[static_cast<std::size_t>(d)] *
                f.axes[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
      const double w = std::pow(static_cast<double>(R.R), alpha.entries[static_cast<std::size_t>(i)]);
      slab_idx.push_back(static_cast<std::int64_t>(std::floor(proj / w)));
    }
    rep.per_slab[{t.theta_corner, slab_idx}] += 1;
  }
  // dyadic N maximizing retained tube mass (count of tubes in slabs whose
  // occupancy lies in [N, 2N))
  std::map<int, int> retained;  // log2 N -> tubes retained
  int total = 0;
  for (const auto& [k, c] : rep.per_slab) {
    int b = static_cast<int>(std::floor(std::log2(static_cast<double>(c))));
    retained[b] += c;
    total += c;
  }
  int best = 0, bestb = 0;
  for (const auto& [b, c] : retained)
    if (c > best) {
      best = c;
      bestb = b;
    }
  rep.N_i = 1 << bestb;
  rep.retained_fraction = total > 0 ? static_cast<double>(best) / total : 1.0;
  return rep;
}

// Census of tube incidences on the R^{1/2}-cube tiling of the window: a cube
// counts if its center lies within the C-enlarged tube footprint inflated by
// the cube's circumradius.  C defaults to 4 ("slight enlargements"; exposed
// because the paper never fixes it).
inline void cube_census(CensusReport& rep, const std::vector<Tube>& tubes, const Scale& R,
                        const Vec& window_lo, double window_side, double C = 4.0) {
  const int n = static_cast<int>(window_lo.size());
  const double rh = std::sqrt(static_cast<double>(R.R));
  const std::size_t nc = static_cast<std::size_t>(std::llround(window_side / rh));
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) total *= nc;
  const double cube_rad = rh * std::sqrt(static_cast<double>(n)) / 2.0;
  const double lon_half = C * static_cast<double>(R.R) / 2.0 + cube_rad;
  const double per_half = C * rh * std::sqrt(static_cast<double>(std::max(1, n - 1))) / 2.0 + cube_rad;
  std::vector<int> counts(total, 0);
  for (const Tube& t : tubes) {
    // iterate cubes; cheap enough at desk scale, exact center-distance test
    for (std::size_t f = 0; f < total; ++f) {
      std::size_t rem = f;
      double lon = 0, d2 = 0;
      Vec x(static_cast<std::size_t>(n));
      for (int d = n - 1; d >= 0; --d) {
        x[static_cast<std::size_t>(d)] =
            window_lo[static_cast<std::size_t>(d)] +
            (static_cast<double>(rem % nc) + 0.5) * rh;
        rem /= nc;
      }
      for (int d = 0; d < n; ++d) {
        const double dd = x[static_cast<std::size_t>(d)] - t.center[static_cast<std::size_t>(d)];
        lon += dd * t.direction[static_cast<std::size_t>(d)];
        d2 += dd * dd;
      }
      const double per2 = d2 - lon * lon;
      if (std::abs(lon) <= lon_half && per2 <= per_half * per_half) counts[f] += 1;
    }
  }
  for (std::size_t f = 0; f < total; ++f)
    if (counts[f] > 0) rep.per_cube[f] = counts[f];
  for (const auto& [f, c] : rep.per_cube) {
    int b = static_cast<int>(std::floor(std::log2(static_cast<double>(c))));
    rep.Q_r[1 << b].push_back(f);
  }
}

// --- refined flat decoupling audit -----------------------------------------
//
// For a pigeonholed tube class whose nonzero slabs each hold ~N tubes, the
// flat bound L^{1-2/p} improves to (L^2/N)^{1/2-1/p}.  The ratio below
// measures the exponential sum against this refined prediction; the slab
// hypothesis is verified first and a violating slab is named on failure.

struct RefinedFlatReport {
  double lhs = 0;
  double rhs_core = 0;    // (sum_i ||P_{B_i} F||_p^p)^{1/p}
  double prediction = 0;  // (L^2 / N)^{1/2 - 1/p}
  double ratio = 0;
  int N = 0;
  double retained_fraction = 1.0;
};

inline RefinedFlatReport refined_flat_check(const AtomicSignal& F,
                                            const std::vector<Tube>& cls,
                                            const AlphaVector& alpha, int L, double p,
                                            const QuadratureSpec& quad) {
  if (L < 1) throw std::invalid_argument("refined_flat_check: L >= 1");
  CensusReport census = slab_census(cls, alpha, F.scale);
  for (const auto& [key, c] : census.per_slab)
    if (c < census.N_i || c >= 2 * census.N_i) {
      std::string msg = "refined_flat_check: slab count outside [N, 2N): theta=(";
      for (auto v : key.first) msg += std::to_string(v) + ",";
      msg += ") slab=(";
      for (auto v : key.second) msg += std::to_string(v) + ",";
      msg += ") count=" + std::to_string(c) + " N=" + std::to_string(census.N_i);
      throw std::runtime_error(msg);
    }
  RefinedFlatReport rep;
  rep.N = census.N_i;
  rep.retained_fraction = census.retained_fraction;
  rep.lhs = lp_norm(F, p, quad).value;
  // partition of the horizontal domain [-1,1]^{n-1} into L slices along the
  // first coordinate
  double core = 0;
  int nonempty = 0;
  std::vector<AtomicSignal> parts(static_cast<std::size_t>(L));
  for (auto& part : parts) {
    part.scale = F.scale;
    part.alpha = F.alpha;
    part.lattice_period = F.lattice_period;
  }
  for (const auto& atom : F.atoms) {
    double x = atom.xi[0];
    int i = static_cast<int>(std::floor((x + 1.0) / 2.0 * static_cast<double>(L)));
    i = std::min(std::max(i, 0), L - 1);
    parts[static_cast<std::size_t>(i)].atoms.push_back(atom);
  }
  for (const auto& part : parts) {
    if (part.atoms.empty()) continue;
    ++nonempty;
    core += std::pow(lp_norm(part, p, quad).value, p);
  }
  (void)nonempty;
  rep.rhs_core = std::pow(core, 1.0 / p);
  rep.prediction = std::pow(static_cast<double>(L) * static_cast<double>(L) /
                                static_cast<double>(rep.N),
                            0.5 - 1.0 / p);
  rep.ratio = rep.lhs / (rep.prediction * rep.rhs_core);
  return rep;
}

// --- refined decoupling audit ----------------------------------------------
//
// Against cubes q that each meet at most M fat tubes (enlargement R^delta),
// compare ||F||_{L^p(union q)} with M^{1/2-1/p} (sum_T ||F_T||_p^p)^{1/p}.
// Since the tube cells of one direction tile space, sum_T ||F_T||_p^p
// collapses to sum_theta ||P_theta F||_p^p, which is what we evaluate (exact
// at p = 2 by Parseval).  All norms are averaged over the window.

struct RefinedDecouplingReport {
  double lhs = 0;
  double rhs_core = 0;  // (sum_theta ||P_theta F||_p^p)^{1/p}
  double ratio = 0;
  int M = 0;
  std::size_t cube_count = 0;
  double coverage = 0;  // sampled volume fraction of union q in the window
  bool p_out_of_range = false;
};

inline RefinedDecouplingReport refined_decoupling_check(
    const AtomicSignal& F, const std::vector<Tube>& tubes, const Vec& window_lo,
    double window_side, double p, std::uint64_t samples, std::uint64_t seed,
    const QuadratureSpec& quad_rhs, double delta = 0.05) {
  const int n = F.n();
  RefinedDecouplingReport rep;
  rep.p_out_of_range =
      p < 2.0 - 1e-12 ||
      p > 2.0 * (n + 1) / static_cast<double>(n - 1) + 1e-12;

  CensusReport census;
  const double C = std::pow(static_cast<double>(F.scale.R), delta);
  cube_census(census, tubes, F.scale, window_lo, window_side, C);
  for (const auto& [f, c] : census.per_cube) rep.M = std::max(rep.M, c);
  rep.cube_count = census.per_cube.size();
  if (rep.M == 0) rep.M = 1;

  // membership test: cube flat index of a point in the window tiling
  const double rh = std::sqrt(static_cast<double>(F.scale.R));
  const std::size_t nc = static_cast<std::size_t>(std::llround(window_side / rh));
  auto cube_index = [&](const Vec& x) -> std::size_t {
    std::size_t flat = 0;
    for (int d = 0; d < n; ++d) {
      double t = (x[static_cast<std::size_t>(d)] - window_lo[static_cast<std::size_t>(d)]) / rh;
      std::int64_t j = static_cast<std::int64_t>(std::floor(t));
      j = std::min<std::int64_t>(std::max<std::int64_t>(j, 0),
                                 static_cast<std::int64_t>(nc) - 1);
      flat = flat * nc + static_cast<std::size_t>(j);
    }
    return flat;
  };

  // lhs^p = window-averaged integral of |F|^p restricted to union q
  CounterRng rng(seed, "refined/mc");
  const double two_pi = 2.0 * 3.141592653589793238462643;
  std::uint64_t kept_total = 0;
  double lhs_pow = chunked_reduce<double>(
      samples, 2048, 0.0,
      [&](std::uint64_t b, std::uint64_t e) {
        double acc = 0;
        for (std::uint64_t i = b; i < e; ++i) {
          Vec x(static_cast<std::size_t>(n));
          for (int d = 0; d < n; ++d)
            x[static_cast<std::size_t>(d)] =
                window_lo[static_cast<std::size_t>(d)] +
                window_side * rng.uniform(i * 8 + static_cast<std::uint64_t>(d));
          if (census.per_cube.find(cube_index(x)) == census.per_cube.end()) continue;
          cplx v(0, 0);
          for (const auto& atom : F.atoms) {
            double ph = 0;
            for (int d = 0; d < n; ++d)
              ph += atom.xi[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
            v += atom.amp * std::polar(1.0, two_pi * ph);
          }
          acc += std::pow(std::abs(v), p);
        }
        return acc;
      },
      [](double a, double b2) { return a + b2; });
  // coverage is deterministic given the census; count kept samples separately
  kept_total = chunked_reduce<std::uint64_t>(
      samples, 2048, 0ULL,
      [&](std::uint64_t b, std::uint64_t e) {
        std::uint64_t k = 0;
        for (std::uint64_t i = b; i < e; ++i) {
          Vec x(static_cast<std::size_t>(n));
          for (int d = 0; d < n; ++d)
            x[static_cast<std::size_t>(d)] =
                window_lo[static_cast<std::size_t>(d)] +
                window_side * rng.uniform(i * 8 + static_cast<std::uint64_t>(d));
          if (census.per_cube.find(cube_index(x)) != census.per_cube.end()) ++k;
        }
        return k;
      },
      [](std::uint64_t a, std::uint64_t b2) { return a + b2; });
  rep.coverage = static_cast<double>(kept_total) / static_cast<double>(samples);
  rep.lhs = std::pow(lhs_pow / static_cast<double>(samples), 1.0 / p);

  double core = 0;
  for (const auto& [corner, sub] : group_by_cap(F, CapKind::canonical))
    core += std::pow(lp_norm(sub, p, quad_rhs).value, p);
  rep.rhs_core = std::pow(core, 1.0 / p);
  rep.ratio = rep.lhs / (std::pow(static_cast<double>(rep.M), 0.5 - 1.0 / p) * rep.rhs_core);
  return rep;
}

}  // namespace smallcap
