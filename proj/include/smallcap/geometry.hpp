#pragma once
// Frequency-space geometry for the truncated paraboloid xi_n = |xi'|^2 over
// [-1,1]^{n-1}: its R^{-1}-neighborhood, lattice cap partitions at general
// per-coordinate exponents alpha_i in [1/2, 1], canonical caps, normals,
// transversality, dual slabs, and parabolic rescaling.
//
// Conventions:
//  * neighborhood membership is the vertical distance |xi_n - |xi'|^2| <= 1/R;
//  * caps are half-open lattice boxes [c_i/m_i, (c_i+1)/m_i) with m_i = R^{a_i},
//    so a fixed (alpha, R) family partitions [-1,1)^{n-1} exactly;
//  * the base domain [-1,1]^{n-1} makes the cap count prod_i(2 m_i), a factor
//    2^{n-1} above the unit-cube count prod_i m_i (constant offset in all
//    log-log fits; flagged in CapCollection::domain_factor).

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace smallcap {

using Vec = std::vector<double>;

struct Scale {
  std::uint64_t R = 0;
  int log2R = 0;

  static Scale of(std::uint64_t R) {
    if (R < 4 || (R & (R - 1)) != 0)
      throw std::invalid_argument("Scale: R must be a power of 2, >= 4");
    Scale s;
    s.R = R;
    s.log2R = 0;
    while ((1ULL << s.log2R) < R) ++s.log2R;
    return s;
  }
  double inv() const { return 1.0 / static_cast<double>(R); }
};

struct AlphaVector {
  std::vector<double> entries;  // alpha_i, i = 1..n-1
  int n = 2;                    // ambient dimension

  static AlphaVector of(std::vector<double> a) {
    AlphaVector v;
    v.n = static_cast<int>(a.size()) + 1;
    v.entries = std::move(a);
    if (v.n < 2) throw std::invalid_argument("AlphaVector: need n >= 2");
    for (double ai : v.entries)
      if (ai < 0.5 - 1e-12 || ai > 1.0 + 1e-12)
        throw std::invalid_argument("AlphaVector: alpha_i must lie in [1/2, 1]");
    return v;
  }

  double weight() const {
    double s = 0;
    for (double ai : entries) s += ai;
    return s;
  }
  // The main theorem's range is |alpha| <= n/2.
  bool admissible() const { return weight() <= n / 2.0 + 1e-12; }
  bool is_canonical() const {
    for (double ai : entries)
      if (std::abs(ai - 0.5) > 1e-12) return false;
    return true;
  }
  static AlphaVector canonical(int n) {
    return of(std::vector<double>(static_cast<std::size_t>(n - 1), 0.5));
  }
};

// Caps per half-unit in coordinate i: m_i = R^{alpha_i}, rounded up to an
// integer when R^{alpha_i} is not one (the warning flag travels with results).
struct CapGrid {
  std::vector<std::int64_t> m;
  bool rounded = false;

  static CapGrid of(const AlphaVector& alpha, const Scale& R) {
    CapGrid g;
    for (double ai : alpha.entries) {
      double exact = std::pow(static_cast<double>(R.R), ai);
      double nearest = std::round(exact);
      if (std::abs(exact - nearest) < 1e-6 * exact) {
        g.m.push_back(static_cast<std::int64_t>(nearest));
      } else {
        g.m.push_back(static_cast<std::int64_t>(std::ceil(exact)));
        g.rounded = true;
      }
    }
    return g;
  }
};

enum class CapKind { small, canonical };

struct Cap {
  AlphaVector alpha;
  Scale scale;
  std::vector<std::int64_t> corner;  // c_i in [-m_i, m_i)
  CapKind kind = CapKind::small;
  std::vector<std::int64_t> m;       // grid denominators (cached)

  int n() const { return alpha.n; }
  double lo(int i) const {
    return static_cast<double>(corner[static_cast<std::size_t>(i)]) /
           static_cast<double>(m[static_cast<std::size_t>(i)]);
  }
  double hi(int i) const {
    return static_cast<double>(corner[static_cast<std::size_t>(i)] + 1) /
           static_cast<double>(m[static_cast<std::size_t>(i)]);
  }
  double width(int i) const { return 1.0 / static_cast<double>(m[static_cast<std::size_t>(i)]); }
  Vec base_center() const {
    Vec c(static_cast<std::size_t>(n() - 1));
    for (int i = 0; i < n() - 1; ++i) c[static_cast<std::size_t>(i)] = 0.5 * (lo(i) + hi(i));
    return c;
  }
  // Lift of the base center to the paraboloid.
  Vec lifted_center() const {
    Vec c = base_center();
    double s = 0;
    for (double v : c) s += v * v;
    c.push_back(s);
    return c;
  }
  bool contains_base(const Vec& xi_horiz) const {
    for (int i = 0; i < n() - 1; ++i) {
      double x = xi_horiz[static_cast<std::size_t>(i)];
      if (x < lo(i) || x >= hi(i)) return false;
    }
    return true;
  }
  bool operator==(const Cap& o) const {
    return corner == o.corner && m == o.m && kind == o.kind;
  }
};

struct CapCollection {
  AlphaVector alpha;
  Scale scale;
  CapKind kind = CapKind::small;
  std::vector<Cap> caps;
  bool grid_rounded = false;
  // 2^{n-1}: cap count / R^{|alpha|}, from the base domain [-1,1]^{n-1}.
  double domain_factor = 1;
};

inline CapCollection enumerate_caps(const AlphaVector& alpha, const Scale& R,
                                    CapKind kind = CapKind::small) {
  AlphaVector a = kind == CapKind::canonical ? AlphaVector::canonical(alpha.n) : alpha;
  CapGrid grid = CapGrid::of(a, R);
  CapCollection out;
  out.alpha = a;
  out.scale = R;
  out.kind = kind;
  out.grid_rounded = grid.rounded;
  out.domain_factor = std::pow(2.0, a.n - 1);
  const int d = a.n - 1;
  std::vector<std::int64_t> c(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] = -grid.m[static_cast<std::size_t>(i)];
  for (;;) {
    Cap cap;
    cap.alpha = a;
    cap.scale = R;
    cap.corner = c;
    cap.kind = kind;
    cap.m = grid.m;
    out.caps.push_back(std::move(cap));
    int i = d - 1;
    for (; i >= 0; --i) {
      if (++c[static_cast<std::size_t>(i)] < grid.m[static_cast<std::size_t>(i)]) break;
      c[static_cast<std::size_t>(i)] = -grid.m[static_cast<std::size_t>(i)];
    }
    if (i < 0) break;
  }
  return out;
}

inline bool in_neighborhood(const Vec& xi, const Scale& R) {
  const int n = static_cast<int>(xi.size());
  double s = 0;
  for (int i = 0; i < n - 1; ++i) {
    double x = xi[static_cast<std::size_t>(i)];
    if (std::abs(x) > 1.0) return false;
    s += x * x;
  }
  return std::abs(xi[static_cast<std::size_t>(n - 1)] - s) <= R.inv() + 1e-15;
}

// The unique half-open cap containing xi's horizontal part; horizontal
// coordinate exactly +1 is clamped into the last cap.
inline Cap cap_of(const Vec& xi, const AlphaVector& alpha, const Scale& R,
                  CapKind kind = CapKind::small) {
  if (!in_neighborhood(xi, R))
    throw std::invalid_argument("cap_of: point outside the neighborhood");
  AlphaVector a = kind == CapKind::canonical ? AlphaVector::canonical(alpha.n) : alpha;
  CapGrid grid = CapGrid::of(a, R);
  Cap cap;
  cap.alpha = a;
  cap.scale = R;
  cap.kind = kind;
  cap.m = grid.m;
  for (int i = 0; i < a.n - 1; ++i) {
    const double mi = static_cast<double>(grid.m[static_cast<std::size_t>(i)]);
    std::int64_t c = static_cast<std::int64_t>(std::floor(xi[static_cast<std::size_t>(i)] * mi));
    if (c >= grid.m[static_cast<std::size_t>(i)]) c = grid.m[static_cast<std::size_t>(i)] - 1;  // xi_i == 1
    if (c < -grid.m[static_cast<std::size_t>(i)]) c = -grid.m[static_cast<std::size_t>(i)];
    cap.corner.push_back(c);
  }
  return cap;
}

// Unit normal of the graph xi_n = |xi'|^2 at horizontal point xi'.
inline Vec normal_at(const Vec& xi_horiz) {
  Vec u;
  double s = 1.0;
  for (double x : xi_horiz) {
    u.push_back(-2.0 * x);
    s += 4.0 * x * x;
  }
  u.push_back(1.0);
  const double inv = 1.0 / std::sqrt(s);
  for (double& v : u) v *= inv;
  return u;
}

namespace detail {
// |det| by Gaussian elimination with partial pivoting.
inline double abs_det(std::vector<Vec> rows) {
  const std::size_t n = rows.size();
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(rows[r][k]) > std::abs(rows[piv][k])) piv = r;
    if (std::abs(rows[piv][k]) < 1e-300) return 0.0;
    if (piv != k) std::swap(rows[piv], rows[k]);
    det *= rows[k][k];
    for (std::size_t r = k + 1; r < n; ++r) {
      double f = rows[r][k] / rows[k][k];
      for (std::size_t c = k; c < n; ++c) rows[r][c] -= f * rows[k][c];
    }
  }
  return std::abs(det);
}
}  // namespace detail

// Wedge of the unit normals at n points on the paraboloid graph:
// |det[n(xi^{(1)}), ..., n(xi^{(n)})]|.
inline double transversality_measure(const std::vector<Vec>& horiz_points) {
  if (horiz_points.empty())
    throw std::invalid_argument("transversality_measure: no points");
  const int n = static_cast<int>(horiz_points[0].size()) + 1;
  if (static_cast<int>(horiz_points.size()) != n)
    throw std::invalid_argument("transversality_measure: need exactly n points");
  std::vector<Vec> rows;
  for (const Vec& p : horiz_points) rows.push_back(normal_at(p));
  return detail::abs_det(std::move(rows));
}

// All small caps whose base box lies inside theta's base box.  Exact integer
// containment: [c/m, (c+1)/m) subset of [ct/mt, (ct+1)/mt) iff
// c*mt >= ct*m and (c+1)*mt <= (ct+1)*m.
inline std::vector<Cap> caps_in_theta(const Cap& theta, const AlphaVector& alpha,
                                      const Scale& R) {
  if (theta.kind != CapKind::canonical)
    throw std::invalid_argument("caps_in_theta: theta must be canonical");
  CapGrid grid = CapGrid::of(alpha, R);
  const int d = alpha.n - 1;
  std::vector<std::vector<std::int64_t>> per_dim(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const std::int64_t m = grid.m[static_cast<std::size_t>(i)];
    const std::int64_t mt = theta.m[static_cast<std::size_t>(i)];
    const std::int64_t ct = theta.corner[static_cast<std::size_t>(i)];
    for (std::int64_t c = -m; c < m; ++c)
      if (c * mt >= ct * m && (c + 1) * mt <= (ct + 1) * m)
        per_dim[static_cast<std::size_t>(i)].push_back(c);
  }
  std::vector<Cap> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  for (int i = 0; i < d; ++i)
    if (per_dim[static_cast<std::size_t>(i)].empty()) return out;
  for (;;) {
    Cap cap;
    cap.alpha = alpha;
    cap.scale = R;
    cap.kind = CapKind::small;
    cap.m = grid.m;
    for (int i = 0; i < d; ++i)
      cap.corner.push_back(per_dim[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]]);
    out.push_back(std::move(cap));
    int i = d - 1;
    for (; i >= 0; --i) {
      if (++idx[static_cast<std::size_t>(i)] < per_dim[static_cast<std::size_t>(i)].size()) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
    if (i < 0) break;
  }
  return out;
}

// Parabolic rescaling adapted to a canonical cap theta of side K^{-1/2}:
// with b = theta's base center, eta' = K^{1/2} (xi' - b) and
// eta_n = K (xi_n - |b|^2 - 2 b.(xi' - b)).  The map carries the graph to the
// graph and sends the R^{-1}-neighborhood into the (R/K)^{-1}-neighborhood;
// theta's base lands in [-1/2, 1/2)^{n-1}.
inline Vec parabolic_rescale_point(const Cap& theta, const Vec& xi, const Scale& K) {
  const int n = theta.n();
  Vec b = theta.base_center();
  const double s = std::sqrt(static_cast<double>(K.R));
  Vec out(static_cast<std::size_t>(n));
  double b2 = 0, bdot = 0;
  for (int i = 0; i < n - 1; ++i) {
    const double d = xi[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = s * d;
    b2 += b[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
    bdot += b[static_cast<std::size_t>(i)] * d;
  }
  out[static_cast<std::size_t>(n - 1)] =
      static_cast<double>(K.R) * (xi[static_cast<std::size_t>(n - 1)] - b2 - 2.0 * bdot);
  return out;
}

inline std::vector<Vec> parabolic_rescale(const Cap& theta, const std::vector<Vec>& atoms,
                                          const Scale& K) {
  std::vector<Vec> out;
  out.reserve(atoms.size());
  for (const Vec& xi : atoms) {
    for (int i = 0; i < theta.n() - 1; ++i) {
      double x = xi[static_cast<std::size_t>(i)];
      if (x < theta.lo(i) - 1e-12 || x > theta.hi(i) + 1e-12)
        throw std::invalid_argument("parabolic_rescale: atom outside theta");
    }
    out.push_back(parabolic_rescale_point(theta, xi, K));
  }
  return out;
}

// Orthonormal frame adapted to a cap: axes[0..n-2] span the tangent space at
// the lifted center (Gram-Schmidt of the graph tangents), axes[n-1] is the
// unit normal (the long direction of dual slabs/tubes).
struct Frame {
  std::vector<Vec> axes;  // n vectors of dimension n; normal last
};

inline Frame cap_frame(const Cap& cap) {
  const int n = cap.n();
  Vec c = cap.base_center();
  Frame f;
  std::vector<Vec> basis;
  for (int i = 0; i < n - 1; ++i) {
    Vec t(static_cast<std::size_t>(n), 0.0);
    t[static_cast<std::size_t>(i)] = 1.0;
    t[static_cast<std::size_t>(n - 1)] = 2.0 * c[static_cast<std::size_t>(i)];
    for (const Vec& b : basis) {
      double d = 0;
      for (int k = 0; k < n; ++k) d += t[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(k)];
      for (int k = 0; k < n; ++k) t[static_cast<std::size_t>(k)] -= d * b[static_cast<std::size_t>(k)];
    }
    double nrm = 0;
    for (double v : t) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (double& v : t) v /= nrm;
    basis.push_back(std::move(t));
  }
  f.axes = std::move(basis);
  f.axes.push_back(normal_at(c));
  return f;
}

// Spatial slab dual to a cap: half-extents R^{alpha_i} along the tangent axes
// and R along the normal, translated on its own lattice.
struct Slab {
  Cap cap;
  std::vector<std::int64_t> translate;
  Frame frame;
  Vec half_extents;  // in frame order: tangents then normal
};

inline Slab dual_slab(const Cap& cap, std::vector<std::int64_t> translate) {
  Slab s;
  s.cap = cap;
  s.translate = std::move(translate);
  s.frame = cap_frame(cap);
  for (int i = 0; i < cap.n() - 1; ++i)
    s.half_extents.push_back(0.5 * static_cast<double>(cap.m[static_cast<std::size_t>(i)]));
  s.half_extents.push_back(0.5 * static_cast<double>(cap.scale.R));
  return s;
}

}  // namespace smallcap
