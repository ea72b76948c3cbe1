#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "smallcap/norms.hpp"
#include "smallcap/signal.hpp"

using namespace smallcap;

TEST_CASE("synth_constant structure") {
  AlphaVector a = AlphaVector::of({1.0});
  Scale R = Scale::of(4);
  AtomicSignal F = synth_constant(a, R);
  // n=2, alpha=(1), R=4: atoms at (k/4, k^2/16), k=-4..3
  REQUIRE(F.atoms.size() == 8);
  for (int k = -4; k < 4; ++k) {
    const auto& atom = F.atoms[static_cast<std::size_t>(k + 4)];
    CHECK(atom.xi[0] == doctest::Approx(k / 4.0));
    CHECK(atom.xi[1] == doctest::Approx(k * k / 16.0));
    CHECK(atom.amp == cplx(1.0, 0.0));
  }
  CHECK(F.atoms.size() == enumerate_caps(a, R).caps.size());
  for (const auto& atom : F.atoms) CHECK(in_neighborhood(atom.xi, R));
  REQUIRE(F.lattice_period.has_value());
  CHECK(*F.lattice_period == doctest::Approx(16.0));
}

TEST_CASE("synth_random determinism and phase statistics") {
  AlphaVector a = AlphaVector::of({0.75, 0.75});
  Scale R = Scale::of(64);
  AtomicSignal F1 = synth_random(a, R, 42);
  AtomicSignal F2 = synth_random(a, R, 42);
  REQUIRE(F1.atoms.size() == F2.atoms.size());
  CHECK(F1.atoms.size() == enumerate_caps(a, R).caps.size());
  for (std::size_t i = 0; i < F1.atoms.size(); ++i) {
    CHECK(F1.atoms[i].xi == F2.atoms[i].xi);
    CHECK(F1.atoms[i].amp == F2.atoms[i].amp);
    CHECK(std::abs(std::abs(F1.atoms[i].amp) - 1.0) < 1e-12);
    CHECK(in_neighborhood(F1.atoms[i].xi, R));
  }
  AtomicSignal F3 = synth_random(a, R, 43);
  CHECK(F3.atoms[0].amp != F1.atoms[0].amp);

  // law of large numbers for the phases across 10^4 atoms
  AtomicSignal big = synth_random(AlphaVector::of({1.0}), Scale::of(1 << 13), 7);
  REQUIRE(big.atoms.size() >= 10000);
  cplx mean(0, 0);
  for (const auto& atom : big.atoms) mean += atom.amp;
  mean /= static_cast<double>(big.atoms.size());
  CHECK(std::abs(mean) <= 0.05);
}

TEST_CASE("project is an exact partition and idempotent") {
  AlphaVector a = AlphaVector::of({1.0});
  Scale R = Scale::of(32);
  AtomicSignal F = synth_random(a, R, 1, 2);
  auto caps = enumerate_caps(a, R);
  std::size_t total = 0;
  for (const Cap& cap : caps.caps) {
    AtomicSignal P = project(F, cap);
    total += P.atoms.size();
    AtomicSignal PP = project(P, cap);
    CHECK(PP.atoms.size() == P.atoms.size());
  }
  CHECK(total == F.atoms.size());

  // group_by_cap agrees with per-cap projection
  auto groups = group_by_cap(F);
  std::size_t gtotal = 0;
  for (const auto& [corner, g] : groups) gtotal += g.atoms.size();
  CHECK(gtotal == F.atoms.size());

  // projecting onto a disjoint cap yields the empty signal
  AtomicSignal one;
  one.scale = R;
  one.alpha = a;
  one.atoms.push_back({{0.01, 0.0001}, cplx(1, 0)});
  Cap far_cap = cap_of({0.9, 0.81}, a, R);
  CHECK(project(one, far_cap).atoms.empty());
}

TEST_CASE("evaluate basics") {
  AlphaVector a = AlphaVector::of({1.0});
  Scale R = Scale::of(16);
  AtomicSignal F = synth_constant(a, R);
  // x = 0: sum of amplitudes = atom count
  auto v0 = evaluate(F, {{0.0, 0.0}});
  CHECK(v0[0].real() == doctest::Approx(static_cast<double>(F.atoms.size())));
  CHECK(v0[0].imag() == doctest::Approx(0.0));

  // single atom has constant modulus everywhere
  AtomicSignal single;
  single.scale = R;
  single.alpha = a;
  single.atoms.push_back({{0.25, 0.0625}, std::polar(0.7, 1.1)});
  auto vs = evaluate(single, {{3.7, -2.2}, {100.5, 41.0}});
  CHECK(std::abs(vs[0]) == doctest::Approx(0.7));
  CHECK(std::abs(vs[1]) == doctest::Approx(0.7));
}

TEST_CASE("grid fast path equals direct summation") {
  AlphaVector a = AlphaVector::of({1.0});
  Scale R = Scale::of(16);
  AtomicSignal F = synth_constant(a, R);  // lattice period 256
  GridSpec g;
  g.lo = {0.0, 0.0};
  g.side = 256.0;
  g.G = 64;
  auto fast = evaluate_on_grid_fft(F, g);
  REQUIRE(!fast.empty());
  // compare on 10^3 of the grid points (stride through the flat index)
  const std::size_t total = g.total(2);
  std::vector<Vec> pts;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < total; i += total / 1000) {
    pts.push_back(g.point(i, 2));
    idx.push_back(i);
  }
  auto direct = evaluate(F, pts);
  double maxabs = 0;
  for (const cplx& v : direct) maxabs = std::max(maxabs, std::abs(v));
  for (std::size_t k = 0; k < idx.size(); ++k)
    CHECK(std::abs(fast[idx[k]] - direct[k]) <= 1e-9 * std::max(1.0, maxabs));

  // off-lattice atoms refuse the fast path
  AtomicSignal off = F;
  off.atoms[0].xi[0] += 1e-3;
  CHECK(evaluate_on_grid_fft(off, g).empty());
}

TEST_CASE("evaluate matches fast path for random lattice amplitudes") {
  // random phases on lattice frequencies still use the exact folded transform
  AlphaVector a = AlphaVector::of({1.0});
  Scale R = Scale::of(16);
  AtomicSignal F = synth_constant(a, R);
  CounterRng rng(77, "fastpath/phases");
  for (std::size_t j = 0; j < F.atoms.size(); ++j)
    F.atoms[j].amp = std::polar(1.0, 2 * 3.14159265358979 * rng.uniform(j));
  GridSpec g;
  g.lo = {-128.0, -128.0};
  g.side = 256.0;
  g.G = 32;
  auto fast = evaluate_on_grid_fft(F, g);
  REQUIRE(!fast.empty());
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < g.total(2); i += 37) pts.push_back(g.point(i, 2));
  auto direct = evaluate(F, pts);
  std::size_t k = 0;
  for (std::size_t i = 0; i < g.total(2); i += 37, ++k)
    CHECK(std::abs(fast[i] - direct[k]) <= 1e-9 * 16.0);
}
