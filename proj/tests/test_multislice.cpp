#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lms/error.hpp"
#include "lms/multislice.hpp"
#include "lms/optics.hpp"
#include "oracles.hpp"

using namespace lms;
using std::numbers::pi;

namespace {
Specimen small_specimen(const GridGeometry& g, int slices) {
  std::vector<AtomSpec> atoms{{1.0, 1.2, 0.5, 1.3, 0.4}, {3.1, 2.4, 2.5, 0.8, 0.3}, {2.2, 3.3, 3.5, 1.1, 0.5}};
  return synth_specimen(atoms, g, 2.0, slices);
}
}  // namespace

TEST_CASE("sampled chirp transforms exactly to the Fourier propagator at critical sampling") {
  // With lambda*eps = l^2 / n (n even) the discrete Gauss sum reproduces the continuous transform.
  const int n = 32;
  const double l = 4.0, lambda = 0.0250793;
  const double eps = l * l / (n * lambda);
  const auto g = GridGeometry::make(n, n, l, l);
  ComplexField chirp(g);
  const double le = lambda * eps, px = l / n;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double rx = signed_offset(x, n) * px, ry = signed_offset(y, n) * px;
      chirp(x, y) = cplx{0, -1.0 / le} * std::polar(1.0, pi * (rx * rx + ry * ry) / le) * px * px;
    }
  const auto transformed = dft2(chirp, Direction::forward);
  const auto prop = fourier_propagator(g, lambda, eps);
  CHECK(oracle::max_abs_diff(transformed.storage(), prop.storage()) < 1e-10);

  const auto kernel = realspace_kernel(g, lambda, eps, 31, 31);
  double diff = 0;
  for (int b = -15; b <= 15; ++b)
    for (int a = -15; a <= 15; ++a) diff = std::max(diff, std::abs(kernel(a, b) - chirp.at_wrapped(a, b)));
  CHECK(diff < 1e-12);
}

TEST_CASE("fourier propagator values") {
  const auto g = GridGeometry::make(8, 6, 2.0, 3.0);
  const auto prop = fourier_propagator(g, 0.02, 5.0);
  for (int jy = 0; jy < 6; ++jy)
    for (int jx = 0; jx < 8; ++jx) {
      const double kx = oracle::frequency(jx, 8, 2.0), ky = oracle::frequency(jy, 6, 3.0);
      CHECK(std::abs(prop(jx, jy) - std::polar(1.0, -pi * 0.02 * 5.0 * (kx * kx + ky * ky))) < 1e-14);
    }
}

TEST_CASE("solver is linear and unitary without bandlimit") {
  const auto g = GridGeometry::make(32, 32, 4.0, 4.0);
  const auto spec = small_specimen(g, 2);
  const MicroscopeParams p;
  const MultisliceSolver solver(spec, p, {});
  const auto a = oracle::random_field(g, 1), b = oracle::random_field(g, 2);
  const cplx ca{0.3, -1.1}, cb{2.0, 0.5};
  ComplexField mix = a;
  mix *= ca;
  ComplexField tmp = b;
  tmp *= cb;
  mix += tmp;
  OpCounters c;
  auto ya = solver.solve(a, c), yb = solver.solve(b, c);
  const auto ymix = solver.solve(mix, c);
  ya *= ca;
  yb *= cb;
  ya += yb;
  CHECK(rel_error(ya, ymix, Norm::euclidean) < 1e-13);
  const auto ya2 = solver.solve(a, c);
  CHECK(ya2.norm2() == doctest::Approx(a.norm2()).epsilon(1e-12));
}

TEST_CASE("operation counters follow the per-slice model") {
  const auto g = GridGeometry::make(16, 16, 4.0, 4.0);
  const auto spec = small_specimen(g, 4);
  const MicroscopeParams p;
  const auto init = build_probe({3, 3}, p, g);
  OpCounters c;
  multislice_solve(init, spec, p, {}, c);
  CHECK(c.multislice_calls == 1);
  CHECK(c.fft_count == 8);
  CHECK(c.pointwise_mul_count == 2 * 4 * 256);

  PropagatorSpec rs;
  rs.variant = PropagationVariant::realspace;
  rs.k1 = 5;
  rs.k2 = 3;
  OpCounters r;
  multislice_solve(init, spec, p, rs, r);
  CHECK(r.fft_count == 0);
  CHECK(r.pointwise_mul_count == 4 * 256);
  CHECK(r.convolution_mac_count == 4 * 256 * 15);
}

TEST_CASE("windowed realspace solve equals the periodic solve for compact waves") {
  const auto g = GridGeometry::make(64, 64, 8.0, 8.0);
  const auto spec = synth_specimen({{4.0, 4.0, 0.5, 1.0, 0.3}}, g, 2.0, 2);
  const MicroscopeParams p;
  PropagatorSpec full;
  full.variant = PropagationVariant::realspace;
  full.k1 = full.k2 = 5;
  PropagatorSpec win = full;
  win.window = Pixel{33, 33};
  ComplexField init(g);
  init(32, 32) = 1.0;  // spreads 2 px per slice, far from the window edge
  OpCounters c;
  const auto ref = MultisliceSolver(spec, p, full).solve(init, c);
  const auto placed = MultisliceSolver(spec, p, win).solve_window(init, {32, 32}, c);
  CHECK(placed.field.nx() == 33);
  const auto embedded = embed(placed);
  CHECK(oracle::max_abs_diff(embedded.storage(), ref.storage()) < 1e-14);
}

TEST_CASE("invalid propagators and inputs") {
  const auto g = GridGeometry::make(16, 16, 4.0, 4.0);
  PropagatorSpec bad;
  bad.variant = PropagationVariant::realspace;
  bad.k1 = 4;
  CHECK_THROWS_AS(bad.validate(g), InvalidArgument);
  bad.k1 = 33;
  CHECK_THROWS_AS(bad.validate(g), InvalidArgument);
  PropagatorSpec fw;
  fw.window = Pixel{8, 8};
  CHECK_THROWS_AS(fw.validate(g), InvalidArgument);

  const auto spec = small_specimen(g, 2);
  ComplexField init(g);
  init(0, 0) = std::nan("");
  OpCounters c;
  CHECK_THROWS_AS(multislice_solve(init, spec, MicroscopeParams{}, {}, c), NumericalError);
}
