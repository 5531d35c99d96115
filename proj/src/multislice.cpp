#include "lms/multislice.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "lms/error.hpp"

namespace lms {

void PropagatorSpec::validate(const GridGeometry& g) const {
  if (variant == PropagationVariant::realspace) {
    if (k1 < 3 || k2 < 3 || k1 % 2 == 0 || k2 % 2 == 0)
      throw InvalidArgument("realspace kernel sizes must be odd and >= 3");
    if (k1 > g.nx || k2 > g.ny) throw InvalidArgument("realspace kernel larger than grid");
  }
  if (window) {
    if (window->x < 1 || window->y < 1 || window->x > g.nx || window->y > g.ny)
      throw InvalidArgument("computation window exceeds grid");
    const bool full = window->x == g.nx && window->y == g.ny;
    if (variant == PropagationVariant::fourier && !full)
      throw InvalidArgument("fourier propagation on a reduced window wraps around; use the realspace variant");
  }
}

OpCounters& OpCounters::operator+=(const OpCounters& o) {
  multislice_calls += o.multislice_calls;
  fft_count += o.fft_count;
  pointwise_mul_count += o.pointwise_mul_count;
  convolution_mac_count += o.convolution_mac_count;
  combination_mac_count += o.combination_mac_count;
  coefficient_eval_count += o.coefficient_eval_count;
  return *this;
}

ComplexField fourier_propagator(const GridGeometry& g, double lambda, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("slice thickness must be positive");
  ComplexField p(g);
  const double c = -std::numbers::pi * lambda * eps;
  for (int jy = 0; jy < g.ny; ++jy) {
    const double ky = freq_y(g, jy);
    for (int jx = 0; jx < g.nx; ++jx) {
      const double kx = freq_x(g, jx);
      p(jx, jy) = std::polar(1.0, c * (kx * kx + ky * ky));
    }
  }
  return p;
}

RealspaceKernel realspace_kernel(const GridGeometry& g, double lambda, double eps, int k1, int k2) {
  if (!(eps > 0.0)) throw InvalidArgument("slice thickness must be positive");
  RealspaceKernel k{k1, k2, std::vector<cplx>(static_cast<std::size_t>(k1) * k2)};
  const double le = lambda * eps;
  const cplx pre = cplx(0.0, -1.0 / le) * (g.px() * g.py());
  for (int b = -k2 / 2; b <= k2 / 2; ++b) {
    const double y = b * g.py();
    for (int a = -k1 / 2; a <= k1 / 2; ++a) {
      const double x = a * g.px();
      k.values[static_cast<std::size_t>(b + k2 / 2) * k1 + (a + k1 / 2)] =
          pre * std::polar(1.0, std::numbers::pi * (x * x + y * y) / le);
    }
  }
  return k;
}

MultisliceSolver::MultisliceSolver(const Specimen& spec, const MicroscopeParams& params, PropagatorSpec prop)
    : geom_(spec.geometry()), prop_(std::move(prop)) {
  params.validate();
  prop_.validate(geom_);
  transmissions_.reserve(static_cast<std::size_t>(spec.slice_count()));
  for (int j = 0; j < spec.slice_count(); ++j) transmissions_.push_back(transmission(spec.slice(j), geom_, params.sigma));
  const double eps = spec.slice_thickness();
  if (prop_.variant == PropagationVariant::fourier) {
    propagator_ = fourier_propagator(geom_, params.lambda, eps);
    if (prop_.bandlimit) {
      const double kmax = (2.0 / 3.0) * std::min(0.5 * geom_.nx / geom_.lx, 0.5 * geom_.ny / geom_.ly);
      for (int jy = 0; jy < geom_.ny; ++jy)
        for (int jx = 0; jx < geom_.nx; ++jx)
          if (std::hypot(freq_x(geom_, jx), freq_y(geom_, jy)) > kmax) propagator_(jx, jy) = 0.0;
    }
  } else {
    kernel_ = realspace_kernel(geom_, params.lambda, eps, prop_.k1, prop_.k2);
  }
}

Pixel MultisliceSolver::window_size() const {
  return prop_.window ? *prop_.window : Pixel{geom_.nx, geom_.ny};
}

namespace {

void check_finite(const ComplexField& psi, int slice) {
  if (!psi.all_finite())
    throw NumericalError("multislice: non-finite wave after slice " + std::to_string(slice));
}

}  // namespace

void MultisliceSolver::convolve_periodic(ComplexField& psi) const {
  const int nx = psi.nx();
  const int ny = psi.ny();
  const int h1 = kernel_.k1 / 2;
  const int h2 = kernel_.k2 / 2;
  ComplexField out(psi.geometry());
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      cplx acc = 0.0;
      for (int b = -h2; b <= h2; ++b) {
        const int sy = wrap_index(y - b, ny);
        for (int a = -h1; a <= h1; ++a) acc += kernel_(a, b) * psi(wrap_index(x - a, nx), sy);
      }
      out(x, y) = acc;
    }
  }
  psi = std::move(out);
}

void MultisliceSolver::convolve_zero_padded(ComplexField& psi) const {
  const int nx = psi.nx();
  const int ny = psi.ny();
  const int h1 = kernel_.k1 / 2;
  const int h2 = kernel_.k2 / 2;
  ComplexField out(psi.geometry());
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      cplx acc = 0.0;
      for (int b = -h2; b <= h2; ++b) {
        const int sy = y - b;
        if (sy < 0 || sy >= ny) continue;
        for (int a = -h1; a <= h1; ++a) {
          const int sx = x - a;
          if (sx < 0 || sx >= nx) continue;
          acc += kernel_(a, b) * psi(sx, sy);
        }
      }
      out(x, y) = acc;
    }
  }
  psi = std::move(out);
}

ComplexField MultisliceSolver::solve(const ComplexField& init, OpCounters& counters) const {
  if (!(init.geometry() == geom_)) throw InvalidArgument("multislice: initial wave geometry differs from specimen");
  if (prop_.window && !(*prop_.window == Pixel{geom_.nx, geom_.ny}))
    throw InvalidArgument("multislice: a reduced window requires solve_window()");
  if (!init.all_finite()) throw NumericalError("multislice: non-finite initial wave");
  ComplexField psi = init;
  const auto xy = static_cast<std::uint64_t>(geom_.size());
  const auto kk = static_cast<std::uint64_t>(kernel_.k1) * static_cast<std::uint64_t>(kernel_.k2);
  for (int j = 0; j < slice_count(); ++j) {
    auto v = psi.values();
    const auto t = transmissions_[static_cast<std::size_t>(j)].values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= t[i];
    if (prop_.variant == PropagationVariant::fourier) {
      dft2_inplace(psi, Direction::forward);
      const auto p = propagator_.values();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] *= p[i];
      dft2_inplace(psi, Direction::inverse);
      counters.fft_count += 2;
      counters.pointwise_mul_count += 2 * xy;
    } else {
      convolve_periodic(psi);
      counters.pointwise_mul_count += xy;
      counters.convolution_mac_count += xy * kk;
    }
    check_finite(psi, j);
  }
  counters.multislice_calls += 1;
  return psi;
}

PlacedField MultisliceSolver::solve_window(const ComplexField& init, Pixel center, OpCounters& counters) const {
  const Pixel size = window_size();
  if (size == Pixel{geom_.nx, geom_.ny}) return PlacedField{solve(init, counters), {}, geom_};
  if (prop_.variant != PropagationVariant::realspace)
    throw InvalidArgument("multislice: windowed solve requires the realspace variant");
  if (!(init.geometry() == geom_)) throw InvalidArgument("multislice: initial wave geometry differs from specimen");
  if (!init.all_finite()) throw NumericalError("multislice: non-finite initial wave");
  PlacedField placed = crop_placed(init, center, size);
  ComplexField& psi = placed.field;
  const auto xy = static_cast<std::uint64_t>(psi.size());
  const auto kk = static_cast<std::uint64_t>(kernel_.k1) * static_cast<std::uint64_t>(kernel_.k2);
  for (int j = 0; j < slice_count(); ++j) {
    const auto& t = transmissions_[static_cast<std::size_t>(j)];
    for (int y = 0; y < size.y; ++y)
      for (int x = 0; x < size.x; ++x) psi(x, y) *= t.at_wrapped(placed.origin.x + x, placed.origin.y + y);
    convolve_zero_padded(psi);
    counters.pointwise_mul_count += xy;
    counters.convolution_mac_count += xy * kk;
    check_finite(psi, j);
  }
  counters.multislice_calls += 1;
  return placed;
}

ComplexField multislice_solve(const ComplexField& init, const Specimen& spec, const MicroscopeParams& params,
                              const PropagatorSpec& prop, OpCounters& counters) {
  return MultisliceSolver(spec, params, prop).solve(init, counters);
}

}  // namespace lms
