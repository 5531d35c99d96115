#include "lms/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lms/error.hpp"

namespace lms {

void MicroscopeParams::validate() const {
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (!(alpha_max > 0.0)) throw InvalidArgument("alpha_max must be positive");
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (!std::isfinite(cs) || !std::isfinite(z)) throw InvalidArgument("aberrations must be finite");
}

double aberration_chi(double kx, double ky, const MicroscopeParams& p) {
  using std::numbers::pi;
  const double k2 = kx * kx + ky * ky;
  return 0.5 * pi * p.cs * p.lambda * p.lambda * p.lambda * k2 * k2 - pi * p.z * p.lambda * k2;
}

int aperture(double kx, double ky, const MicroscopeParams& p) {
  return p.lambda * std::hypot(kx, ky) < p.alpha_max ? 1 : 0;
}

std::size_t aperture_pixel_count(const GridGeometry& g, const MicroscopeParams& p) {
  std::size_t count = 0;
  for (int jy = 0; jy < g.ny; ++jy)
    for (int jx = 0; jx < g.nx; ++jx) count += aperture(freq_x(g, jx), freq_y(g, jy), p);
  return count;
}

double probe_norm_factor(const GridGeometry& g, const MicroscopeParams& p) {
  const std::size_t count = aperture_pixel_count(g, p);
  if (count < 2) throw InvalidArgument("aperture passes no nonzero frequency on this grid (alpha_max too small)");
  return std::sqrt(static_cast<double>(g.size()) / static_cast<double>(count));
}

namespace {

// exp(-2 pi i (mx*px/nx + my*py/ny)) with the fractional phase reduced exactly in integers.
cplx modulation(int mx, int my, Pixel pos, const GridGeometry& g) {
  const long long ax = wrap_index(static_cast<int>((static_cast<long long>(mx) * pos.x) % g.nx), g.nx);
  const long long ay = wrap_index(static_cast<int>((static_cast<long long>(my) * pos.y) % g.ny), g.ny);
  const double phase = -2.0 * std::numbers::pi *
                       (static_cast<double>(ax) / g.nx + static_cast<double>(ay) / g.ny);
  return std::polar(1.0, phase);
}

cplx spectrum_unscaled(const GridGeometry& g, const MicroscopeParams& p, Pixel pos, int jx, int jy) {
  const double kx = freq_x(g, jx);
  const double ky = freq_y(g, jy);
  if (!aperture(kx, ky, p)) return {0.0, 0.0};
  return std::polar(1.0, -aberration_chi(kx, ky, p)) *
         modulation(signed_frequency(jx, g.nx), signed_frequency(jy, g.ny), pos, g);
}

}  // namespace

cplx probe_spectrum_value(const GridGeometry& g, const MicroscopeParams& p, Pixel pos, int jx, int jy,
                          double norm_factor) {
  return norm_factor * spectrum_unscaled(g, p, pos, jx, jy);
}

ComplexField probe_spectrum(const GridGeometry& g, const MicroscopeParams& p, Pixel pos) {
  p.validate();
  const double c = probe_norm_factor(g, p);
  ComplexField spec(g);
  for (int jy = 0; jy < g.ny; ++jy)
    for (int jx = 0; jx < g.nx; ++jx) spec(jx, jy) = c * spectrum_unscaled(g, p, pos, jx, jy);
  return spec;
}

ComplexField build_probe(Pixel pos, const MicroscopeParams& p, const GridGeometry& g) {
  ComplexField field = probe_spectrum(g, p, pos);
  dft2_inplace(field, Direction::inverse);
  return field;
}

double probe_mass_radius(const GridGeometry& g, const MicroscopeParams& p, double fraction) {
  const ComplexField probe = build_probe({0, 0}, p, g);
  std::vector<std::pair<double, double>> samples;
  samples.reserve(probe.size());
  double total = 0.0;
  for (int y = 0; y < g.ny; ++y) {
    for (int x = 0; x < g.nx; ++x) {
      const double dx = signed_offset(x, g.nx) * g.px();
      const double dy = signed_offset(y, g.ny) * g.py();
      const double w = std::norm(probe(x, y));
      samples.emplace_back(std::hypot(dx, dy), w);
      total += w;
    }
  }
  std::sort(samples.begin(), samples.end());
  double acc = 0.0;
  for (const auto& [r, w] : samples) {
    acc += w;
    if (acc >= fraction * total) return r;
  }
  return samples.back().first;
}

}  // namespace lms
