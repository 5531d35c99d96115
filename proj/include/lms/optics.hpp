#pragma once

#include "lms/grid.hpp"

namespace lms {

/// Microscope settings. All lengths in Angstrom (cs and z included), angles in rad.
struct MicroscopeParams {
  double lambda = 0.0250793;
  double cs = -2000.0;
  double z = 100.0;
  double alpha_max = 0.026;
  double sigma = 1.0;  ///< beam-sample interaction constant, opaque positive scalar

  void validate() const;
};

/// chi(k) = 1/2 pi Cs lambda^3 |k|^4 - pi Z lambda |k|^2
double aberration_chi(double kx, double ky, const MicroscopeParams& p);

/// Ideal objective aperture: 1 iff lambda |k| < alpha_max (strict).
int aperture(double kx, double ky, const MicroscopeParams& p);

/// Physical frequency of the FFT-order slot (jx, jy).
inline double freq_x(const GridGeometry& g, int jx) { return signed_frequency(jx, g.nx) / g.lx; }
inline double freq_y(const GridGeometry& g, int jy) { return signed_frequency(jy, g.ny) / g.ly; }

/// Number of Fourier pixels passing the aperture.
std::size_t aperture_pixel_count(const GridGeometry& g, const MicroscopeParams& p);

/// Scale that makes the synthesized probe unit-norm: sqrt(nx*ny / |K|).
double probe_norm_factor(const GridGeometry& g, const MicroscopeParams& p);

/// Analytic DFT value of the unit-norm probe at `pos` for FFT-order slot (jx, jy):
/// c * exp(-i chi(g)) A(g) exp(-2 pi i g.p), with c = probe_norm_factor(). The modulation is
/// evaluated with integer phase arithmetic so that a pixel shift is an exact grid translation.
cplx probe_spectrum_value(const GridGeometry& g, const MicroscopeParams& p, Pixel pos, int jx, int jy,
                          double norm_factor);

/// Full DFT of the unit-norm probe in FFT order.
ComplexField probe_spectrum(const GridGeometry& g, const MicroscopeParams& p, Pixel pos);

/// Real-space probe at pixel position `pos`, L2-normalized to 1.
/// Throws InvalidArgument if the aperture passes no nonzero frequency on this grid.
ComplexField build_probe(Pixel pos, const MicroscopeParams& p, const GridGeometry& g);

/// Radius (Angstrom) around the probe center containing `fraction` of its intensity.
double probe_mass_radius(const GridGeometry& g, const MicroscopeParams& p, double fraction);

}  // namespace lms
