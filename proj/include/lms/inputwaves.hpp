#pragma once

#include <Eigen/Dense>
#include <string>

#include "lms/grid.hpp"
#include "lms/optics.hpp"

namespace lms {

enum class InputWaveTag { probe, trig_tensor, trig_radial, gaussian, pixel_delta };

/// Generator u of the input-wave dictionary.
struct InputWaveKind {
  InputWaveTag tag = InputWaveTag::probe;
  int n = 1;             ///< trig degree
  double sigma_g = 0.5;  ///< Gaussian width in Angstrom (unrelated to the interaction constant)

  static InputWaveKind probe() { return {InputWaveTag::probe}; }
  static InputWaveKind trig_tensor(int n) { return {InputWaveTag::trig_tensor, n}; }
  static InputWaveKind trig_radial(int n) { return {InputWaveTag::trig_radial, n}; }
  static InputWaveKind gaussian(double sigma_g) { return {InputWaveTag::gaussian, 1, sigma_g}; }
  static InputWaveKind pixel_delta() { return {InputWaveTag::pixel_delta}; }

  void validate() const;
  std::string name() const;
  /// Parses "probe", "trig_tensor", "trig_radial", "gaussian", "pixel_delta".
  static InputWaveTag parse_tag(const std::string& s);

  friend bool operator==(const InputWaveKind&, const InputWaveKind&) = default;
};

/// phi_n(t) = sum_{k=-n}^{n} e^{ikt} cos(k pi / (2n+2)); real-valued.
cplx trig_poly_phi(int n, double t);

/// Change of basis between the elementary waves e^{ikt} (|k| <= n) and the translations
/// phi_n(t - 2 pi j / (2n+1)). Row j of `m` expresses translation j in elementary waves;
/// `m_inv` is its closed-form inverse diag(1/cos) W^* / (2n+1). Index r <-> k = r - n.
struct ModulationMatrices {
  int n = 0;
  Eigen::MatrixXcd w;
  Eigen::MatrixXcd m;
  Eigen::MatrixXcd m_inv;
};
ModulationMatrices modulation_matrices(int n);

/// Unit-norm input wave centered at the grid origin. Trig arguments use t = 2 pi x / l so one
/// period spans the simulation window. Throws InvalidArgument if 2n+1 exceeds the grid.
ComplexField make_input_wave(const InputWaveKind& kind, const MicroscopeParams& params, const GridGeometry& geom);

/// n = round(alpha_max / (lambda q)), at least 1.
int trig_degree_from_probe(const MicroscopeParams& params, double fourier_pixel);

/// sigma_g = lambda / (2 alpha_max).
double gaussian_width_from_probe(const MicroscopeParams& params);

}  // namespace lms
