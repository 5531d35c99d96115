#include "lms/inputwaves.hpp"

#include <cmath>
#include <numbers>

#include "lms/error.hpp"

namespace lms {

void InputWaveKind::validate() const {
  if ((tag == InputWaveTag::trig_tensor || tag == InputWaveTag::trig_radial) && n < 1)
    throw InvalidArgument("trig input wave degree must be >= 1");
  if (tag == InputWaveTag::gaussian && !(sigma_g > 0.0)) throw InvalidArgument("gaussian width must be positive");
}

std::string InputWaveKind::name() const {
  switch (tag) {
    case InputWaveTag::probe: return "probe";
    case InputWaveTag::trig_tensor: return "trig_tensor";
    case InputWaveTag::trig_radial: return "trig_radial";
    case InputWaveTag::gaussian: return "gaussian";
    case InputWaveTag::pixel_delta: return "pixel_delta";
  }
  return "unknown";
}

InputWaveTag InputWaveKind::parse_tag(const std::string& s) {
  if (s == "probe") return InputWaveTag::probe;
  if (s == "trig_tensor") return InputWaveTag::trig_tensor;
  if (s == "trig_radial") return InputWaveTag::trig_radial;
  if (s == "gaussian") return InputWaveTag::gaussian;
  if (s == "pixel_delta") return InputWaveTag::pixel_delta;
  throw InvalidArgument("unknown input wave kind '" + s + "'");
}

cplx trig_poly_phi(int n, double t) {
  const double h = std::numbers::pi / (2.0 * n + 2.0);
  double s = 1.0;  // k = 0
  for (int k = 1; k <= n; ++k) s += 2.0 * std::cos(k * t) * std::cos(k * h);
  return {s, 0.0};
}

ModulationMatrices modulation_matrices(int n) {
  if (n < 0) throw InvalidArgument("modulation matrices need n >= 0");
  const int size = 2 * n + 1;
  ModulationMatrices mm{n, Eigen::MatrixXcd(size, size), Eigen::MatrixXcd(size, size), Eigen::MatrixXcd(size, size)};
  Eigen::VectorXd c(size);
  for (int r = 0; r < size; ++r) c(r) = std::cos((r - n) * std::numbers::pi / (2.0 * n + 2.0));
  for (int r = 0; r < size; ++r) {
    for (int s = 0; s < size; ++s) {
      const long long jk = static_cast<long long>(r - n) * (s - n);
      const double frac = static_cast<double>(((jk % size) + size) % size) / size;
      mm.w(r, s) = std::polar(1.0, -2.0 * std::numbers::pi * frac);
    }
  }
  mm.m = mm.w * c.asDiagonal();
  mm.m_inv = (c.cwiseInverse().asDiagonal() * mm.w.adjoint()) / static_cast<double>(size);
  const double residual = (mm.m * mm.m_inv - Eigen::MatrixXcd::Identity(size, size)).cwiseAbs().maxCoeff();
  if (residual > 1e-10) throw NumericalError("modulation matrix inverse check failed");
  return mm;
}

namespace {

void normalize(ComplexField& f) {
  const double nrm = f.norm2();
  if (!(nrm > 0.0)) throw NumericalError("input wave vanishes on this grid");
  f *= 1.0 / nrm;
}

void check_trig_degree(int n, const GridGeometry& g) {
  if (2 * n + 1 > g.nx || 2 * n + 1 > g.ny)
    throw InvalidArgument("trig degree " + std::to_string(n) + " exceeds the grid Nyquist limit");
}

}  // namespace

ComplexField make_input_wave(const InputWaveKind& kind, const MicroscopeParams& params, const GridGeometry& g) {
  kind.validate();
  using std::numbers::pi;
  ComplexField u(g);
  switch (kind.tag) {
    case InputWaveTag::probe:
      return build_probe({0, 0}, params, g);
    case InputWaveTag::trig_tensor: {
      check_trig_degree(kind.n, g);
      std::vector<double> fx(static_cast<std::size_t>(g.nx));
      std::vector<double> fy(static_cast<std::size_t>(g.ny));
      for (int x = 0; x < g.nx; ++x) fx[x] = trig_poly_phi(kind.n, 2.0 * pi * x / g.nx).real();
      for (int y = 0; y < g.ny; ++y) fy[y] = trig_poly_phi(kind.n, 2.0 * pi * y / g.ny).real();
      for (int y = 0; y < g.ny; ++y)
        for (int x = 0; x < g.nx; ++x) u(x, y) = fx[x] * fy[y];
      break;
    }
    case InputWaveTag::trig_radial: {
      check_trig_degree(kind.n, g);
      for (int y = 0; y < g.ny; ++y) {
        const double ty = static_cast<double>(signed_offset(y, g.ny)) / g.ny;
        for (int x = 0; x < g.nx; ++x) {
          const double tx = static_cast<double>(signed_offset(x, g.nx)) / g.nx;
          u(x, y) = trig_poly_phi(kind.n, 2.0 * pi * std::hypot(tx, ty));
        }
      }
      break;
    }
    case InputWaveTag::gaussian: {
      const double inv = 1.0 / (2.0 * kind.sigma_g * kind.sigma_g);
      for (int y = 0; y < g.ny; ++y) {
        const double dy = signed_offset(y, g.ny) * g.py();
        for (int x = 0; x < g.nx; ++x) {
          const double dx = signed_offset(x, g.nx) * g.px();
          u(x, y) = std::exp(-(dx * dx + dy * dy) * inv);
        }
      }
      break;
    }
    case InputWaveTag::pixel_delta:
      u(0, 0) = 1.0;
      break;
  }
  normalize(u);
  return u;
}

int trig_degree_from_probe(const MicroscopeParams& params, double fourier_pixel) {
  if (!(fourier_pixel > 0.0)) throw InvalidArgument("fourier pixel size must be positive");
  const auto n = static_cast<int>(std::lround(params.alpha_max / (params.lambda * fourier_pixel)));
  return std::max(1, n);
}

double gaussian_width_from_probe(const MicroscopeParams& params) { return params.lambda / (2.0 * params.alpha_max); }

}  // namespace lms
