#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lms/grid.hpp"
#include "lms/optics.hpp"
#include "lms/specimen.hpp"

namespace lms {

enum class PropagationVariant { fourier, realspace };

struct PropagatorSpec {
  PropagationVariant variant = PropagationVariant::fourier;
  int k1 = 25;  ///< realspace kernel width (odd, >= 3)
  int k2 = 25;
  /// Realspace only: computation window X' x Y' centered on the wave's support.
  std::optional<Pixel> window;
  /// Zero frequencies above 2/3 of the smaller Nyquist limit after each propagation.
  bool bandlimit = false;

  void validate(const GridGeometry& g) const;
};

/// Operation counts following the per-slice cost model of the split-step solver.
struct OpCounters {
  std::uint64_t multislice_calls = 0;
  std::uint64_t fft_count = 0;
  std::uint64_t pointwise_mul_count = 0;
  std::uint64_t convolution_mac_count = 0;
  std::uint64_t combination_mac_count = 0;   ///< complex multiply-adds when forming linear combinations
  std::uint64_t coefficient_eval_count = 0;  ///< analytic probe coefficients evaluated (PRISM)

  OpCounters& operator+=(const OpCounters& o);
  friend bool operator==(const OpCounters&, const OpCounters&) = default;
};

/// Frequency response exp(-i pi lambda eps |k|^2) in FFT order.
ComplexField fourier_propagator(const GridGeometry& g, double lambda, double eps);

/// Central k1 x k2 samples of q(x,y) = -i/(lambda eps) exp(i pi (x^2+y^2)/(lambda eps)), times px*py.
/// Stored row-major with the zero offset at (k1/2, k2/2).
struct RealspaceKernel {
  int k1 = 0;
  int k2 = 0;
  std::vector<cplx> values;
  cplx operator()(int a, int b) const {  // a in [-k1/2, k1/2], b in [-k2/2, k2/2]
    return values[static_cast<std::size_t>(b + k2 / 2) * k1 + (a + k1 / 2)];
  }
};
RealspaceKernel realspace_kernel(const GridGeometry& g, double lambda, double eps, int k1, int k2);

/// Precomputed transmission functions and propagator for one specimen; solve() is const and
/// safe to call concurrently.
class MultisliceSolver {
 public:
  MultisliceSolver(const Specimen& spec, const MicroscopeParams& params, PropagatorSpec prop);

  const GridGeometry& geometry() const { return geom_; }
  const PropagatorSpec& propagator() const { return prop_; }
  int slice_count() const { return static_cast<int>(transmissions_.size()); }

  /// Full-grid solve. For a realspace window smaller than the grid use solve_window().
  ComplexField solve(const ComplexField& init, OpCounters& counters) const;

  /// Realspace solve on the configured window centered at `center`; zero boundary outside.
  PlacedField solve_window(const ComplexField& init, Pixel center, OpCounters& counters) const;

  /// Window size used by solve_window (full grid when none configured).
  Pixel window_size() const;

 private:
  void convolve_periodic(ComplexField& psi) const;
  void convolve_zero_padded(ComplexField& psi) const;

  GridGeometry geom_;
  PropagatorSpec prop_;
  std::vector<ComplexField> transmissions_;
  ComplexField propagator_;  // fourier variant
  RealspaceKernel kernel_;   // realspace variant
};

/// Alternates psi <- t_j psi and psi <- q * psi for every slice.
ComplexField multislice_solve(const ComplexField& init, const Specimen& spec, const MicroscopeParams& params,
                              const PropagatorSpec& prop, OpCounters& counters);

}  // namespace lms
