#pragma once

#include <vector>

#include "lms/grid.hpp"
#include "lms/multislice.hpp"
#include "lms/optics.hpp"
#include "lms/specimen.hpp"

namespace lms {

/// Aperture-passing Fourier pixels (FFT-order slots) on the f-strided sublattice through the
/// zero frequency.
struct FrequencySet {
  std::vector<Pixel> entries;
  int f = 1;
};

/// f = 1 gives every aperture-passing pixel. Throws InvalidArgument for f < 1 or when the
/// aperture is below the grid's Fourier resolution.
FrequencySet build_frequency_set(const GridGeometry& g, const MicroscopeParams& params, int f);

/// Inverse DFT of a discrete delta at the FFT-order slot `entry`.
ComplexField plane_wave(Pixel entry, const GridGeometry& g);

/// Sum over the set of probe Fourier coefficients times plane waves: the PRISM approximation
/// of the initial probe (exact for f = 1).
ComplexField prism_init_approx(const GridGeometry& g, const MicroscopeParams& params, int f, Pixel probe);

struct PrismOptions {
  int f = 1;
  bool crop = false;  ///< crop each exit wave to (X/f) x (Y/f) centered at the probe
  PropagatorSpec propagator{};
};

/// Propagated plane waves for every entry of the frequency set; phase 1 of PRISM.
struct PrismBasis {
  FrequencySet set;
  std::vector<PlacedField> propagated;
};
PrismBasis prism_propagate(const Specimen& spec, const MicroscopeParams& params, int f, const PropagatorSpec& prop,
                           OpCounters& counters);

/// Phase 2: linear reconstruction of the exit waves for the requested probes.
std::vector<PlacedField> prism_reconstruct(const PrismBasis& basis, const MicroscopeParams& params,
                                           const std::vector<Pixel>& probes, bool crop, OpCounters& counters);

/// Both phases. Counters: multislice_calls = |K_f|, combination_mac_count = |P| |K_f| X'Y',
/// coefficient_eval_count = |P| |K_f|.
std::vector<PlacedField> prism_simulate(const Specimen& spec, const MicroscopeParams& params,
                                        const std::vector<Pixel>& probes, const PrismOptions& opts,
                                        OpCounters& counters);

}  // namespace lms
