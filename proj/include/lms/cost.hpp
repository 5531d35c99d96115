#pragma once

#include <cstdint>

namespace lms::cost {

// Operation-count model of the three solvers. log is base 2, the FFT's natural unit.

/// N (2XY + 2XY log XY): one Fourier-variant solve.
double multislice(int n_slices, double xy);
/// N (XY + XY K1 K2): one realspace solve on an XY window.
double multislice_realspace(int n_slices, double xy, double k1k2);
/// |K_f| T_ms(XY) + |P| |K_f| XY / f^2.
double prism(double k_f, double probes, int n_slices, double xy, int f);
/// |I_f| T_ms(XY) + |P| L X'Y'.
double lma(double inputs, double probes, int L, int n_slices, double xy, double xy_store);
/// |I_f| T~_ms(X'Y') + |P| L X'Y'.
double lma_realspace(double inputs, double probes, int L, int n_slices, double xy_store, double k1k2);

/// Smallest integer f with sqrt((1 + K1K2) / (2 (1 + log XY))) <= f, i.e. from which the realspace
/// variant on an (X/f) x (Y/f) window is no more expensive than the Fourier variant.
int crossover_min_f(double xy, double k1k2);

}  // namespace lms::cost
