#include "lms/cost.hpp"

#include <algorithm>
#include <cmath>

#include "lms/error.hpp"

namespace lms::cost {

double multislice(int n_slices, double xy) { return n_slices * (2.0 * xy + 2.0 * xy * std::log2(xy)); }

double multislice_realspace(int n_slices, double xy, double k1k2) { return n_slices * (xy + xy * k1k2); }

double prism(double k_f, double probes, int n_slices, double xy, int f) {
  return k_f * multislice(n_slices, xy) + probes * k_f * xy / (static_cast<double>(f) * f);
}

double lma(double inputs, double probes, int L, int n_slices, double xy, double xy_store) {
  return inputs * multislice(n_slices, xy) + probes * L * xy_store;
}

double lma_realspace(double inputs, double probes, int L, int n_slices, double xy_store, double k1k2) {
  return inputs * multislice_realspace(n_slices, xy_store, k1k2) + probes * L * xy_store;
}

int crossover_min_f(double xy, double k1k2) {
  if (!(xy >= 1) || !(k1k2 >= 1)) throw InvalidArgument("crossover needs XY >= 1 and K1K2 >= 1");
  const double bound = std::sqrt(0.5 * (1.0 + k1k2) / (1.0 + std::log2(xy)));
  int f = std::max(1, static_cast<int>(std::ceil(bound)));
  // Guard against ceil landing one above an exact integer bound.
  if (f > 1 && static_cast<double>(f - 1) >= bound) --f;
  return f;
}

}  // namespace lms::cost
