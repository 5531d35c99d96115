#include "lms/prism.hpp"

#include <numbers>

#include "lms/error.hpp"
#include "lms/kernels.hpp"

namespace lms {

FrequencySet build_frequency_set(const GridGeometry& g, const MicroscopeParams& params, int f) {
  if (f < 1) throw InvalidArgument("interpolation factor must be >= 1");
  params.validate();
  FrequencySet set{{}, f};
  std::size_t nonzero = 0;
  for (int jy = 0; jy < g.ny; ++jy) {
    for (int jx = 0; jx < g.nx; ++jx) {
      if (!aperture(freq_x(g, jx), freq_y(g, jy), params)) continue;
      const int mx = signed_frequency(jx, g.nx);
      const int my = signed_frequency(jy, g.ny);
      if (mx != 0 || my != 0) ++nonzero;
      if (mx % f == 0 && my % f == 0) set.entries.push_back({jx, jy});
    }
  }
  if (nonzero == 0) throw InvalidArgument("aperture is below the grid's Fourier resolution");
  return set;
}

ComplexField plane_wave(Pixel entry, const GridGeometry& g) {
  if (entry.x < 0 || entry.y < 0 || entry.x >= g.nx || entry.y >= g.ny)
    throw InvalidArgument("plane wave entry outside grid");
  ComplexField w(g);
  const double scale = 1.0 / static_cast<double>(g.size());
  const int mx = signed_frequency(entry.x, g.nx);
  const int my = signed_frequency(entry.y, g.ny);
  for (int y = 0; y < g.ny; ++y) {
    const int ay = wrap_index(static_cast<int>((static_cast<long long>(my) * y) % g.ny), g.ny);
    for (int x = 0; x < g.nx; ++x) {
      const int ax = wrap_index(static_cast<int>((static_cast<long long>(mx) * x) % g.nx), g.nx);
      const double phase =
          2.0 * std::numbers::pi * (static_cast<double>(ax) / g.nx + static_cast<double>(ay) / g.ny);
      w(x, y) = std::polar(scale, phase);
    }
  }
  return w;
}

ComplexField prism_init_approx(const GridGeometry& g, const MicroscopeParams& params, int f, Pixel probe) {
  const FrequencySet set = build_frequency_set(g, params, f);
  const double c = probe_norm_factor(g, params);
  ComplexField spec(g);
  for (const auto& e : set.entries) spec(e.x, e.y) = probe_spectrum_value(g, params, probe, e.x, e.y, c);
  dft2_inplace(spec, Direction::inverse);
  return spec;
}

PrismBasis prism_propagate(const Specimen& spec, const MicroscopeParams& params, int f, const PropagatorSpec& prop,
                           OpCounters& counters) {
  const auto& g = spec.geometry();
  if (prop.window && !(*prop.window == Pixel{g.nx, g.ny}))
    throw InvalidArgument("PRISM plane waves cover the whole grid; a reduced computation window is not allowed");
  PrismBasis basis{build_frequency_set(g, params, f), {}};
  const MultisliceSolver solver(spec, params, prop);
  basis.propagated = kernels::propagate_batch(
      solver, basis.set.entries.size(),
      [&](std::size_t k) { return std::make_pair(plane_wave(basis.set.entries[k], g), Pixel{0, 0}); }, counters);
  return basis;
}

std::vector<PlacedField> prism_reconstruct(const PrismBasis& basis, const MicroscopeParams& params,
                                           const std::vector<Pixel>& probes, bool crop, OpCounters& counters) {
  if (basis.propagated.empty()) throw InvalidArgument("empty PRISM basis");
  const auto& g = basis.propagated.front().parent;
  const int f = basis.set.f;
  const Pixel window = crop ? Pixel{std::max(1, g.nx / f), std::max(1, g.ny / f)} : Pixel{g.nx, g.ny};
  const double c = probe_norm_factor(g, params);

  std::vector<const PlacedField*> sources;
  sources.reserve(basis.propagated.size());
  for (const auto& w : basis.propagated) sources.push_back(&w);

  std::vector<kernels::Combination> combos(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const Pixel p = probes[i];
    if (p.x < 0 || p.y < 0 || p.x >= g.nx || p.y >= g.ny) throw InvalidArgument("probe outside grid");
    auto& combo = combos[i];
    combo.center = p;
    combo.terms.reserve(basis.set.entries.size());
    for (std::size_t k = 0; k < basis.set.entries.size(); ++k) {
      const auto& e = basis.set.entries[k];
      combo.terms.push_back({probe_spectrum_value(g, params, p, e.x, e.y, c), k});
    }
  }
  counters.coefficient_eval_count += static_cast<std::uint64_t>(probes.size()) * basis.set.entries.size();
  return kernels::combine_batch(sources, combos, g, window, counters);
}

std::vector<PlacedField> prism_simulate(const Specimen& spec, const MicroscopeParams& params,
                                        const std::vector<Pixel>& probes, const PrismOptions& opts,
                                        OpCounters& counters) {
  const PrismBasis basis = prism_propagate(spec, params, opts.f, opts.propagator, counters);
  return prism_reconstruct(basis, params, probes, opts.crop, counters);
}

}  // namespace lms
