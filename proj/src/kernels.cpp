#include "lms/kernels.hpp"

#include <exception>

#include "lms/error.hpp"

namespace lms::kernels {

namespace {
int g_workers = 0;
}

void set_workers(int workers) {
  g_workers = workers;
  if (workers > 0) omp_set_num_threads(workers);
}

int workers() { return g_workers > 0 ? g_workers : omp_get_max_threads(); }

void accumulate(PlacedField& dst, const PlacedField& src, cplx coeff) {
  const auto& g = dst.parent;
  const int nx = g.nx;
  const int ny = g.ny;
  const int sw = src.field.nx();
  const int sh = src.field.ny();
  const int dw = dst.field.nx();
  const int dh = dst.field.ny();
  for (int y = 0; y < dh; ++y) {
    const int sy = wrap_index(dst.origin.y + y - src.origin.y, ny);
    if (sy >= sh) continue;
    int sx = wrap_index(dst.origin.x - src.origin.x, nx);
    for (int x = 0; x < dw; ++x) {
      if (sx < sw) dst.field(x, y) += coeff * src.field(sx, sy);
      if (++sx == nx) sx = 0;
    }
  }
}

namespace {

PlacedField combine_one(std::span<const PlacedField* const> sources, const Combination& combo,
                        const GridGeometry& parent, Pixel window) {
  const Pixel origin = window_origin(parent, combo.center, window);
  GridGeometry wg{window.x, window.y, parent.lx * window.x / parent.nx, parent.ly * window.y / parent.ny};
  PlacedField out{ComplexField(wg), origin, parent};
  for (const auto& t : combo.terms) accumulate(out, *sources[t.source], t.coeff);
  return out;
}

void check_inputs(std::span<const PlacedField* const> sources, const std::vector<Combination>& combos,
                  const GridGeometry& parent, Pixel window) {
  if (window.x < 1 || window.y < 1 || window.x > parent.nx || window.y > parent.ny)
    throw InvalidArgument("combination window exceeds grid");
  for (const auto* s : sources)
    if (s == nullptr || !(s->parent == parent)) throw InvalidArgument("combination source missing or on another grid");
  for (const auto& c : combos)
    for (const auto& t : c.terms)
      if (t.source >= sources.size()) throw InvalidArgument("combination term references unknown source");
}

std::uint64_t mac_count(const std::vector<Combination>& combos, Pixel window) {
  std::uint64_t terms = 0;
  for (const auto& c : combos) terms += c.terms.size();
  return terms * static_cast<std::uint64_t>(window.x) * static_cast<std::uint64_t>(window.y);
}

}  // namespace

std::vector<PlacedField> combine_batch(std::span<const PlacedField* const> sources,
                                       const std::vector<Combination>& combos, const GridGeometry& parent,
                                       Pixel window, OpCounters& counters, Exec exec) {
  check_inputs(sources, combos, parent, window);
  std::vector<PlacedField> out(combos.size());
  const auto n = static_cast<long long>(combos.size());
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (long long i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = combine_one(sources, combos[static_cast<std::size_t>(i)], parent, window);
  counters.combination_mac_count += mac_count(combos, window);
  return out;
}

std::vector<PlacedField> combine_batch_reference(std::span<const PlacedField* const> sources,
                                                 const std::vector<Combination>& combos,
                                                 const GridGeometry& parent, Pixel window, OpCounters& counters) {
  check_inputs(sources, combos, parent, window);
  std::vector<ComplexField> embedded;
  embedded.reserve(sources.size());
  for (const auto* s : sources) embedded.push_back(embed(*s));
  std::vector<PlacedField> out;
  out.reserve(combos.size());
  for (const auto& combo : combos) {
    ComplexField sum(parent);
    for (const auto& t : combo.terms) {
      const auto& src = embedded[t.source];
      for (int y = 0; y < parent.ny; ++y)
        for (int x = 0; x < parent.nx; ++x) sum(x, y) += t.coeff * src(x, y);
    }
    out.push_back(crop_placed(sum, combo.center, window));
  }
  counters.combination_mac_count += mac_count(combos, window);
  return out;
}

}  // namespace lms::kernels
