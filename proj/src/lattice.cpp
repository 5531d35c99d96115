#include "lms/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "lms/error.hpp"

namespace lms {

std::optional<Pixel> LatticePair::probe_index(Pixel pos) const {
  pos = {wrap_index(pos.x, geom.nx), wrap_index(pos.y, geom.ny)};
  if (pos.x % probe_step_x != 0 || pos.y % probe_step_y != 0) return std::nullopt;
  return Pixel{pos.x / probe_step_x, pos.y / probe_step_y};
}

Pixel LatticePair::input_position(int i) const {
  const int a = i % sub_nx();
  const int b = i / sub_nx();
  return {wrap_index(a * f * input_step_x + offset.x, geom.nx), wrap_index(b * f * input_step_y + offset.y, geom.ny)};
}

std::optional<int> LatticePair::input_index(Pixel pos) const {
  const int sx = f * input_step_x;
  const int sy = f * input_step_y;
  const int rx = wrap_index(pos.x - offset.x, geom.nx);
  const int ry = wrap_index(pos.y - offset.y, geom.ny);
  if (rx % sx != 0 || ry % sy != 0) return std::nullopt;
  return (ry / sy) * sub_nx() + rx / sx;
}

namespace {

int round_up(int v, int m) { return ((v + m - 1) / m) * m; }

int pixel_step(int n_pixels, int count, const char* what) {
  if (count < 1) throw InvalidArgument(std::string(what) + " count must be >= 1");
  if (n_pixels % count != 0)
    throw InvalidArgument(std::string(what) + " lattice of " + std::to_string(count) +
                          " points does not have an integral pixel spacing on " + std::to_string(n_pixels) +
                          " pixels");
  return n_pixels / count;
}

}  // namespace

LatticePair build_lattices(const GridGeometry& geom, int probe_nx, int probe_ny, int input_nx, int input_ny,
                           LatticeMode mode, int f) {
  if (f < 1) throw InvalidArgument("subsampling factor f must be >= 1");
  if (probe_nx < 1 || probe_ny < 1 || input_nx < 1 || input_ny < 1)
    throw InvalidArgument("lattice counts must be >= 1");
  LatticePair lp;
  lp.geom = geom;
  lp.mode = mode;
  lp.f = f;
  if (input_nx % probe_nx == 0 && input_ny % probe_ny == 0) {
    lp.kind = LatticeCase::one_to_many;
    lp.c = input_nx / probe_nx;
    lp.d = input_ny / probe_ny;
    // R must be a multiple of f; keep R = c P by rounding P so that c P is a multiple of f.
    const int px_mult = f / std::gcd(f, lp.c);
    const int py_mult = f / std::gcd(f, lp.d);
    probe_nx = round_up(probe_nx, px_mult);
    probe_ny = round_up(probe_ny, py_mult);
    input_nx = lp.c * probe_nx;
    input_ny = lp.d * probe_ny;
  } else if (probe_nx % input_nx == 0 && probe_ny % input_ny == 0) {
    lp.kind = LatticeCase::many_to_one;
    lp.c = probe_nx / input_nx;
    lp.d = probe_ny / input_ny;
    input_nx = round_up(input_nx, f);
    input_ny = round_up(input_ny, f);
    probe_nx = lp.c * input_nx;
    probe_ny = lp.d * input_ny;
  } else {
    throw InvalidArgument("incompatible lattices: one lattice's counts must be integer multiples of the other's");
  }
  lp.probe_nx = probe_nx;
  lp.probe_ny = probe_ny;
  lp.input_nx = input_nx;
  lp.input_ny = input_ny;
  lp.probe_step_x = pixel_step(geom.nx, probe_nx, "probe");
  lp.probe_step_y = pixel_step(geom.ny, probe_ny, "probe");
  lp.input_step_x = pixel_step(geom.nx, input_nx, "input");
  lp.input_step_y = pixel_step(geom.ny, input_ny, "input");
  lp.offset = mode == LatticeMode::half_shift ? Pixel{lp.probe_step_x / 2, lp.probe_step_y / 2} : Pixel{0, 0};
  const int sx = f * lp.input_step_x;
  const int sy = f * lp.input_step_y;
  lp.rep_x = sx / std::gcd(sx, lp.probe_step_x);
  lp.rep_y = sy / std::gcd(sy, lp.probe_step_y);
  return lp;
}

LatticePair build_lattices(const GridGeometry& geom, int probe_nx, int probe_ny, LatticeMode mode, int f) {
  return build_lattices(geom, probe_nx, probe_ny, probe_nx, probe_ny, mode, f);
}

std::vector<Neighbor> neighbor_set(Pixel probe, const LatticePair& lattice, int L) {
  const auto count = static_cast<int>(lattice.sub_count());
  if (L < 1 || L > count)
    throw InvalidArgument("L = " + std::to_string(L) + " outside [1, |I_f| = " + std::to_string(count) + "]");
  const auto& g = lattice.geom;
  struct Key {
    double d2;
    int dy;
    int dx;
    int index;
  };
  std::vector<Key> keys;
  keys.reserve(static_cast<std::size_t>(count));
  const double px = g.px();
  const double py = g.py();
  for (int i = 0; i < count; ++i) {
    const Pixel pos = lattice.input_position(i);
    const int dx = signed_offset(pos.x - probe.x, g.nx);
    const int dy = signed_offset(pos.y - probe.y, g.ny);
    keys.push_back({(dx * px) * (dx * px) + (dy * py) * (dy * py), dy, dx, i});
  }
  // Distances equal up to roundoff are ties, so equidistant points order by (dy, dx) only.
  auto less = [](const Key& a, const Key& b) {
    if (std::abs(a.d2 - b.d2) > 1e-12 * std::max(a.d2, b.d2)) return a.d2 < b.d2;
    return std::tie(a.dy, a.dx) < std::tie(b.dy, b.dx);
  };
  std::partial_sort(keys.begin(), keys.begin() + L, keys.end(), less);
  std::vector<Neighbor> out;
  out.reserve(static_cast<std::size_t>(L));
  for (int k = 0; k < L; ++k) {
    const auto& key = keys[static_cast<std::size_t>(k)];
    out.push_back({key.index, lattice.input_position(key.index), {key.dx, key.dy}});
  }
  return out;
}

}  // namespace lms
