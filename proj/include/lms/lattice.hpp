#pragma once

#include <optional>
#include <vector>

#include "lms/grid.hpp"

namespace lms {

enum class LatticeMode { aligned, half_shift };

/// Case 1: R = c P (at least as many input waves as probes). Case 2: P = c R.
enum class LatticeCase { one_to_many, many_to_one };

/// Probe lattice P and input-wave lattice I on the pixel grid, plus the subsampled input set I_f.
/// Both lattices cover the periodic domain and have integral pixel spacing, so every lattice
/// translation is an exact grid translation.
struct LatticePair {
  GridGeometry geom;
  int probe_nx = 0;  ///< P_x
  int probe_ny = 0;  ///< P_y
  int probe_step_x = 0;  ///< p_x in pixels
  int probe_step_y = 0;
  int input_nx = 0;  ///< R_x
  int input_ny = 0;  ///< R_y
  int input_step_x = 0;  ///< r_x in pixels
  int input_step_y = 0;
  Pixel offset{};  ///< I_offset in pixels
  LatticeMode mode = LatticeMode::aligned;
  LatticeCase kind = LatticeCase::one_to_many;
  int c = 1;
  int d = 1;
  int f = 1;
  /// Period of the coefficient reuse in probe steps: probes (a, b) and (a + rep_x, b) see the
  /// same relative I_f geometry.
  int rep_x = 1;
  int rep_y = 1;

  int sub_nx() const { return input_nx / f; }  ///< I_f points per row
  int sub_ny() const { return input_ny / f; }
  std::size_t sub_count() const { return static_cast<std::size_t>(sub_nx()) * sub_ny(); }
  std::size_t probe_count() const { return static_cast<std::size_t>(probe_nx) * probe_ny; }
  std::size_t representative_count() const { return static_cast<std::size_t>(rep_x) * rep_y; }

  /// Pixel position of probe lattice index (a, b).
  Pixel probe_position(Pixel idx) const { return {idx.x * probe_step_x, idx.y * probe_step_y}; }
  /// Probe lattice index of a pixel position, if it lies on the lattice.
  std::optional<Pixel> probe_index(Pixel pos) const;
  /// Pixel position of I_f element with flat index `i` (row-major over sub_nx x sub_ny).
  Pixel input_position(int i) const;
  /// Flat I_f index of a pixel position, if it lies on I_f.
  std::optional<int> input_index(Pixel pos) const;
  /// Flat index of the representative responsible for probe index `idx`.
  int representative_of(Pixel idx) const { return wrap_index(idx.y, rep_y) * rep_x + wrap_index(idx.x, rep_x); }
  Pixel representative_index(int r) const { return {r % rep_x, r / rep_x}; }
};

/// Builds compatible lattices. Counts that are not multiples of f are rounded up (adjusting the
/// other lattice) as long as the result keeps integral pixel spacing. half_shift offsets the input
/// lattice by half a probe step (rounded down to whole pixels). Throws InvalidArgument otherwise.
LatticePair build_lattices(const GridGeometry& geom, int probe_nx, int probe_ny, int input_nx, int input_ny,
                           LatticeMode mode, int f);
/// Input lattice with the same counts as the probe lattice.
LatticePair build_lattices(const GridGeometry& geom, int probe_nx, int probe_ny, LatticeMode mode, int f);

struct Neighbor {
  int index;      ///< flat I_f index
  Pixel position; ///< absolute pixel position
  Pixel offset;   ///< signed wrapped offset from the probe
};

/// The L points of I_f nearest to `probe` (pixel position) in torus distance, ordered by distance
/// and then by (dy, dx) of the signed wrapped offset.
std::vector<Neighbor> neighbor_set(Pixel probe, const LatticePair& lattice, int L);

}  // namespace lms
