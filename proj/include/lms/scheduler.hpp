#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "lms/lattice.hpp"
#include "lms/multislice.hpp"
#include "lms/plan.hpp"
#include "lms/specimen.hpp"

namespace lms {

/// Sorted I_f indices each probe depends on (its L nearest inputs), cached per probe index.
class NeighborTable {
 public:
  NeighborTable(const LatticePair& lattice, int L);

  const LatticePair& lattice() const { return lattice_; }
  int L() const { return L_; }
  const std::vector<int>& inputs(Pixel probe_index) const;

 private:
  LatticePair lattice_;
  int L_;
  std::vector<std::vector<Pixel>> rep_offsets_;
  mutable std::unordered_map<long long, std::vector<int>> cache_;
};

/// Number of distinct inputs needed by a set of probes.
std::size_t needed_input_count(const std::vector<Pixel>& probes, const NeighborTable& table);
std::vector<int> needed_inputs(const std::vector<Pixel>& probes, const NeighborTable& table);

/// Ordered probe sets P_1..P_l (probe lattice indices) processed under a bound M on resident
/// propagated input waves.
struct Partition {
  std::vector<std::vector<Pixel>> sets;
  std::size_t memory_bound = 0;
};

enum class PartitionStrategy { row_by_row, rectangles, greedy };
PartitionStrategy parse_strategy(const std::string& s);
const char* strategy_name(PartitionStrategy s);

/// sum_j |I_j| - sum_j |I_j intersect I_{j+1}|: propagations needed when only the inputs of the
/// current set are kept resident.
std::size_t partition_cost(const Partition& partition, const NeighborTable& table);

/// Throws InvalidArgument unless the sets are disjoint, cover `pixels`, and respect the bound.
void validate_partition(const Partition& partition, const std::vector<Pixel>& pixels, const NeighborTable& table);

/// Builds a partition of `pixels`. Throws InvalidArgument if M < L.
/// row_by_row: scanline order, a new set whenever the next pixel would exceed M.
/// rectangles: the largest-area w x h tile that fits at the region origin, tiled row-major;
///   a tile that exceeds M elsewhere (representatives differ) falls back to row_by_row inside it.
/// greedy: grows from `seed` through the 8-neighborhood of the last-added pixel by minimal union
///   size (scanline order on ties); the first candidate that does not fit opens the next set. With
///   no unassigned neighbor left, the nearest unassigned pixel becomes the candidate.
Partition partition_build(PartitionStrategy strategy, const std::vector<Pixel>& pixels, const NeighborTable& table,
                          std::size_t M, Pixel seed = {0, 0});

/// 16-bit PGM with the set index of every probe pixel (0 for pixels outside the partition,
/// otherwise 1 + set index scaled to the full range).
void save_partition_pgm(const std::string& path, const Partition& partition, int probe_nx, int probe_ny);

struct RecomputeOptions {
  double spread_angle = 0.0;   ///< rad; 0 means 2 * alpha_max
  double support_tol = 1e-12;  ///< input support is where |u| > support_tol * max|u|
  double change_tol = 1e-12;
};

struct RecomputePlan {
  std::vector<Pixel> changed_region;  ///< specimen-plane pixels
  std::vector<Pixel> probes_to_redo;  ///< subset of the requested probes, probe lattice indices
  std::vector<int> inputs_to_redo;    ///< sorted I_f indices
  double influence_radius = 0.0;      ///< Angstrom, support radius plus spreading
};

/// Inputs whose propagated wave may change are those within the influence radius of a changed
/// pixel; probes to redo are the requested probes that use any of them.
RecomputePlan recompute_plan(const Specimen& old_spec, const Specimen& new_spec, const ApproxPlan& plan,
                             const std::vector<Pixel>& probes, const PropagatorSpec& prop,
                             const RecomputeOptions& opts = {});

}  // namespace lms
