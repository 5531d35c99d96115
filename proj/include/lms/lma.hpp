#pragma once

#include <map>
#include <optional>
#include <vector>

#include "lms/kernels.hpp"
#include "lms/multislice.hpp"
#include "lms/plan.hpp"
#include "lms/scheduler.hpp"
#include "lms/specimen.hpp"

namespace lms {

/// Propagated input waves keyed by flat I_f index.
using InputBank = std::map<int, PlacedField>;

struct LmaOptions {
  PropagatorSpec propagator{};
  /// Stored size of each propagated input and of each exit wave; default (nx/f, ny/f).
  std::optional<Pixel> store_window;
  /// Interleave propagation and combination under this partition's memory bound.
  const Partition* schedule = nullptr;
  kernels::Exec exec = kernels::Exec::parallel;
};

/// Resolved storage window for a plan.
Pixel lma_store_window(const ApproxPlan& plan, const LmaOptions& opts);

/// Phase 1: propagates u_i for every listed input missing from (or forced into) the bank.
/// Inputs already present are skipped unless `overwrite` is set.
void lma_propagate_inputs(const MultisliceSolver& solver, const ApproxPlan& plan, const ComplexField& u,
                          const std::vector<int>& inputs, Pixel store, InputBank& bank, OpCounters& counters,
                          kernels::Exec exec = kernels::Exec::parallel, bool overwrite = false);

/// Phase 2: exit waves sum_i alpha_i U_i for each probe (probe lattice indices), on a `window`
/// centered at the probe position. Every needed input must be in the bank.
std::vector<PlacedField> lma_combine(const ApproxPlan& plan, const InputBank& bank, const std::vector<Pixel>& probes,
                                     Pixel window, OpCounters& counters,
                                     kernels::Exec exec = kernels::Exec::parallel);

struct LmaResult {
  std::vector<PlacedField> exits;  ///< one per requested probe, in request order
  std::size_t peak_resident = 0;   ///< largest number of propagated inputs held at once
};

/// Both phases for probes given as probe lattice indices. With a schedule, only the inputs of the
/// current set stay resident, so multislice_calls equals partition_cost. Throws InvalidArgument if
/// the schedule's bound is below L or it does not cover the probes exactly.
LmaResult lma_simulate(const Specimen& spec, const ApproxPlan& plan, const std::vector<Pixel>& probes,
                       const LmaOptions& opts, OpCounters& counters, InputBank* keep = nullptr);

}  // namespace lms
