#pragma once

// Data-parallel kernels shared by the solvers. Each kernel has an OpenMP path and a plain
// serial reference used by the tests and the benchmark; both produce bit-identical results
// because every output element is accumulated in the same order.

#include <omp.h>

#include <cstddef>
#include <exception>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lms/grid.hpp"
#include "lms/multislice.hpp"

namespace lms::kernels {

enum class Exec { serial, parallel };

/// Worker count for the parallel paths (0 = OpenMP default).
void set_workers(int workers);
int workers();

struct Term {
  cplx coeff;
  std::size_t source;  ///< index into the source list
};

/// One output wave: sum of coeff * source, evaluated on a window centered at `center`.
struct Combination {
  Pixel center{};
  std::vector<Term> terms;
};

/// Evaluates every combination on a `window`-sized region of `parent`. Sources outside their
/// stored window count as zero. Adds terms * window pixels to combination_mac_count.
std::vector<PlacedField> combine_batch(std::span<const PlacedField* const> sources,
                                       const std::vector<Combination>& combos, const GridGeometry& parent,
                                       Pixel window, OpCounters& counters, Exec exec = Exec::parallel);

/// Serial reference: embeds every source on the full grid, sums, then crops.
std::vector<PlacedField> combine_batch_reference(std::span<const PlacedField* const> sources,
                                                 const std::vector<Combination>& combos,
                                                 const GridGeometry& parent, Pixel window, OpCounters& counters);

/// Adds coeff * src onto dst over their overlap on the shared parent grid.
void accumulate(PlacedField& dst, const PlacedField& src, cplx coeff);

/// Solves `count` initial conditions. `make_init(i)` returns (initial wave, center); the center
/// positions a realspace computation window and, when `store` is set, the stored crop.
template <class MakeInit>
std::vector<PlacedField> propagate_batch(const MultisliceSolver& solver, std::size_t count, MakeInit&& make_init,
                                         OpCounters& counters, std::optional<Pixel> store = std::nullopt,
                                         Exec exec = Exec::parallel) {
  std::vector<PlacedField> out(count);
  auto run_one = [&](std::size_t i, OpCounters& local) {
    auto [init, center] = make_init(i);
    PlacedField solved = solver.solve_window(init, center, local);
    if (store && solved.is_full() && !(*store == Pixel{solved.field.nx(), solved.field.ny()}))
      solved = crop_placed(solved.field, center, *store);
    out[i] = std::move(solved);
  };
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < count; ++i) run_one(i, counters);
    return out;
  }
  std::exception_ptr error;
  const auto n = static_cast<long long>(count);
#pragma omp parallel
  {
    OpCounters local;
#pragma omp for schedule(dynamic)
    for (long long i = 0; i < n; ++i) {
      try {
        run_one(static_cast<std::size_t>(i), local);
      } catch (...) {
#pragma omp critical(lms_propagate_error)
        if (!error) error = std::current_exception();
      }
    }
#pragma omp critical(lms_propagate_counters)
    counters += local;
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace lms::kernels
