#pragma once

#include <string>
#include <vector>

#include "lms/grid.hpp"
#include "lms/inputwaves.hpp"
#include "lms/lattice.hpp"
#include "lms/optics.hpp"

namespace lms {

struct FitOptions {
  /// 0 fits on the full grid. Otherwise rows are restricted to a square window of side
  /// 2 * window_factor * r99 around the probe (r99: 99%-mass radius), clipped to the grid.
  double window_factor = 0.0;
  /// Columns with |R_jj| <= rank_tol * max |R_ii| of the normalized dictionary are dependent.
  double rank_tol = 1e-10;
};

/// Coefficients shared by every probe congruent to `index` modulo the reuse period.
struct RepresentativeFit {
  Pixel index{};                ///< probe lattice index
  std::vector<Pixel> offsets;   ///< neighbor offsets from the probe position, in pixels
  std::vector<cplx> coeffs;
  double err_euclid = 0.0;      ///< full-grid relative errors of the reconstructed probe
  double err_sup = 0.0;
};

struct ApproxPlan {
  LatticePair lattice;
  InputWaveKind kind;
  MicroscopeParams params;
  int L = 0;
  FitOptions fit;
  std::vector<RepresentativeFit> reps;  ///< indexed by LatticePair::representative_of

  const RepresentativeFit& representative_for(Pixel probe_index) const {
    return reps.at(static_cast<std::size_t>(lattice.representative_of(probe_index)));
  }
};

/// Least-squares fit of the probe at each representative against its L nearest translated
/// input waves. Throws NumericalError naming the representative if the dictionary is rank deficient.
ApproxPlan fit_coefficients(const LatticePair& lattice, const InputWaveKind& kind, int L,
                            const MicroscopeParams& params, const FitOptions& opts = {});

/// Coefficients of one probe with absolute input positions and flat I_f indices.
struct ProbeTerms {
  Pixel probe_index{};
  Pixel position{};
  std::vector<cplx> coeffs;
  std::vector<Pixel> positions;
  std::vector<int> inputs;
};

/// `probe_pos` is a pixel position; throws InvalidArgument if it is not on the probe lattice.
ProbeTerms translate_plan(const ApproxPlan& plan, Pixel probe_pos);

/// Same for a probe lattice index.
ProbeTerms translate_plan_index(const ApproxPlan& plan, Pixel probe_index);

/// sum_i alpha_i u_i for one probe, on the full grid. `u` is the input wave at the origin.
ComplexField reconstruct_probe(const ProbeTerms& terms, const ComplexField& u);

/// Text header "LMAPLAN 1" with the fit configuration and per-representative errors, followed by
/// little-endian float64 offsets and coefficients. Loading refits nothing but recomputes the
/// neighbor offsets and reconstruction errors, throwing FormatError on mismatch.
void save_plan(const std::string& path, const ApproxPlan& plan);
ApproxPlan load_plan(const std::string& path);

struct ApproxReportRow {
  int f = 1;
  int L = 1;
  double euclid = 0.0;      ///< representative (0,0)
  double sup = 0.0;
  double euclid_max = 0.0;  ///< worst representative
  double sup_max = 0.0;
};

/// Fit errors over L_values x f_values. Each (f, representative) is factorized once; nested
/// dictionaries reuse the factorization. Rows are ordered by f, then L.
std::vector<ApproxReportRow> probe_approx_report(const GridGeometry& geom, int probe_nx, int probe_ny,
                                                 LatticeMode mode, const InputWaveKind& kind,
                                                 const MicroscopeParams& params, const std::vector<int>& L_values,
                                                 const std::vector<int>& f_values, const FitOptions& opts = {});

}  // namespace lms
