#pragma once

#include <string>
#include <vector>

#include "lms/grid.hpp"

namespace lms {

/// Gaussian stand-in for an atomic projected potential.
struct AtomSpec {
  double x = 0.0;  ///< Angstrom
  double y = 0.0;
  double z = 0.0;
  double amplitude = 1.0;  ///< peak projected potential, V*Angstrom
  double width = 0.5;      ///< Gaussian radius, Angstrom
};

/// Gaussian tails are cut at this many widths (tail < 3.4e-4 of the peak).
inline constexpr double kAtomCutoffWidths = 4.0;

/// Stack of projected-potential slices v_eps on a periodic grid.
class Specimen {
 public:
  Specimen(const GridGeometry& geom, double eps, std::vector<std::vector<double>> slices);

  const GridGeometry& geometry() const { return geom_; }
  double slice_thickness() const { return eps_; }
  int slice_count() const { return static_cast<int>(slices_.size()); }
  double thickness() const { return eps_ * static_cast<double>(slices_.size()); }
  const std::vector<double>& slice(int j) const { return slices_.at(static_cast<std::size_t>(j)); }

  friend bool operator==(const Specimen&, const Specimen&) = default;

 private:
  GridGeometry geom_;
  double eps_;
  std::vector<std::vector<double>> slices_;
};

/// Deposits each atom wholly into slice floor(z / eps) with periodic wrap in x, y.
/// Throws InvalidArgument for atoms outside [0, n_slices * eps) or invalid widths.
Specimen synth_specimen(const std::vector<AtomSpec>& atoms, const GridGeometry& geom, double eps, int n_slices);

/// "LMASLICES nx ny lx ly eps N\n" + N * nx * ny little-endian float64, row-major.
void save_specimen(const std::string& path, const Specimen& spec);
Specimen load_specimen(const std::string& path);

/// Pointwise exp(i sigma v).
ComplexField transmission(const std::vector<double>& slice, const GridGeometry& geom, double sigma);

/// Mask (nx * ny) of pixels where any slice differs by more than `tol`.
/// Throws InvalidArgument on geometry or slicing mismatch.
std::vector<bool> changed_pixels(const Specimen& a, const Specimen& b, double tol = 1e-12);

}  // namespace lms
