#include "lms/specimen.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lms/error.hpp"

namespace lms {

Specimen::Specimen(const GridGeometry& geom, double eps, std::vector<std::vector<double>> slices)
    : geom_(geom), eps_(eps), slices_(std::move(slices)) {
  if (!(eps_ > 0.0)) throw InvalidArgument("slice thickness must be positive");
  if (slices_.empty()) throw InvalidArgument("specimen needs at least one slice");
  for (const auto& s : slices_) {
    if (s.size() != geom_.size()) throw InvalidArgument("slice size does not match geometry");
    for (double v : s)
      if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("slice values must be finite and non-negative");
  }
}

Specimen synth_specimen(const std::vector<AtomSpec>& atoms, const GridGeometry& geom, double eps, int n_slices) {
  if (n_slices < 1) throw InvalidArgument("n_slices must be >= 1");
  if (!(eps > 0.0)) throw InvalidArgument("slice thickness must be positive");
  std::vector<std::vector<double>> slices(static_cast<std::size_t>(n_slices), std::vector<double>(geom.size(), 0.0));
  const double px = geom.px();
  const double py = geom.py();
  for (const auto& a : atoms) {
    if (!(a.width > 0.0) || !(a.amplitude > 0.0)) throw InvalidArgument("atom width and amplitude must be positive");
    if (!(a.z >= 0.0) || !(a.z < n_slices * eps)) throw InvalidArgument("atom z outside the specimen");
    const int j = std::min(n_slices - 1, static_cast<int>(std::floor(a.z / eps)));
    auto& s = slices[static_cast<std::size_t>(j)];
    const double cutoff = kAtomCutoffWidths * a.width;
    const double inv2w2 = 1.0 / (2.0 * a.width * a.width);
    // Every pixel image within the cutoff contributes, so overlapping periodic images add up.
    const int x0 = static_cast<int>(std::ceil((a.x - cutoff) / px));
    const int x1 = static_cast<int>(std::floor((a.x + cutoff) / px));
    const int y0 = static_cast<int>(std::ceil((a.y - cutoff) / py));
    const int y1 = static_cast<int>(std::floor((a.y + cutoff) / py));
    for (int iy = y0; iy <= y1; ++iy) {
      const double dy = iy * py - a.y;
      for (int ix = x0; ix <= x1; ++ix) {
        const double dx = ix * px - a.x;
        const double r2 = dx * dx + dy * dy;
        if (r2 > cutoff * cutoff) continue;
        s[static_cast<std::size_t>(wrap_index(iy, geom.ny)) * geom.nx + wrap_index(ix, geom.nx)] +=
            a.amplitude * std::exp(-r2 * inv2w2);
      }
    }
  }
  return Specimen(geom, eps, std::move(slices));
}

void save_specimen(const std::string& path, const Specimen& spec) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  const auto& g = spec.geometry();
  os << "LMASLICES " << g.nx << ' ' << g.ny << ' ' << io::format_double(g.lx) << ' ' << io::format_double(g.ly)
     << ' ' << io::format_double(spec.slice_thickness()) << ' ' << spec.slice_count() << '\n';
  for (int j = 0; j < spec.slice_count(); ++j) io::write_f64(os, spec.slice(j));
  if (!os) throw FormatError("write failed for " + path);
}

Specimen load_specimen(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  std::istringstream header(io::read_header_line(is));
  std::string magic;
  int nx = 0;
  int ny = 0;
  int n = 0;
  double lx = 0.0;
  double ly = 0.0;
  double eps = 0.0;
  if (!(header >> magic >> nx >> ny >> lx >> ly >> eps >> n) || magic != "LMASLICES")
    throw FormatError("bad LMASLICES header in " + path);
  if (n < 1 || !(eps > 0.0)) throw FormatError("LMASLICES header: bad slice count or thickness");
  GridGeometry g;
  try {
    g = GridGeometry::make(nx, ny, lx, ly);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("LMASLICES header: ") + e.what());
  }
  std::vector<std::vector<double>> slices(static_cast<std::size_t>(n), std::vector<double>(g.size()));
  for (auto& s : slices) io::read_f64(is, s);
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("LMASLICES payload longer than header declares");
  for (const auto& s : slices)
    for (double v : s)
      if (!std::isfinite(v)) throw FormatError("LMASLICES payload contains non-finite values");
  try {
    return Specimen(g, eps, std::move(slices));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("LMASLICES: ") + e.what());
  }
}

ComplexField transmission(const std::vector<double>& slice, const GridGeometry& geom, double sigma) {
  if (slice.size() != geom.size()) throw InvalidArgument("transmission: slice size does not match geometry");
  ComplexField t(geom);
  auto out = t.values();
  for (std::size_t i = 0; i < slice.size(); ++i) out[i] = std::polar(1.0, sigma * slice[i]);
  return t;
}

std::vector<bool> changed_pixels(const Specimen& a, const Specimen& b, double tol) {
  if (!(a.geometry() == b.geometry()) || a.slice_count() != b.slice_count() ||
      a.slice_thickness() != b.slice_thickness())
    throw InvalidArgument("specimens differ in geometry or slicing");
  std::vector<bool> mask(a.geometry().size(), false);
  for (int j = 0; j < a.slice_count(); ++j) {
    const auto& sa = a.slice(j);
    const auto& sb = b.slice(j);
    for (std::size_t i = 0; i < sa.size(); ++i)
      if (std::abs(sa[i] - sb[i]) > tol) mask[i] = true;
  }
  return mask;
}

}  // namespace lms
