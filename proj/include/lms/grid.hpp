#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lms {

using cplx = std::complex<double>;

/// Integer pixel coordinate on a periodic grid.
struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Periodic simulation domain: nx x ny pixels covering lx x ly Angstrom.
struct GridGeometry {
  int nx = 0;
  int ny = 0;
  double lx = 0.0;
  double ly = 0.0;

  /// Validating constructor; throws InvalidArgument.
  static GridGeometry make(int nx, int ny, double lx, double ly);

  double px() const { return lx / nx; }
  double py() const { return ly / ny; }
  double qx() const { return 1.0 / lx; }
  double qy() const { return 1.0 / ly; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Wrap an integer index into [0, n).
inline int wrap_index(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

/// Signed wrapped offset in [-n/2, n - n/2).
inline int signed_offset(int d, int n) {
  int r = wrap_index(d, n);
  return r >= n - n / 2 ? r - n : r;
}

/// Signed frequency index of FFT-order storage index j: j for j < ceil(n/2), j - n otherwise.
/// Equals the centered index (k - 1 - floor(n/2)) of the 1-based centered convention.
inline int signed_frequency(int j, int n) { return j < (n + 1) / 2 ? j : j - n; }

/// FFT-order storage index of a signed frequency m.
inline int frequency_slot(int m, int n) { return wrap_index(m, n); }

/// 2D complex field on a periodic grid. Row-major with x fastest: index = y * nx + x.
class ComplexField {
 public:
  ComplexField() = default;
  explicit ComplexField(const GridGeometry& geom);
  ComplexField(const GridGeometry& geom, std::vector<cplx> data);

  const GridGeometry& geometry() const { return geom_; }
  int nx() const { return geom_.nx; }
  int ny() const { return geom_.ny; }
  std::size_t size() const { return data_.size(); }

  cplx& operator()(int x, int y) { return data_[static_cast<std::size_t>(y) * geom_.nx + x]; }
  const cplx& operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * geom_.nx + x]; }
  cplx& at_wrapped(int x, int y) { return (*this)(wrap_index(x, geom_.nx), wrap_index(y, geom_.ny)); }
  const cplx& at_wrapped(int x, int y) const { return (*this)(wrap_index(x, geom_.nx), wrap_index(y, geom_.ny)); }

  std::span<cplx> values() { return data_; }
  std::span<const cplx> values() const { return data_; }
  std::vector<cplx>& storage() { return data_; }
  const std::vector<cplx>& storage() const { return data_; }

  bool all_finite() const;
  double norm2() const;  ///< euclidean norm
  double norm_sup() const;

  ComplexField& operator+=(const ComplexField& other);
  ComplexField& operator*=(cplx s);

 private:
  GridGeometry geom_{};
  std::vector<cplx> data_;
};

/// A field that lives on a window of a larger periodic grid.
/// `origin` is the parent-grid pixel of the window's (0,0) pixel.
struct PlacedField {
  ComplexField field;
  Pixel origin{};
  GridGeometry parent{};

  bool is_full() const { return field.geometry() == parent && origin == Pixel{}; }
};

enum class Direction { forward, inverse };
enum class Norm { euclidean, supremum };

/// 2D DFT. Forward is the unnormalized sum with exp(-2 pi i ...); inverse carries 1/(nx*ny).
/// Throws NumericalError on non-finite input.
ComplexField dft2(const ComplexField& field, Direction dir);

/// In-place variant without the finiteness check; used on hot paths.
void dft2_inplace(ComplexField& field, Direction dir);

/// ||a - b|| / ||b||. Throws InvalidArgument on geometry mismatch, NumericalError if ||b|| == 0.
double rel_error(const ComplexField& a, const ComplexField& b, Norm norm);

/// Circular shift: out(x + sx, y + sy) = in(x, y).
ComplexField periodic_translate(const ComplexField& field, Pixel shift);

/// Window of `size` pixels whose center pixel (size/2) is `center`; periodic extraction.
/// Physical extent scales with the pixel count.
ComplexField crop_window(const ComplexField& field, Pixel center, Pixel size);

/// Same as crop_window but keeps the window origin for later embedding.
PlacedField crop_placed(const ComplexField& field, Pixel center, Pixel size);

/// Parent-grid origin of a window of `size` centered at `center`; an axis spanning the whole grid keeps origin 0.
Pixel window_origin(const GridGeometry& parent, Pixel center, Pixel size);

/// Writes the window back onto a zero field of the parent geometry.
ComplexField embed(const PlacedField& placed);

/// FFT-order <-> centered (zero frequency at floor(n/2)) reordering.
ComplexField fftshift(const ComplexField& field);
ComplexField ifftshift(const ComplexField& field);

/// "LMAFIELD nx ny lx ly\n" + little-endian interleaved float64 payload.
void write_field(std::ostream& os, const ComplexField& field);
ComplexField read_field(std::istream& is);
void save_field(const std::string& path, const ComplexField& field);
ComplexField load_field(const std::string& path);

/// Shared helpers for the little-endian binary payloads used by all file formats.
namespace io {
void write_f64(std::ostream& os, std::span<const double> values);
void read_f64(std::istream& is, std::span<double> values);
std::string read_header_line(std::istream& is, std::size_t max_len = 4096);
std::string format_double(double v);
}  // namespace io

}  // namespace lms
