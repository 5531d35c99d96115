#include "lms/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "lms/error.hpp"

namespace lms {

GridGeometry GridGeometry::make(int nx, int ny, double lx, double ly) {
  if (nx < 2 || ny < 2) throw InvalidArgument("grid needs at least 2x2 pixels");
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
    throw InvalidArgument("grid extent must be positive and finite");
  return GridGeometry{nx, ny, lx, ly};
}

ComplexField::ComplexField(const GridGeometry& geom) : geom_(geom), data_(geom.size()) {}

ComplexField::ComplexField(const GridGeometry& geom, std::vector<cplx> data)
    : geom_(geom), data_(std::move(data)) {
  if (data_.size() != geom_.size()) throw InvalidArgument("field data length does not match geometry");
}

bool ComplexField::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

double ComplexField::norm2() const {
  double s = 0.0;
  for (const auto& v : data_) s += std::norm(v);
  return std::sqrt(s);
}

double ComplexField::norm_sup() const {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

ComplexField& ComplexField::operator+=(const ComplexField& other) {
  if (!(other.geom_ == geom_)) throw InvalidArgument("geometry mismatch in field addition");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

ComplexField& ComplexField::operator*=(cplx s) {
  for (auto& v : data_) v *= s;
  return *this;
}

namespace {

// fftw_execute_dft is thread-safe; planning is not.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int nx, int ny, Direction dir) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(nx, ny, dir == Direction::forward);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<cplx> scratch(static_cast<std::size_t>(nx) * ny);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    // FFTW is row-major with the last dimension fastest, so (ny, nx) matches y * nx + x.
    fftw_plan plan = fftw_plan_dft_2d(ny, nx, buf, buf, dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw NumericalError("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, bool>, fftw_plan> plans_;
};

}  // namespace

void dft2_inplace(ComplexField& field, Direction dir) {
  fftw_plan plan = PlanCache::instance().get(field.nx(), field.ny(), dir);
  auto* buf = reinterpret_cast<fftw_complex*>(field.storage().data());
  fftw_execute_dft(plan, buf, buf);
  if (dir == Direction::inverse) field *= 1.0 / static_cast<double>(field.size());
}

ComplexField dft2(const ComplexField& field, Direction dir) {
  if (!field.all_finite()) throw NumericalError("dft2: non-finite input");
  ComplexField out = field;
  dft2_inplace(out, dir);
  return out;
}

double rel_error(const ComplexField& a, const ComplexField& b, Norm norm) {
  if (!(a.geometry() == b.geometry())) throw InvalidArgument("rel_error: geometry mismatch");
  double num = 0.0;
  double den = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  if (norm == Norm::euclidean) {
    for (std::size_t i = 0; i < av.size(); ++i) {
      num += std::norm(av[i] - bv[i]);
      den += std::norm(bv[i]);
    }
    num = std::sqrt(num);
    den = std::sqrt(den);
  } else {
    for (std::size_t i = 0; i < av.size(); ++i) {
      num = std::max(num, std::abs(av[i] - bv[i]));
      den = std::max(den, std::abs(bv[i]));
    }
  }
  if (den == 0.0) throw NumericalError("rel_error: reference field is zero");
  return num / den;
}

ComplexField periodic_translate(const ComplexField& field, Pixel shift) {
  const int nx = field.nx();
  const int ny = field.ny();
  ComplexField out(field.geometry());
  const int sx = wrap_index(shift.x, nx);
  const int sy = wrap_index(shift.y, ny);
  for (int y = 0; y < ny; ++y) {
    const int ty = (y + sy) % ny;
    for (int x = 0; x < nx; ++x) out((x + sx) % nx, ty) = field(x, y);
  }
  return out;
}

Pixel window_origin(const GridGeometry& parent, Pixel center, Pixel size) {
  // An axis covered completely is the grid itself, so it keeps origin 0.
  return Pixel{size.x >= parent.nx ? 0 : wrap_index(center.x - size.x / 2, parent.nx),
               size.y >= parent.ny ? 0 : wrap_index(center.y - size.y / 2, parent.ny)};
}

PlacedField crop_placed(const ComplexField& field, Pixel center, Pixel size) {
  const auto& g = field.geometry();
  if (size.x < 1 || size.y < 1 || size.x > g.nx || size.y > g.ny)
    throw InvalidArgument("crop_window: window exceeds grid");
  const Pixel origin = window_origin(g, center, size);
  GridGeometry wg{size.x, size.y, g.lx * size.x / g.nx, g.ly * size.y / g.ny};
  ComplexField out(wg);
  for (int y = 0; y < size.y; ++y)
    for (int x = 0; x < size.x; ++x) out(x, y) = field.at_wrapped(origin.x + x, origin.y + y);
  return PlacedField{std::move(out), origin, g};
}

ComplexField crop_window(const ComplexField& field, Pixel center, Pixel size) {
  return crop_placed(field, center, size).field;
}

ComplexField embed(const PlacedField& placed) {
  ComplexField out(placed.parent);
  const auto& f = placed.field;
  for (int y = 0; y < f.ny(); ++y)
    for (int x = 0; x < f.nx(); ++x) out.at_wrapped(placed.origin.x + x, placed.origin.y + y) = f(x, y);
  return out;
}

ComplexField fftshift(const ComplexField& field) { return periodic_translate(field, {field.nx() / 2, field.ny() / 2}); }

ComplexField ifftshift(const ComplexField& field) {
  return periodic_translate(field, {-(field.nx() / 2), -(field.ny() / 2)});
}

namespace io {

void write_f64(std::ostream& os, std::span<const double> values) {
  static_assert(sizeof(double) == 8);
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * 8));
  } else {
    for (double v : values) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      char bytes[8];
      for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
      os.write(bytes, 8);
    }
  }
}

void read_f64(std::istream& is, std::span<double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * 8));
    if (is.gcount() != static_cast<std::streamsize>(values.size() * 8)) throw FormatError("truncated payload");
  } else {
    for (double& v : values) {
      unsigned char bytes[8];
      is.read(reinterpret_cast<char*>(bytes), 8);
      if (is.gcount() != 8) throw FormatError("truncated payload");
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
      v = std::bit_cast<double>(bits);
    }
  }
}

std::string read_header_line(std::istream& is, std::size_t max_len) {
  std::string line;
  char c = 0;
  while (is.get(c)) {
    if (c == '\n') return line;
    line.push_back(c);
    if (line.size() > max_len) throw FormatError("header line too long");
  }
  throw FormatError("missing header line");
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace io

void write_field(std::ostream& os, const ComplexField& field) {
  const auto& g = field.geometry();
  os << "LMAFIELD " << g.nx << ' ' << g.ny << ' ' << io::format_double(g.lx) << ' ' << io::format_double(g.ly)
     << '\n';
  io::write_f64(os, {reinterpret_cast<const double*>(field.storage().data()), 2 * field.size()});
}

ComplexField read_field(std::istream& is) {
  std::istringstream header(io::read_header_line(is));
  std::string magic;
  int nx = 0;
  int ny = 0;
  double lx = 0.0;
  double ly = 0.0;
  if (!(header >> magic >> nx >> ny >> lx >> ly) || magic != "LMAFIELD") throw FormatError("bad LMAFIELD header");
  std::string rest;
  if (header >> rest) throw FormatError("trailing tokens in LMAFIELD header");
  GridGeometry g;
  try {
    g = GridGeometry::make(nx, ny, lx, ly);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("LMAFIELD header: ") + e.what());
  }
  ComplexField f(g);
  io::read_f64(is, {reinterpret_cast<double*>(f.storage().data()), 2 * f.size()});
  if (!f.all_finite()) throw FormatError("LMAFIELD payload contains non-finite values");
  return f;
}

void save_field(const std::string& path, const ComplexField& field) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  write_field(os, field);
}

ComplexField load_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  return read_field(is);
}

}  // namespace lms
