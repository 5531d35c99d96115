#include "lms/detect.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>

#include "lms/error.hpp"

namespace lms {

DetectorConfig DetectorConfig::annular(std::string name, double r1, double r2) {
  DetectorConfig c;
  c.name = std::move(name);
  c.mode = DetectorMode::annular;
  c.r1 = r1;
  c.r2 = r2;
  c.validate();
  return c;
}

DetectorConfig DetectorConfig::rings(std::string name, int A, double r) {
  DetectorConfig c;
  c.name = std::move(name);
  c.mode = DetectorMode::rings;
  c.A = A;
  c.r = r;
  c.validate();
  return c;
}

DetectorConfig DetectorConfig::pixelated(std::string name, int A, int B, double dx, double dy) {
  DetectorConfig c;
  c.name = std::move(name);
  c.mode = DetectorMode::pixelated;
  c.A = A;
  c.B = B;
  c.dx = dx;
  c.dy = dy;
  c.validate();
  return c;
}

DetectorConfig DetectorConfig::parse(std::string name, const std::string& spec) {
  std::istringstream in(spec);
  std::string mode;
  in >> mode;
  DetectorConfig c;
  if (mode == "2d") {
    double r1 = 0, r2 = 0;
    in >> r1 >> r2;
    if (in.fail()) throw InvalidArgument("detector '" + name + "': expected '2d R1 R2'");
    c = annular(name, r1, r2);
  } else if (mode == "3d") {
    int A = 0;
    double r = 0;
    in >> A >> r;
    if (in.fail()) throw InvalidArgument("detector '" + name + "': expected '3d A R'");
    c = rings(name, A, r);
  } else if (mode == "4d") {
    int A = 0, B = 0;
    double dx = 0, dy = 0;
    in >> A >> B >> dx >> dy;
    if (in.fail()) throw InvalidArgument("detector '" + name + "': expected '4d A B DX DY'");
    c = pixelated(name, A, B, dx, dy);
  } else {
    throw InvalidArgument("detector '" + name + "': unknown mode '" + mode + "' (2d, 3d, 4d)");
  }
  std::string rest;
  if (in >> rest) throw InvalidArgument("detector '" + name + "': trailing tokens");
  return c;
}

void DetectorConfig::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  switch (mode) {
    case DetectorMode::annular:
      if (!finite(r1) || !finite(r2) || r1 < 0 || !(r1 < r2))
        throw InvalidArgument("detector '" + name + "': need 0 <= r1 < r2");
      break;
    case DetectorMode::rings:
      if (A < 1 || !finite(r) || !(r > 0)) throw InvalidArgument("detector '" + name + "': need A >= 1 and r > 0");
      break;
    case DetectorMode::pixelated:
      if (A < 0 || B < 0 || !finite(dx) || !finite(dy) || !(dx > 0) || !(dy > 0))
        throw InvalidArgument("detector '" + name + "': need A, B >= 0 and dx, dy > 0");
      break;
  }
}

std::size_t DetectorConfig::channels() const {
  switch (mode) {
    case DetectorMode::annular: return 1;
    case DetectorMode::rings: return static_cast<std::size_t>(A) + 1;
    case DetectorMode::pixelated: return static_cast<std::size_t>(2 * A + 1) * static_cast<std::size_t>(2 * B + 1);
  }
  return 0;
}

DetectorReading detect(const ComplexField& exit, const DetectorConfig& cfg, double lambda) {
  cfg.validate();
  if (!(lambda > 0)) throw InvalidArgument("wavelength must be positive");
  const ComplexField spec = dft2(exit, Direction::forward);
  const auto& g = exit.geometry();
  const double area = g.qx() * g.qy();
  const double nyquist = std::min(0.5 * g.nx * g.qx(), 0.5 * g.ny * g.qy());
  DetectorReading out;
  out.values.assign(cfg.channels(), 0.0);
  const double to_k = 1e-3 / lambda;  // mrad -> 1/Angstrom

  if (cfg.mode == DetectorMode::pixelated) {
    for (int b = -cfg.B; b <= cfg.B; ++b) {
      for (int a = -cfg.A; a <= cfg.A; ++a) {
        const double kx = a * cfg.dx * to_k;
        const double ky = b * cfg.dy * to_k;
        const auto mx = static_cast<int>(std::lround(kx / g.qx()));
        const auto my = static_cast<int>(std::lround(ky / g.qy()));
        const std::size_t idx = static_cast<std::size_t>(b + cfg.B) * (2 * cfg.A + 1) + (a + cfg.A);
        if (mx < -(g.nx / 2) || mx >= g.nx - g.nx / 2 || my < -(g.ny / 2) || my >= g.ny - g.ny / 2) {
          out.partial = true;
          continue;
        }
        out.values[idx] = std::norm(spec(frequency_slot(mx, g.nx), frequency_slot(my, g.ny)));
      }
    }
    return out;
  }

  double outer = 0.0;
  if (cfg.mode == DetectorMode::annular) {
    const double k1 = cfg.r1 * to_k;
    const double k2 = cfg.r2 * to_k;
    outer = k2;
    for (int jy = 0; jy < g.ny; ++jy) {
      const double ky = signed_frequency(jy, g.ny) * g.qy();
      for (int jx = 0; jx < g.nx; ++jx) {
        const double k = std::hypot(signed_frequency(jx, g.nx) * g.qx(), ky);
        if (k >= k1 && k < k2) out.values[0] += std::norm(spec(jx, jy)) * area;
      }
    }
  } else {
    const double w = cfg.r * to_k;
    outer = (cfg.A + 1) * w;
    for (int jy = 0; jy < g.ny; ++jy) {
      const double ky = signed_frequency(jy, g.ny) * g.qy();
      for (int jx = 0; jx < g.nx; ++jx) {
        const double k = std::hypot(signed_frequency(jx, g.nx) * g.qx(), ky);
        const auto bin = static_cast<long long>(std::floor(k / w));
        if (bin <= cfg.A) out.values[static_cast<std::size_t>(bin)] += std::norm(spec(jx, jy)) * area;
      }
    }
  }
  out.partial = outer > nyquist;
  return out;
}

std::vector<std::vector<double>> detect_all(const std::vector<PlacedField>& exits,
                                            const std::vector<DetectorConfig>& detectors, double lambda,
                                            bool* any_partial, kernels::Exec exec) {
  std::vector<std::vector<double>> out(exits.size());
  std::vector<unsigned char> partial(exits.size(), 0);
  std::exception_ptr error;
  const auto n = static_cast<long long>(exits.size());
#pragma omp parallel for schedule(dynamic) if (exec == kernels::Exec::parallel)
  for (long long i = 0; i < n; ++i) {
    try {
      auto& row = out[static_cast<std::size_t>(i)];
      for (const auto& d : detectors) {
        const auto r = detect(exits[static_cast<std::size_t>(i)].field, d, lambda);
        row.insert(row.end(), r.values.begin(), r.values.end());
        partial[static_cast<std::size_t>(i)] |= r.partial ? 1 : 0;
      }
    } catch (...) {
#pragma omp critical(lms_detect_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  if (any_partial) *any_partial = std::any_of(partial.begin(), partial.end(), [](unsigned char p) { return p != 0; });
  return out;
}

std::vector<double> STEMImage::channel(int c) const {
  if (c < 0 || c >= channels) throw InvalidArgument("channel out of range");
  std::vector<double> out(static_cast<std::size_t>(px) * py);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = values[i * channels + c];
  return out;
}

STEMImage assemble_image(const std::vector<Pixel>& probes, const std::vector<std::vector<double>>& outputs, int px,
                         int py, int channels, const STEMImage* prior) {
  if (probes.size() != outputs.size()) throw InvalidArgument("assemble_image: one output per probe required");
  if (px < 1 || py < 1 || channels < 1) throw InvalidArgument("assemble_image: bad image shape");
  STEMImage img;
  if (prior) {
    if (prior->px != px || prior->py != py || prior->channels != channels)
      throw InvalidArgument("assemble_image: prior image shape differs");
    img = *prior;
  } else {
    img.px = px;
    img.py = py;
    img.channels = channels;
    img.values.assign(static_cast<std::size_t>(px) * py * channels, 0.0);
    img.computed.assign(static_cast<std::size_t>(px) * py, 0);
  }
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const Pixel p = probes[k];
    if (p.x < 0 || p.x >= px || p.y < 0 || p.y >= py) throw InvalidArgument("assemble_image: probe outside image");
    if (outputs[k].size() != static_cast<std::size_t>(channels))
      throw InvalidArgument("assemble_image: output length differs from channel count");
    const std::size_t pix = static_cast<std::size_t>(p.y) * px + p.x;
    std::copy(outputs[k].begin(), outputs[k].end(), img.values.begin() + static_cast<std::ptrdiff_t>(pix * channels));
    img.computed[pix] = 1;
  }
  return img;
}

double image_rel_error(const STEMImage& a, const STEMImage& reference, int channel) {
  if (a.px != reference.px || a.py != reference.py || a.channels != reference.channels)
    throw InvalidArgument("image_rel_error: shape mismatch");
  const auto x = a.channel(channel);
  const auto y = reference.channel(channel);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - y[i]) * (x[i] - y[i]);
    den += y[i] * y[i];
  }
  if (den == 0) throw NumericalError("image_rel_error: reference channel is zero");
  return std::sqrt(num / den);
}

void save_image(const std::string& path, const STEMImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  os << "LMAIMG " << img.px << ' ' << img.py << ' ' << img.channels << '\n';
  io::write_f64(os, img.values);
  if (!os) throw InvalidArgument("write failed: " + path);
}

STEMImage load_image(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path);
  std::istringstream header(io::read_header_line(is));
  std::string magic;
  STEMImage img;
  if (!(header >> magic >> img.px >> img.py >> img.channels) || magic != "LMAIMG")
    throw FormatError("bad LMAIMG header");
  std::string rest;
  if (header >> rest) throw FormatError("trailing tokens in LMAIMG header");
  if (img.px < 1 || img.py < 1 || img.channels < 1) throw FormatError("bad LMAIMG shape");
  img.values.resize(static_cast<std::size_t>(img.px) * img.py * img.channels);
  io::read_f64(is, img.values);
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing LMAIMG payload");
  img.computed.assign(static_cast<std::size_t>(img.px) * img.py, 1);
  return img;
}

void save_image_pgm(const std::string& path, const STEMImage& img, int channel) {
  const auto v = img.channel(channel);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double span = *hi - *lo;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  os << "P5\n" << img.px << ' ' << img.py << "\n65535\n";
  for (double x : v) {
    const auto q = static_cast<unsigned>(span > 0 ? std::lround(65535.0 * (x - *lo) / span) : 0);
    const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
    os.write(bytes, 2);
  }
}

}  // namespace lms
