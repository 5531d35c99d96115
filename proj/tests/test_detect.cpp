#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "lms/detect.hpp"
#include "lms/error.hpp"
#include "oracles.hpp"

using namespace lms;

namespace {
const GridGeometry g = GridGeometry::make(32, 24, 6.4, 4.8);
constexpr double lambda = 0.0250793;

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("lms_test_" + name)).string();
}

// Direct |DFT|^2 sum over an annulus in frequency space.
double annulus_oracle(const ComplexField& f, double k1, double k2) {
  const auto spec = oracle::naive_dft2(f.storage(), g.nx, g.ny, false);
  double s = 0;
  for (int jy = 0; jy < g.ny; ++jy)
    for (int jx = 0; jx < g.nx; ++jx) {
      const double k = std::hypot(oracle::frequency(jx, g.nx, g.lx), oracle::frequency(jy, g.ny, g.ly));
      if (k >= k1 && k < k2) s += std::norm(spec[static_cast<std::size_t>(jy * g.nx + jx)]) * g.qx() * g.qy();
    }
  return s;
}
}  // namespace

TEST_CASE("detector parsing") {
  const auto a = DetectorConfig::parse("adf", "2d 10 40");
  CHECK(a.mode == DetectorMode::annular);
  CHECK(a.r2 == 40.0);
  CHECK(DetectorConfig::parse("r", "3d 4 5").channels() == 5);
  CHECK(DetectorConfig::parse("p", "4d 2 1 3 3").channels() == 15);
  CHECK_THROWS_AS(DetectorConfig::parse("x", "2d 40 10"), InvalidArgument);
  CHECK_THROWS_AS(DetectorConfig::parse("x", "5d 1"), InvalidArgument);
  CHECK_THROWS_AS(DetectorConfig::parse("x", "2d 1 2 3"), InvalidArgument);
  CHECK_THROWS_AS(DetectorConfig::parse("x", "3d 0 5"), InvalidArgument);
}

TEST_CASE("annular sum matches a direct frequency mask") {
  const auto f = oracle::random_field(g, 4);
  for (auto [r1, r2] : {std::pair{0.0, 20.0}, std::pair{20.0, 60.0}, std::pair{33.0, 90.0}}) {
    const auto r = detect(f, DetectorConfig::annular("d", r1, r2), lambda);
    const double want = annulus_oracle(f, r1 * 1e-3 / lambda, r2 * 1e-3 / lambda);
    CHECK(r.values[0] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("full disk obeys Parseval and disjoint annuli add up") {
  const auto f = oracle::random_field(g, 8);
  const double total = f.norm2() * f.norm2() * double(g.size()) * g.qx() * g.qy();
  const auto all = detect(f, DetectorConfig::annular("all", 0, 1e5), lambda);
  CHECK(all.values[0] == doctest::Approx(total).epsilon(1e-12));
  CHECK(all.partial);
  const double a = detect(f, DetectorConfig::annular("a", 0, 25), lambda).values[0];
  const double b = detect(f, DetectorConfig::annular("b", 25, 1e5), lambda).values[0];
  CHECK(a + b == doctest::Approx(total).epsilon(1e-12));
  CHECK(detect(ComplexField(g), DetectorConfig::annular("z", 0, 50), lambda).values[0] == 0.0);
}

TEST_CASE("ring bins partition the disk") {
  const auto f = oracle::random_field(g, 2);
  const auto rings = detect(f, DetectorConfig::rings("r", 3, 10.0), lambda);
  REQUIRE(rings.values.size() == 4);
  for (int a = 0; a <= 3; ++a)
    CHECK(rings.values[static_cast<std::size_t>(a)] ==
          doctest::Approx(annulus_oracle(f, a * 10e-3 / lambda, (a + 1) * 10e-3 / lambda)).epsilon(1e-12));
  CHECK_FALSE(rings.partial);
}

TEST_CASE("pixelated samples the nearest Fourier pixel") {
  const auto f = oracle::random_field(g, 6);
  const auto spec = oracle::naive_dft2(f.storage(), g.nx, g.ny, false);
  // dx chosen so that one step is exactly one Fourier pixel in x
  const double dx = g.qx() * lambda * 1e3, dy = g.qy() * lambda * 1e3;
  const auto r = detect(f, DetectorConfig::pixelated("p", 2, 1, dx, dy), lambda);
  for (int b = -1; b <= 1; ++b)
    for (int a = -2; a <= 2; ++a) {
      const auto idx = static_cast<std::size_t>((b + 1) * 5 + (a + 2));
      const int jx = (a + g.nx) % g.nx, jy = (b + g.ny) % g.ny;
      CHECK(r.values[idx] == doctest::Approx(std::norm(spec[static_cast<std::size_t>(jy * g.nx + jx)])).epsilon(1e-12));
    }
  CHECK_FALSE(r.partial);
  const auto far = detect(f, DetectorConfig::pixelated("p", 40, 0, dx, dy), lambda);
  CHECK(far.partial);
  CHECK(far.values.front() == 0.0);
}

TEST_CASE("detect_all concatenates channels per exit") {
  const auto f = oracle::random_field(g, 1);
  const std::vector<PlacedField> exits{{f, {}, g}, {oracle::random_field(g, 2), {}, g}};
  const std::vector<DetectorConfig> dets{DetectorConfig::annular("a", 0, 20), DetectorConfig::rings("r", 1, 10)};
  bool partial = true;
  const auto par = detect_all(exits, dets, lambda, &partial, kernels::Exec::parallel);
  const auto ser = detect_all(exits, dets, lambda, nullptr, kernels::Exec::serial);
  CHECK(par == ser);
  CHECK_FALSE(partial);
  REQUIRE(par[0].size() == 3);
  CHECK(par[0][0] == detect(f, dets[0], lambda).values[0]);
}

TEST_CASE("image assembly, prior merge and file round trip") {
  const std::vector<Pixel> probes{{0, 0}, {2, 1}};
  const auto img = assemble_image(probes, {{1.0, 2.0}, {3.0, 4.0}}, 3, 2, 2);
  CHECK(img.at(2, 1, 1) == 4.0);
  CHECK(img.at(1, 0, 0) == 0.0);
  CHECK(img.computed[0] == 1);
  CHECK(img.computed[1] == 0);
  const auto merged = assemble_image({{1, 0}}, {{7.0, 8.0}}, 3, 2, 2, &img);
  CHECK(merged.at(0, 0, 0) == 1.0);
  CHECK(merged.at(1, 0, 1) == 8.0);
  CHECK_THROWS_AS(assemble_image(probes, {{1.0, 2.0}}, 3, 2, 2), InvalidArgument);
  CHECK_THROWS_AS(assemble_image({{3, 0}}, {{1.0, 2.0}}, 3, 2, 2), InvalidArgument);
  CHECK(image_rel_error(merged, merged, 1) == 0.0);

  const auto path = temp_path("img.lmaimg");
  save_image(path, merged);
  const auto back = load_image(path);
  CHECK(back.values == merged.values);
  CHECK(back.channels == 2);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
  CHECK_THROWS_AS(load_image(path), FormatError);
  std::filesystem::remove(path);
}
