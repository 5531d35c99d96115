#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <string>

#include "lms/error.hpp"
#include "lms/plan.hpp"
#include "oracles.hpp"

using namespace lms;

namespace {
const GridGeometry g64 = GridGeometry::make(64, 64, 12.8, 12.8);

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("lms_test_" + name)).string();
}

// Least squares through the normal equations, on the full grid.
Eigen::VectorXcd normal_equations(const ComplexField& u, const std::vector<Pixel>& positions, const ComplexField& target) {
  const auto rows = static_cast<Eigen::Index>(target.size());
  Eigen::MatrixXcd a(rows, static_cast<Eigen::Index>(positions.size()));
  for (std::size_t j = 0; j < positions.size(); ++j) {
    const auto col = periodic_translate(u, positions[j]);
    for (Eigen::Index i = 0; i < rows; ++i) a(i, static_cast<Eigen::Index>(j)) = col.storage()[static_cast<std::size_t>(i)];
  }
  Eigen::VectorXcd b(rows);
  for (Eigen::Index i = 0; i < rows; ++i) b(i) = target.storage()[static_cast<std::size_t>(i)];
  return (a.adjoint() * a).ldlt().solve(a.adjoint() * b);
}
}  // namespace

TEST_CASE("probe dictionary with L = 1 reproduces the probe") {
  const MicroscopeParams p;
  const auto lp = build_lattices(g64, 16, 16, LatticeMode::aligned, 1);
  const auto plan = fit_coefficients(lp, InputWaveKind::probe(), 1, p);
  REQUIRE(plan.reps.size() == 1);
  CHECK(std::abs(plan.reps[0].coeffs[0] - cplx{1.0}) < 1e-12);
  CHECK(plan.reps[0].err_euclid < 1e-12);
  CHECK(plan.reps[0].err_sup < 1e-12);
}

TEST_CASE("coefficients match the normal equations") {
  const MicroscopeParams p;
  const auto lp = build_lattices(g64, 16, 16, LatticeMode::half_shift, 1);
  const auto kind = InputWaveKind::gaussian(0.5);
  const auto plan = fit_coefficients(lp, kind, 9, p);
  const auto u = make_input_wave(kind, p, g64);
  const auto terms = translate_plan_index(plan, {0, 0});
  const auto alpha = normal_equations(u, terms.positions, build_probe(terms.position, p, g64));
  for (std::size_t j = 0; j < terms.coeffs.size(); ++j)
    CHECK(std::abs(terms.coeffs[j] - alpha(static_cast<Eigen::Index>(j))) < 1e-8 * alpha.norm());
  const auto recon = reconstruct_probe(terms, u);
  const auto probe = build_probe(terms.position, p, g64);
  CHECK(rel_error(recon, probe, Norm::euclidean) == doctest::Approx(plan.reps[0].err_euclid).epsilon(1e-10));
  CHECK(rel_error(recon, probe, Norm::supremum) == doctest::Approx(plan.reps[0].err_sup).epsilon(1e-10));
}

TEST_CASE("translated coefficients give the same error at every congruent probe") {
  const MicroscopeParams p;
  const auto lp = build_lattices(g64, 16, 16, LatticeMode::aligned, 2);
  const auto kind = InputWaveKind::trig_tensor(6);
  const auto plan = fit_coefficients(lp, kind, 9, p);
  CHECK(plan.reps.size() == lp.representative_count());
  const auto u = make_input_wave(kind, p, g64);
  for (Pixel idx : {Pixel{0, 0}, Pixel{1, 0}, Pixel{3, 7}, Pixel{15, 14}, Pixel{6, 6}}) {
    const auto terms = translate_plan_index(plan, idx);
    const auto probe = build_probe(lp.probe_position(idx), p, g64);
    const auto& rep = plan.representative_for(idx);
    CHECK(rel_error(reconstruct_probe(terms, u), probe, Norm::euclidean) ==
          doctest::Approx(rep.err_euclid).epsilon(1e-10));
  }
  CHECK_THROWS_AS(translate_plan(plan, {1, 0}), InvalidArgument);
}

TEST_CASE("many-to-one plan agrees with a direct fit at a non-representative probe") {
  const MicroscopeParams p;
  const auto lp = build_lattices(g64, 32, 32, 16, 16, LatticeMode::aligned, 1);
  const auto kind = InputWaveKind::gaussian(0.5);
  const auto plan = fit_coefficients(lp, kind, 4, p);
  CHECK(plan.reps.size() == 4);
  const auto u = make_input_wave(kind, p, g64);
  const Pixel idx{3, 5};
  const Pixel pos = lp.probe_position(idx);
  std::vector<Pixel> positions;
  for (const auto& n : neighbor_set(pos, lp, 4)) positions.push_back(n.position);
  const auto alpha = normal_equations(u, positions, build_probe(pos, p, g64));
  const auto terms = translate_plan(plan, pos);
  CHECK(terms.positions == positions);
  for (std::size_t j = 0; j < 4; ++j)
    CHECK(std::abs(terms.coeffs[j] - alpha(static_cast<Eigen::Index>(j))) < 1e-8 * alpha.norm());
}

TEST_CASE("fit errors do not increase with L") {
  const MicroscopeParams p;
  std::vector<int> Ls;
  for (int L = 1; L <= 16; ++L) Ls.push_back(L);
  for (const auto& kind : {InputWaveKind::gaussian(0.5), InputWaveKind::trig_tensor(6)}) {
    const auto rows = probe_approx_report(g64, 16, 16, LatticeMode::aligned, kind, p, Ls, {1, 2});
    REQUIRE(rows.size() == 32);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].f != rows[i - 1].f) continue;
      CHECK(rows[i].euclid <= rows[i - 1].euclid * (1 + 1e-9) + 1e-14);
      CHECK(rows[i].euclid_max <= rows[i - 1].euclid_max * (1 + 1e-9) + 1e-14);
    }
  }
}

TEST_CASE("rank-deficient dictionaries are reported") {
  const MicroscopeParams p;
  const auto lp = build_lattices(g64, 16, 16, LatticeMode::aligned, 1);
  try {
    fit_coefficients(lp, InputWaveKind::trig_tensor(2), 36, p);
    FAIL("expected a rank error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("representative") != std::string::npos);
  }
  CHECK_THROWS_AS(fit_coefficients(lp, InputWaveKind::probe(), 0, p), InvalidArgument);
}

TEST_CASE("plan file round trip and corruption") {
  const MicroscopeParams p;
  const auto lp = build_lattices(g64, 16, 16, LatticeMode::half_shift, 2);
  const auto plan = fit_coefficients(lp, InputWaveKind::gaussian(0.4), 6, p);
  const auto path = temp_path("plan.lmaplan");
  save_plan(path, plan);
  const auto back = load_plan(path);
  CHECK(back.L == plan.L);
  CHECK(back.kind == plan.kind);
  REQUIRE(back.reps.size() == plan.reps.size());
  for (std::size_t r = 0; r < plan.reps.size(); ++r) {
    CHECK(back.reps[r].coeffs == plan.reps[r].coeffs);
    CHECK(back.reps[r].offsets == plan.reps[r].offsets);
  }

  std::string bytes;
  {
    std::ifstream is(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(is), {});
  }
  auto write = [&](const std::string& b) {
    std::ofstream os(path, std::ios::binary);
    os << b;
  };
  std::string corrupt = bytes;
  corrupt[corrupt.size() - 3] ^= 0x40;  // last coefficient
  write(corrupt);
  CHECK_THROWS_AS(load_plan(path), FormatError);
  write(bytes.substr(0, bytes.size() - 16));
  CHECK_THROWS_AS(load_plan(path), FormatError);
  write("LMAPLAN 2\n");
  CHECK_THROWS_AS(load_plan(path), FormatError);
  std::filesystem::remove(path);
}
