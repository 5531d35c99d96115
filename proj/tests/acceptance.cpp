// End-to-end acceptance checks. One PASS/FAIL line per check; non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lms/app.hpp"
#include "lms/cost.hpp"
#include "lms/detect.hpp"
#include "lms/error.hpp"
#include "lms/inputwaves.hpp"
#include "lms/lma.hpp"
#include "lms/multislice.hpp"
#include "lms/plan.hpp"
#include "lms/prism.hpp"
#include "lms/scheduler.hpp"
#include "oracles.hpp"

using namespace lms;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Specimen specimen_from(const std::string& ini) { return app::build_specimen(app::parse_config(ini)); }

// 64x64 grid, four slices, nine scattered atoms.
const char* kSmallSpecimen = R"(
[grid]
nx = 64
ny = 64
lx = 12.8
ly = 12.8
[specimen]
eps = 2
slices = 4
atoms = 1.6 1.6 0.5 1.2 0.4; 6.4 1.6 1.5 0.9 0.5; 11.2 3.0 2.5 1.4 0.3; 3.0 6.4 3.5 1.0 0.4; 8.0 7.0 0.7 1.1 0.45; 11.0 9.6 1.9 0.8 0.4; 1.6 11.2 2.2 1.3 0.35; 6.4 11.0 3.1 1.0 0.5; 9.6 12.0 3.9 0.9 0.4
)";

std::vector<Pixel> block(int x0, int y0, int w, int h, int step = 1) {
  std::vector<Pixel> out;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.push_back({x0 + x * step, y0 + y * step});
  return out;
}

std::vector<STEMImage> images_of(const std::vector<PlacedField>& exits, const std::vector<Pixel>& probes,
                                 const std::vector<DetectorConfig>& dets, double lambda, int px, int py) {
  const auto rows = detect_all(exits, dets, lambda);
  std::vector<STEMImage> out;
  std::size_t col = 0;
  for (const auto& d : dets) {
    const auto ch = static_cast<int>(d.channels());
    std::vector<std::vector<double>> part;
    for (const auto& r : rows) part.emplace_back(r.begin() + static_cast<std::ptrdiff_t>(col), r.begin() + static_cast<std::ptrdiff_t>(col) + ch);
    out.push_back(assemble_image(probes, part, px, py, ch));
    col += d.channels();
  }
  return out;
}

Outcome prism_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = specimen_from(kSmallSpecimen);
  const MicroscopeParams p;
  const std::vector<Pixel> probes{{0, 0}, {21, 0}, {42, 5}, {3, 21}, {32, 32}, {50, 27}, {9, 47}, {30, 60}, {63, 63}};
  OpCounters c;
  const auto exits = prism_simulate(spec, p, probes, PrismOptions{}, c);
  double worst = 0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    OpCounters m;
    const auto ref = multislice_solve(build_probe(probes[i], p, spec.geometry()), spec, p, {}, m);
    worst = std::max(worst, rel_error(exits[i].field, ref, Norm::euclidean));
  }
  const double t = seconds_since(t0);
  return {worst < 1e-8 && t < 10.0, fmt("PRISM f=1 vs multislice, 9 probes: max rel err %.2e (< 1e-8), %.2f s (< 10 s)", worst, t)};
}

Outcome lma_degenerate() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = specimen_from(kSmallSpecimen);
  const MicroscopeParams p;
  const auto lp = build_lattices(spec.geometry(), 8, 8, LatticeMode::aligned, 1);
  const auto plan = fit_coefficients(lp, InputWaveKind::probe(), 1, p);
  const auto probes = block(0, 0, 8, 8);
  OpCounters c;
  const auto res = lma_simulate(spec, plan, probes, {}, c);
  double worst = 0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    OpCounters m;
    const auto ref = multislice_solve(build_probe(lp.probe_position(probes[i]), p, spec.geometry()), spec, p, {}, m);
    worst = std::max(worst, rel_error(res.exits[i].field, ref, Norm::euclidean));
  }
  const double t = seconds_since(t0);
  return {worst < 1e-10 && t < 10.0,
          fmt("LMA probe dictionary, L=1, f=1, 64 probes: max rel err %.2e (< 1e-10), %.2f s (< 10 s)", worst, t)};
}

Outcome linearity_unitarity() {
  const auto g = GridGeometry::make(32, 32, 6.4, 6.4);
  std::vector<AtomSpec> atoms;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pos(0, 6.4), depth(0, 32.0);
  for (int i = 0; i < 24; ++i) atoms.push_back({pos(rng), pos(rng), depth(rng), 1.0, 0.4});
  const auto spec = synth_specimen(atoms, g, 2.0, 16);
  const MicroscopeParams p;
  const MultisliceSolver solver(spec, p, {});
  OpCounters c;
  double lin = 0;
  for (unsigned trial = 0; trial < 4; ++trial) {
    const auto a = oracle::random_field(g, 10 + trial), b = oracle::random_field(g, 20 + trial);
    std::normal_distribution<double> n;
    const cplx ca{n(rng), n(rng)}, cb{n(rng), n(rng)};
    ComplexField mix = a, tb = b;
    mix *= ca;
    tb *= cb;
    mix += tb;
    auto ya = solver.solve(a, c), yb = solver.solve(b, c);
    ya *= ca;
    yb *= cb;
    ya += yb;
    lin = std::max(lin, rel_error(ya, solver.solve(mix, c), Norm::euclidean));
  }
  const auto init = oracle::random_field(g, 99);
  const double drift = std::abs(solver.solve(init, c).norm2() / init.norm2() - 1.0);
  return {lin < 1e-12 && drift < 1e-10,
          fmt("multislice linearity rel err %.2e (< 1e-12); norm drift over 16 slices %.2e (< 1e-10)", lin, drift)};
}

Outcome fit_monotone() {
  const auto g = GridGeometry::make(128, 128, 15.6, 15.6);
  const MicroscopeParams p;
  std::vector<int> Ls;
  for (int L = 1; L <= 64; ++L) Ls.push_back(L);
  const int n = trig_degree_from_probe(p, g.qx());
  const double sg = gaussian_width_from_probe(p);
  bool ok = true;
  double worst_rise = 0, l1 = -1;
  for (const auto& kind : {InputWaveKind::probe(), InputWaveKind::trig_tensor(n), InputWaveKind::gaussian(sg)}) {
    const auto rows = probe_approx_report(g, 32, 32, LatticeMode::aligned, kind, p, Ls, {1, 2});
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].f != rows[i - 1].f) continue;
      const double rise = rows[i].euclid - rows[i - 1].euclid;
      worst_rise = std::max(worst_rise, rise);
      // nested least squares: any increase is floating-point roundoff
      if (rise > 1e-12 * rows[i - 1].euclid + 1e-14) ok = false;
    }
    if (kind.tag == InputWaveTag::probe) l1 = rows.front().euclid;
  }
  ok = ok && l1 >= 0 && l1 < 1e-15;
  return {ok, fmt("fit error non-increasing in L=1..64 for probe, trig_tensor(n=%d), gaussian, f in {1,2}: "
                  "largest step up %.1e; probe L=1 error %.1e",
                  n, worst_rise, l1)};
}

Outcome gaussian_width() {
  MicroscopeParams p;
  const double s = gaussian_width_from_probe(p);
  return {std::abs(s - 0.482) < 1e-3, fmt("gaussian width %.6f A (0.482 +- 1e-3)", s)};
}

Outcome crossover() {
  const int f = cost::crossover_min_f(2048.0 * 2048.0, 625.0);
  return {f == 4, fmt("crossover at XY=2048^2, K1K2=625: minimal f = %d (expected 4)", f)};
}

Outcome counters() {
  const auto spec = specimen_from(kSmallSpecimen);
  const MicroscopeParams p;
  const int N = spec.slice_count();
  const std::vector<Pixel> probes{{0, 0}, {21, 0}, {42, 5}, {3, 21}, {32, 32}, {50, 27}, {9, 47}, {30, 60}, {63, 63}};
  OpCounters cp;
  prism_simulate(spec, p, probes, PrismOptions{}, cp);
  const auto k = build_frequency_set(spec.geometry(), p, 1).entries.size();
  const bool prism_ok = cp.multislice_calls == k && cp.fft_count == 2ull * N * k;

  const auto lp = build_lattices(spec.geometry(), 16, 16, LatticeMode::half_shift, 1);
  const auto plan = fit_coefficients(lp, InputWaveKind::gaussian(gaussian_width_from_probe(p)), 4, p);
  const auto lma_probes = block(0, 0, 3, 3);
  const auto needed = needed_input_count(lma_probes, NeighborTable(lp, 4));
  OpCounters cl;
  lma_simulate(spec, plan, lma_probes, {}, cl);
  const bool lma_ok = cl.multislice_calls == needed && cl.fft_count == 2ull * N * needed;
  return {prism_ok && lma_ok,
          fmt("PRISM calls %llu = |K_1| %zu, ffts %llu = 2N|K_1|; LMA calls %llu = needed inputs %zu, ffts %llu = 2N x calls",
              static_cast<unsigned long long>(cp.multislice_calls), k, static_cast<unsigned long long>(cp.fft_count),
              static_cast<unsigned long long>(cl.multislice_calls), needed,
              static_cast<unsigned long long>(cl.fft_count))};
}

Outcome partitions() {
  const auto g = GridGeometry::make(96, 96, 19.2, 19.2);
  const MicroscopeParams p;
  std::vector<AtomSpec> atoms;
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i) atoms.push_back({1.6 + 3.2 * i, 1.6 + 3.2 * j, 0.5 + ((i + j) % 2) * 2.0, 1.0, 0.4});
  const auto spec = synth_specimen(atoms, g, 2.0, 2);
  const int L = 9;
  const auto lp = build_lattices(g, 48, 48, LatticeMode::half_shift, 1);
  const auto plan = fit_coefficients(lp, InputWaveKind::gaussian(gaussian_width_from_probe(p)), L, p);
  const NeighborTable table(lp, L);
  const auto pixels = block(4, 6, 24, 24);
  const std::size_t minimum = needed_input_count(pixels, table);
  OpCounters cu;
  const auto plain = lma_simulate(spec, plan, pixels, {}, cu);
  bool ok = true;
  std::ostringstream costs;
  for (std::size_t M : {std::size_t(L), std::size_t(2 * L), std::size_t(4 * L)})
    for (auto s : {PartitionStrategy::row_by_row, PartitionStrategy::rectangles, PartitionStrategy::greedy}) {
      const auto part = partition_build(s, pixels, table, M, pixels.front());
      for (const auto& set : part.sets) ok = ok && needed_input_count(set, table) <= M;
      const auto cost = partition_cost(part, table);
      ok = ok && cost >= minimum;
      LmaOptions o;
      o.schedule = &part;
      OpCounters cs;
      const auto sched = lma_simulate(spec, plan, pixels, o, cs);
      ok = ok && cs.multislice_calls == cost;
      for (std::size_t k = 0; k < pixels.size(); ++k)
        ok = ok && sched.exits[k].field.storage() == plain.exits[k].field.storage();
      costs << ' ' << strategy_name(s) << "@M=" << M << ':' << cost;
    }
  return {ok, fmt("24x24 probes, L=9: bounds hold, costs >= %zu, scheduled == unscheduled bitwise;", minimum) +
                  costs.str()};
}

Outcome recompute() {
  const char* base = R"(
[grid]
nx = 128
ny = 128
lx = 25.6
ly = 25.6
[specimen]
eps = 2
slices = 4
crystal_spacing = 3.2
crystal_amplitude = 1.0
crystal_width = 0.5
[edit]
add = 12 12 3 1.5 0.5
)";
  const auto cfg = app::parse_config(base);
  const auto before = app::build_specimen(cfg);
  const auto after = app::build_edited_specimen(cfg);
  const MicroscopeParams p;
  const auto g = before.geometry();
  const auto lp = build_lattices(g, 32, 32, LatticeMode::half_shift, 1);
  const auto plan = fit_coefficients(lp, InputWaveKind::gaussian(gaussian_width_from_probe(p)), 9, p);
  const auto probes = block(0, 0, 32, 32);
  const std::vector<DetectorConfig> dets{DetectorConfig::annular("bf", 0, 15), DetectorConfig::annular("adf", 16, 40),
                                         DetectorConfig::annular("haadf", 41, 200)};
  const LmaOptions o;
  const Pixel store = lma_store_window(plan, o);

  InputBank bank;
  OpCounters c0;
  const auto old_run = lma_simulate(before, plan, probes, o, c0, &bank);
  const auto old_images = images_of(old_run.exits, probes, dets, p.lambda, 32, 32);

  const auto rp = recompute_plan(before, after, plan, probes, o.propagator);
  const MultisliceSolver solver(after, p, o.propagator);
  OpCounters c1;
  lma_propagate_inputs(solver, plan, make_input_wave(plan.kind, p, g), rp.inputs_to_redo, store, bank, c1,
                       kernels::Exec::parallel, true);
  const auto redone = lma_combine(plan, bank, rp.probes_to_redo, store, c1);
  const auto rows = detect_all(redone, dets, p.lambda);

  OpCounters c2;
  const auto fresh = lma_simulate(after, plan, probes, o, c2);
  const auto fresh_images = images_of(fresh.exits, probes, dets, p.lambda, 32, 32);

  double worst = 0;
  std::size_t col = 0;
  for (std::size_t d = 0; d < dets.size(); ++d) {
    std::vector<std::vector<double>> part;
    for (const auto& r : rows) part.emplace_back(r.begin() + static_cast<std::ptrdiff_t>(col), r.begin() + static_cast<std::ptrdiff_t>(col + 1));
    col += 1;
    const auto merged = assemble_image(rp.probes_to_redo, part, 32, 32, 1, &old_images[d]);
    worst = std::max(worst, image_rel_error(merged, fresh_images[d], 0));
  }
  const bool savings = 2 * rp.inputs_to_redo.size() < lp.sub_count() && 2 * rp.probes_to_redo.size() < probes.size();
  return {worst < 1e-9 && savings && c1.multislice_calls == rp.inputs_to_redo.size(),
          fmt("partial recompute vs fresh run, 128^2 grid: max image rel err %.2e (< 1e-9); inputs %zu/%zu, "
              "probes %zu/%zu (each < 50%%)",
              worst, rp.inputs_to_redo.size(), lp.sub_count(), rp.probes_to_redo.size(), probes.size())};
}

Outcome change_of_basis() {
  double inv = 0, resid = 0;
  for (int n = 1; n <= 16; ++n) {
    const auto mm = modulation_matrices(n);
    const int size = 2 * n + 1;
    inv = std::max(inv, (mm.m * mm.m_inv - Eigen::MatrixXcd::Identity(size, size)).cwiseAbs().maxCoeff());
    const int samples = 4 * size + 3;
    Eigen::MatrixXcd trans(size, samples), elem(size, samples);
    for (int s = 0; s < samples; ++s) {
      const double t = 2 * std::numbers::pi * s / samples;
      for (int r = 0; r < size; ++r) {
        trans(r, s) = trig_poly_phi(n, t - 2 * std::numbers::pi * (r - n) / size);
        elem(r, s) = std::polar(1.0, (r - n) * t);
      }
    }
    resid = std::max(resid, (mm.m_inv * trans - elem).cwiseAbs().maxCoeff());
  }
  return {inv < 1e-10 && resid < 1e-8,
          fmt("n=1..16: max |M M^-1 - I| %.2e (< 1e-10); elementary waves from translations residual %.2e (< 1e-8)", inv,
              resid)};
}

Outcome image_error() {
  const char* ini = R"(
[grid]
nx = 128
ny = 128
lx = 15.6
ly = 15.6
[specimen]
eps = 2
slices = 4
crystal_spacing = 3.9
crystal_amplitude = 1.0
crystal_width = 0.5
)";
  const auto spec = specimen_from(ini);
  const MicroscopeParams p;
  const auto g = spec.geometry();
  const int n = trig_degree_from_probe(p, g.qx());
  const auto lp = build_lattices(g, 64, 64, LatticeMode::half_shift, 2);
  const auto plan = fit_coefficients(lp, InputWaveKind::trig_tensor(n), 400, p);
  double fit_sup = 0;
  for (const auto& r : plan.reps) fit_sup = std::max(fit_sup, r.err_sup);

  const auto probes = block(0, 0, 16, 16, 4);
  LmaOptions o;
  o.store_window = Pixel{g.nx, g.ny};
  OpCounters c;
  const auto res = lma_simulate(spec, plan, probes, o, c);
  std::vector<PlacedField> ref;
  for (const auto& pr : probes) {
    OpCounters m;
    ref.push_back({multislice_solve(build_probe(lp.probe_position(pr), p, g), spec, p, {}, m), {}, g});
  }
  const std::vector<DetectorConfig> dets{DetectorConfig::annular("bf", 0, 15), DetectorConfig::annular("haadf", 41, 100)};
  // images indexed by position in the 16x16 subsample
  std::vector<Pixel> slots = block(0, 0, 16, 16);
  const auto a = images_of(res.exits, slots, dets, p.lambda, 16, 16);
  const auto b = images_of(ref, slots, dets, p.lambda, 16, 16);
  const double bf = image_rel_error(a[0], b[0], 0);
  const double haadf = image_rel_error(a[1], b[1], 0);
  const double worst = std::max(bf, haadf);
  const bool within = worst <= fit_sup;
  std::string detail = fmt("trig_tensor(n=%d), f=2, L=400: fit sup err %.4f; image rel err BF %.4f, HAADF %.4f", n,
                           fit_sup, bf, haadf);
  if (!within) detail += " (above 1x fit error, below 2x: reported)";
  return {worst <= 2.0 * fit_sup, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"1 prism-identity", prism_identity},   {"2 lma-degenerate", lma_degenerate},
      {"3 linearity-unitarity", linearity_unitarity}, {"4 fit-monotone", fit_monotone},
      {"5 gaussian-width", gaussian_width},   {"6 crossover", crossover},
      {"7 counters", counters},               {"8 partitions", partitions},
      {"9 recompute", recompute},             {"10 change-of-basis", change_of_basis},
      {"11 image-error", image_error},
  };
  int failed = 0;
  for (const auto& [name, fn] : checks) {
    Outcome r;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  [%s] %s  (%.1f s)\n", r.pass ? "PASS" : "FAIL", name, r.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += r.pass ? 0 : 1;
  }
  std::printf("%d of %zu checks passed\n", static_cast<int>(checks.size()) - failed, checks.size());
  return failed == 0 ? 0 : 1;
}
