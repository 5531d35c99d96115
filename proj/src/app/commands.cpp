#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "lms/app.hpp"
#include "lms/cost.hpp"
#include "lms/error.hpp"
#include "lms/kernels.hpp"
#include "lms/lma.hpp"
#include "lms/prism.hpp"

namespace lms::app {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string prepare_out(const RunConfig& cfg, const Options& opts) {
  const std::string dir = opts.out_dir.empty() ? cfg.out_dir : opts.out_dir;
  fs::create_directories(dir);
  kernels::set_workers(opts.workers > 0 ? opts.workers : cfg.workers);
  return dir;
}

std::vector<Pixel> probe_positions(const RunConfig& cfg, const std::vector<Pixel>& probes) {
  const int sx = cfg.geom.nx / cfg.probes.nx;
  const int sy = cfg.geom.ny / cfg.probes.ny;
  std::vector<Pixel> out;
  out.reserve(probes.size());
  for (const Pixel p : probes) out.push_back({p.x * sx, p.y * sy});
  return out;
}

/// One image per detector from the concatenated per-probe readings.
std::vector<STEMImage> split_images(const RunConfig& cfg, const std::vector<Pixel>& probes,
                                    const std::vector<std::vector<double>>& readings,
                                    const std::vector<STEMImage>* prior = nullptr) {
  std::vector<STEMImage> images;
  std::size_t offset = 0;
  for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
    const auto ch = cfg.detectors[d].channels();
    std::vector<std::vector<double>> part;
    part.reserve(readings.size());
    for (const auto& r : readings)
      part.emplace_back(r.begin() + static_cast<std::ptrdiff_t>(offset),
                        r.begin() + static_cast<std::ptrdiff_t>(offset + ch));
    images.push_back(assemble_image(probes, part, cfg.probes.nx, cfg.probes.ny, static_cast<int>(ch),
                                    prior ? &(*prior)[d] : nullptr));
    offset += ch;
  }
  return images;
}

void save_images(const RunConfig& cfg, const std::string& dir, const std::vector<STEMImage>& images) {
  for (std::size_t d = 0; d < images.size(); ++d) {
    const auto& name = cfg.detectors[d].name;
    save_image((fs::path(dir) / (name + ".lmaimg")).string(), images[d]);
    if (cfg.pgm) save_image_pgm((fs::path(dir) / (name + ".pgm")).string(), images[d], 0);
  }
}

ApproxPlan obtain_plan(const RunConfig& cfg, std::ostream& log) {
  const LatticePair lat = build_lattice(cfg);
  const InputWaveKind kind = resolved_kind(cfg);
  if (!cfg.lma.plan_file.empty()) {
    ApproxPlan plan = [&] {
      try {
        return load_plan(cfg.lma.plan_file);
      } catch (const FormatError& e) {
        throw ConfigError("[lma] plan: " + std::string(e.what()));
      }
    }();
    if (!(plan.lattice.geom == lat.geom) || plan.lattice.probe_nx != lat.probe_nx ||
        plan.lattice.probe_ny != lat.probe_ny || plan.lattice.input_nx != lat.input_nx ||
        plan.lattice.input_ny != lat.input_ny || plan.lattice.mode != lat.mode || plan.lattice.f != lat.f ||
        !(plan.kind == kind) || plan.L != cfg.lma.L)
      throw ConfigError("[lma] plan: stored plan does not match the [lma]/[probes]/[grid] settings");
    log << "plan loaded from " << cfg.lma.plan_file << '\n';
    return plan;
  }
  FitOptions fo;
  fo.window_factor = cfg.lma.fit_window;
  return fit_coefficients(lat, kind, cfg.lma.L, cfg.params, fo);
}

Pixel greedy_seed(const RunConfig& cfg, const std::vector<Pixel>& probes) {
  if (cfg.lma.greedy_seed) return *cfg.lma.greedy_seed;
  if (cfg.seed == 0 || probes.empty()) return probes.empty() ? Pixel{} : probes.front();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, probes.size() - 1);
  return probes[pick(rng)];
}

void write_fit_table(const std::string& path, const ApproxPlan& plan) {
  std::ofstream os(path);
  os << "rep_x,rep_y,euclid_error,sup_error\n" << std::setprecision(17);
  for (const auto& r : plan.reps) os << r.index.x << ',' << r.index.y << ',' << r.err_euclid << ',' << r.err_sup << '\n';
}

struct SolveOutcome {
  std::vector<PlacedField> exits;
  std::uint64_t modeled_calls = 0;
  std::size_t inputs_needed = 0;
  std::size_t frequency_count = 0;
  std::optional<ApproxPlan> plan;
  std::optional<Partition> partition;
};

SolveOutcome solve(const RunConfig& cfg, const Specimen& spec, const std::vector<Pixel>& probes,
                   OpCounters& counters, std::ostream& log, InputBank* bank = nullptr) {
  SolveOutcome out;
  const auto positions = probe_positions(cfg, probes);
  switch (cfg.solver) {
    case SolverKind::multislice: {
      const MultisliceSolver solver(spec, cfg.params, cfg.propagator);
      out.exits = kernels::propagate_batch(
          solver, positions.size(),
          [&](std::size_t k) { return std::make_pair(build_probe(positions[k], cfg.params, cfg.geom), positions[k]); },
          counters);
      out.modeled_calls = positions.size();
      break;
    }
    case SolverKind::prism: {
      PrismOptions po;
      po.f = cfg.prism_f;
      po.crop = cfg.prism_crop;
      po.propagator = cfg.propagator;
      out.frequency_count = build_frequency_set(cfg.geom, cfg.params, cfg.prism_f).entries.size();
      out.exits = prism_simulate(spec, cfg.params, positions, po, counters);
      out.modeled_calls = out.frequency_count;
      break;
    }
    case SolverKind::lma: {
      out.plan = obtain_plan(cfg, log);
      const NeighborTable table(out.plan->lattice, out.plan->L);
      out.inputs_needed = needed_input_count(probes, table);
      LmaOptions lo;
      lo.propagator = cfg.propagator;
      lo.store_window = cfg.lma.store;
      if (cfg.lma.M > 0) {
        out.partition = partition_build(cfg.lma.strategy, probes, table, cfg.lma.M, greedy_seed(cfg, probes));
        lo.schedule = &*out.partition;
        out.modeled_calls = partition_cost(*out.partition, table);
      } else {
        out.modeled_calls = out.inputs_needed;
      }
      out.exits = lma_simulate(spec, *out.plan, probes, lo, counters, bank).exits;
      break;
    }
  }
  return out;
}

const char* solver_name(SolverKind s) {
  switch (s) {
    case SolverKind::multislice: return "multislice";
    case SolverKind::prism: return "prism";
    case SolverKind::lma: return "lma";
  }
  return "?";
}

void write_cost_report(std::ostream& os, const RunConfig& cfg, const Specimen& spec, const SolveOutcome& o,
                       const OpCounters& c, std::size_t n_probes) {
  const int N = spec.slice_count();
  const double xy = static_cast<double>(cfg.geom.size());
  const double k1k2 = static_cast<double>(cfg.propagator.k1) * cfg.propagator.k2;
  const bool fourier = cfg.propagator.variant == PropagationVariant::fourier;
  const auto calls = static_cast<double>(c.multislice_calls);
  os << std::setprecision(6);
  os << "solver " << solver_name(cfg.solver) << '\n';
  os << "probes " << n_probes << '\n';
  os << "slices " << N << '\n';
  os << "multislice_calls measured " << c.multislice_calls << " modeled " << o.modeled_calls << '\n';
  if (fourier) os << "fft_count measured " << c.fft_count << " modeled " << 2ull * N * c.multislice_calls << '\n';
  else os << "fft_count measured " << c.fft_count << '\n';
  os << "pointwise_mul_count " << c.pointwise_mul_count << '\n';
  os << "convolution_mac_count " << c.convolution_mac_count << '\n';
  os << "combination_mac_count " << c.combination_mac_count << '\n';
  os << "coefficient_eval_count " << c.coefficient_eval_count << '\n';
  os << "model T_multislice per solve (fourier) " << cost::multislice(N, xy) << '\n';
  os << "model T_multislice per solve (realspace) " << cost::multislice_realspace(N, xy, k1k2) << '\n';
  os << "model T_multislice image " << static_cast<double>(n_probes) * cost::multislice(N, xy) << '\n';
  if (cfg.solver == SolverKind::prism)
    os << "model T_prism " << cost::prism(static_cast<double>(o.frequency_count), n_probes, N, xy, cfg.prism_f)
       << '\n';
  if (cfg.solver == SolverKind::lma) {
    const int f = o.plan->lattice.f;
    const Pixel store = cfg.lma.store.value_or(Pixel{cfg.geom.nx / f, cfg.geom.ny / f});
    const double xy_store = static_cast<double>(store.x) * store.y;
    os << "model T_lma " << cost::lma(calls, n_probes, o.plan->L, N, xy, xy_store) << '\n';
    os << "model T_lma_realspace " << cost::lma_realspace(calls, n_probes, o.plan->L, N, xy_store, k1k2) << '\n';
    os << "inputs_needed " << o.inputs_needed << " of " << o.plan->lattice.sub_count() << '\n';
    if (o.partition)
      os << "partition sets " << o.partition->sets.size() << " memory_bound " << o.partition->memory_bound << '\n';
  }
  const int fmin = cost::crossover_min_f(xy, k1k2);
  const int f_cfg = cfg.solver == SolverKind::lma ? o.plan->lattice.f : cfg.prism_f;
  os << "crossover realspace window (X/f)x(Y/f) no more expensive than fourier for f >= " << fmin << " (XY = " << xy
     << ", K1K2 = " << k1k2 << "); configured f = " << f_cfg << (f_cfg >= fmin ? " satisfies it" : " does not")
     << '\n';
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, const Options& opts, std::ostream& out) {
  const std::string dir = prepare_out(cfg, opts);
  const auto t0 = Clock::now();
  const Specimen spec = build_specimen(cfg);
  const auto probes = requested_probes(cfg);
  OpCounters counters;
  std::ostringstream log;
  const SolveOutcome o = solve(cfg, spec, probes, counters, log);
  bool partial = false;
  const auto readings = detect_all(o.exits, cfg.detectors, cfg.params.lambda, &partial);
  save_images(cfg, dir, split_images(cfg, probes, readings));
  if (o.plan) {
    save_plan((fs::path(dir) / "plan.lmaplan").string(), *o.plan);
    write_fit_table((fs::path(dir) / "fit_errors.csv").string(), *o.plan);
  }
  if (o.partition) save_partition_pgm((fs::path(dir) / "partition.pgm").string(), *o.partition, cfg.probes.nx, cfg.probes.ny);

  std::ostringstream report;
  report << log.str();
  write_cost_report(report, cfg, spec, o, counters, probes.size());
  if (o.plan)
    for (const auto& r : o.plan->reps)
      report << "fit_error rep (" << r.index.x << ", " << r.index.y << ") euclid " << r.err_euclid << " sup "
             << r.err_sup << '\n';
  if (partial) report << "warning: a detector range extends beyond the grid's Nyquist circle; values are partial\n";
  report << "elapsed_seconds " << seconds_since(t0) << '\n';
  std::ofstream((fs::path(dir) / "report.txt").string()) << report.str();
  out << report.str();
  if (opts.verbose) out << "artifacts written to " << dir << '\n';
  return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b, std::ostream& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir_a))
    if (e.path().extension() == ".lmaimg") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  int compared = 0;
  out << "detector,channels,rel_error_ch0,max_rel_error\n" << std::setprecision(6);
  for (const auto& fa : files) {
    const fs::path fb = fs::path(dir_b) / fa.filename();
    if (!fs::exists(fb)) continue;
    const STEMImage a = load_image(fa.string());
    const STEMImage b = load_image(fb.string());
    double worst = 0.0, first = 0.0;
    for (int c = 0; c < a.channels; ++c) {
      const double e = image_rel_error(a, b, c);
      if (c == 0) first = e;
      worst = std::max(worst, e);
    }
    out << fa.stem().string() << ',' << a.channels << ',' << first << ',' << worst << '\n';
    ++compared;
  }
  if (compared == 0) throw ConfigError("compare: no common .lmaimg files in " + dir_a + " and " + dir_b);
  return 0;
}

int cmd_probe_approx(const RunConfig& cfg, const Options& opts, std::ostream& out) {
  const std::string dir = prepare_out(cfg, opts);
  FitOptions fo;
  fo.window_factor = cfg.lma.fit_window;
  std::ofstream csv((fs::path(dir) / "probe_approx.csv").string());
  csv << "kind,f,L,euclid_error,sup_error,euclid_error_max,sup_error_max\n" << std::setprecision(17);
  out << std::setprecision(6);
  for (const auto& name : cfg.report.kinds) {
    RunConfig c = cfg;
    try {
      c.lma.kind.tag = InputWaveKind::parse_tag(name);
    } catch (const InvalidArgument& e) {
      throw ConfigError("[report] kinds: " + std::string(e.what()));
    }
    const InputWaveKind kind = resolved_kind(c);
    const auto rows = probe_approx_report(cfg.geom, cfg.probes.nx, cfg.probes.ny, cfg.lma.mode, kind, cfg.params,
                                          cfg.report.L, cfg.report.f, fo);
    for (const auto& r : rows) {
      csv << kind.name() << ',' << r.f << ',' << r.L << ',' << r.euclid << ',' << r.sup << ',' << r.euclid_max << ','
          << r.sup_max << '\n';
      out << kind.name() << " f=" << r.f << " L=" << r.L << " euclid=" << r.euclid << " sup=" << r.sup << '\n';
    }
  }
  return 0;
}

int cmd_partition_report(const RunConfig& cfg, const Options& opts, std::ostream& out) {
  const std::string dir = prepare_out(cfg, opts);
  const auto probes = requested_probes(cfg);
  const LatticePair lat = build_lattice(cfg);
  std::ofstream csv((fs::path(dir) / "partition_report.csv").string());
  csv << "L,M,strategy,sets,cost,minimum,max_set_inputs\n";
  for (int L : cfg.report.L) {
    if (L < 1 || static_cast<std::size_t>(L) > lat.sub_count())
      throw ConfigError("[report] L: " + std::to_string(L) + " outside [1, |I_f|]");
    const NeighborTable table(lat, L);
    const std::size_t minimum = needed_input_count(probes, table);
    for (double factor : cfg.report.M_factors) {
      const auto M = std::max<std::size_t>(static_cast<std::size_t>(L), static_cast<std::size_t>(std::lround(factor * L)));
      for (auto s : {PartitionStrategy::row_by_row, PartitionStrategy::rectangles, PartitionStrategy::greedy}) {
        const Partition part = partition_build(s, probes, table, M, greedy_seed(cfg, probes));
        std::size_t max_set = 0;
        for (const auto& set : part.sets) max_set = std::max(max_set, needed_input_count(set, table));
        const std::size_t cost = partition_cost(part, table);
        csv << L << ',' << M << ',' << strategy_name(s) << ',' << part.sets.size() << ',' << cost << ',' << minimum
            << ',' << max_set << '\n';
        out << "L=" << L << " M=" << M << ' ' << strategy_name(s) << ": sets=" << part.sets.size() << " cost=" << cost
            << " minimum=" << minimum << '\n';
        save_partition_pgm((fs::path(dir) / ("partition_L" + std::to_string(L) + "_M" + std::to_string(M) + "_" +
                                             strategy_name(s) + ".pgm"))
                               .string(),
                           part, cfg.probes.nx, cfg.probes.ny);
      }
    }
  }
  return 0;
}

int cmd_recompute_demo(const RunConfig& cfg, const Options& opts, std::ostream& out) {
  if (cfg.solver != SolverKind::lma) throw ConfigError("[solver] kind: recompute-demo needs lma");
  if (cfg.lma.M != 0) throw ConfigError("[lma] M: recompute-demo keeps every propagated input; set M = 0");
  const std::string dir = prepare_out(cfg, opts);
  const Specimen before = build_specimen(cfg);
  const Specimen after = build_edited_specimen(cfg);
  const auto probes = requested_probes(cfg);
  std::ostringstream log;

  // Baseline run, keeping every propagated input.
  InputBank bank;
  OpCounters c_before;
  auto t0 = Clock::now();
  const SolveOutcome base = solve(cfg, before, probes, c_before, log, &bank);
  const auto base_images = split_images(cfg, probes, detect_all(base.exits, cfg.detectors, cfg.params.lambda));
  const double t_base = seconds_since(t0);
  const ApproxPlan& plan = *base.plan;

  // Partial update.
  t0 = Clock::now();
  RecomputeOptions ro;
  ro.spread_angle = cfg.report.spread_angle;
  const RecomputePlan rp = recompute_plan(before, after, plan, probes, cfg.propagator, ro);
  OpCounters c_partial;
  LmaOptions lo;
  lo.propagator = cfg.propagator;
  lo.store_window = cfg.lma.store;
  const MultisliceSolver solver(after, plan.params, cfg.propagator);
  lma_propagate_inputs(solver, plan, make_input_wave(plan.kind, plan.params, cfg.geom), rp.inputs_to_redo,
                       lma_store_window(plan, lo), bank, c_partial, kernels::Exec::parallel, true);
  const auto redo_exits = lma_combine(plan, bank, rp.probes_to_redo, lma_store_window(plan, lo), c_partial);
  const auto updated = split_images(cfg, rp.probes_to_redo,
                                    detect_all(redo_exits, cfg.detectors, cfg.params.lambda), &base_images);
  const double t_partial = seconds_since(t0);

  // From-scratch reference.
  t0 = Clock::now();
  OpCounters c_full;
  const SolveOutcome full = solve(cfg, after, probes, c_full, log);
  const auto full_images = split_images(cfg, probes, detect_all(full.exits, cfg.detectors, cfg.params.lambda));
  const double t_full = seconds_since(t0);
  save_images(cfg, dir, updated);

  std::ostringstream report;
  report << std::setprecision(6);
  report << "changed_pixels " << rp.changed_region.size() << '\n';
  report << "influence_radius_angstrom " << rp.influence_radius << '\n';
  report << "inputs_to_redo " << rp.inputs_to_redo.size() << " of " << plan.lattice.sub_count() << '\n';
  report << "probes_to_redo " << rp.probes_to_redo.size() << " of " << probes.size() << '\n';
  report << "multislice_calls partial " << c_partial.multislice_calls << " full " << c_full.multislice_calls << '\n';
  report << "seconds baseline " << t_base << " partial " << t_partial << " full " << t_full << '\n';
  bool ok = true;
  for (std::size_t d = 0; d < cfg.detectors.size(); ++d) {
    double worst = 0.0;
    for (int ch = 0; ch < full_images[d].channels; ++ch) {
      const auto ref = full_images[d].channel(ch);
      const bool zero = std::all_of(ref.begin(), ref.end(), [](double v) { return v == 0.0; });
      worst = std::max(worst, zero ? 0.0 : image_rel_error(updated[d], full_images[d], ch));
    }
    ok = ok && worst < 1e-9;
    report << "rel_error " << cfg.detectors[d].name << ' ' << worst << '\n';
  }
  report << "verified " << (ok ? "yes" : "no") << '\n';
  std::ofstream((fs::path(dir) / "recompute_report.txt").string()) << report.str();
  out << report.str();
  return ok ? 0 : 3;
}

}  // namespace lms::app
