#include "lms/plan.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lms/error.hpp"

namespace lms {

namespace {

const char* mode_name(LatticeMode m) { return m == LatticeMode::aligned ? "aligned" : "half_shift"; }

std::string rep_label(Pixel idx) { return "representative (" + std::to_string(idx.x) + ", " + std::to_string(idx.y) + ")"; }

/// Flat pixel indices the least-squares rows are drawn from.
std::vector<std::size_t> fit_rows(const GridGeometry& g, Pixel center, double window_px_x, double window_px_y) {
  const int sx = window_px_x <= 0 ? g.nx : std::min(g.nx, 2 * static_cast<int>(std::ceil(window_px_x)) + 1);
  const int sy = window_px_y <= 0 ? g.ny : std::min(g.ny, 2 * static_cast<int>(std::ceil(window_px_y)) + 1);
  const Pixel o = (sx == g.nx && sy == g.ny) ? Pixel{0, 0} : window_origin(g, center, {sx, sy});
  std::vector<std::size_t> rows;
  rows.reserve(static_cast<std::size_t>(sx) * sy);
  for (int b = 0; b < sy; ++b)
    for (int a = 0; a < sx; ++a)
      rows.push_back(static_cast<std::size_t>(wrap_index(o.y + b, g.ny)) * g.nx + wrap_index(o.x + a, g.nx));
  return rows;
}

/// Householder factorization of the column-normalized dictionary for the largest L; every
/// smaller L is a leading block of the same factorization.
class NestedFit {
 public:
  NestedFit(const ComplexField& u, const ComplexField& target, const std::vector<Neighbor>& neighbors,
            const std::vector<std::size_t>& rows, double rank_tol) {
    const auto& g = u.geometry();
    const auto m = static_cast<Eigen::Index>(rows.size());
    const auto n = static_cast<Eigen::Index>(neighbors.size());
    Eigen::MatrixXcd a(m, n);
    Eigen::VectorXcd b(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto flat = rows[static_cast<std::size_t>(r)];
      const int x = static_cast<int>(flat % g.nx);
      const int y = static_cast<int>(flat / g.nx);
      b(r) = target(x, y);
      for (Eigen::Index j = 0; j < n; ++j) {
        const Pixel p = neighbors[static_cast<std::size_t>(j)].position;
        a(r, j) = u.at_wrapped(x - p.x, y - p.y);
      }
    }
    scale_ = a.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (scale_(j) == 0.0) scale_(j) = 1.0;  // an all-zero column is caught by the rank test
      a.col(j) /= scale_(j);
    }
    qr_.compute(a);
    qtb_ = qr_.householderQ().adjoint() * b;
    a_ = std::move(a);
    b_ = std::move(b);
    const auto& r = qr_.matrixQR();
    double dmax = 0.0;
    rank_ = 0;
    for (Eigen::Index j = 0; j < std::min(m, n); ++j) {
      const double d = std::abs(r(j, j));
      dmax = std::max(dmax, d);
      if (d <= rank_tol * dmax || d == 0.0) break;
      ++rank_;
    }
  }

  int rank() const { return static_cast<int>(rank_); }

  /// Least-squares solution on the first L columns with one step of iterative refinement.
  std::vector<cplx> solve(int L) const {
    const auto r = qr_.matrixQR().topLeftCorner(L, L).triangularView<Eigen::Upper>();
    Eigen::VectorXcd alpha = r.solve(qtb_.head(L));
    const Eigen::VectorXcd resid = b_ - a_.leftCols(L) * alpha;
    const Eigen::VectorXcd qtr = qr_.householderQ().adjoint() * resid;
    alpha += r.solve(qtr.head(L));
    std::vector<cplx> out(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) out[static_cast<std::size_t>(j)] = alpha(j) / scale_(j);
    return out;
  }

 private:
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr_;
  Eigen::VectorXd scale_;
  Eigen::VectorXcd qtb_;
  Eigen::MatrixXcd a_;  // normalized dictionary, kept for the refinement residual
  Eigen::VectorXcd b_;
  Eigen::Index rank_ = 0;
};

/// Fits representative `rep` for each L in `Ls` (all <= the largest).
std::vector<RepresentativeFit> fit_representative(const LatticePair& lattice, const ComplexField& u,
                                                  const MicroscopeParams& params, Pixel rep,
                                                  const std::vector<int>& Ls, const FitOptions& opts,
                                                  double r99) {
  const auto& g = lattice.geom;
  const int lmax = *std::max_element(Ls.begin(), Ls.end());
  const Pixel pos = lattice.probe_position(rep);
  const auto neighbors = neighbor_set(pos, lattice, lmax);
  const ComplexField target = build_probe(pos, params, g);
  const double half = opts.window_factor * r99;
  const auto rows = fit_rows(g, pos, opts.window_factor > 0 ? half / g.px() : 0.0,
                             opts.window_factor > 0 ? half / g.py() : 0.0);
  const NestedFit fit(u, target, neighbors, rows, opts.rank_tol);

  std::vector<RepresentativeFit> out;
  for (int L : Ls) {
    if (L > fit.rank())
      throw NumericalError("rank-deficient dictionary for " + rep_label(rep) + ": only " +
                           std::to_string(fit.rank()) + " of " + std::to_string(L) +
                           " translated input waves are independent");
    RepresentativeFit r;
    r.index = rep;
    r.coeffs = fit.solve(L);
    ProbeTerms terms;
    for (int j = 0; j < L; ++j) {
      const auto& nb = neighbors[static_cast<std::size_t>(j)];
      r.offsets.push_back(nb.offset);
      terms.positions.push_back(nb.position);
    }
    terms.coeffs = r.coeffs;
    const ComplexField approx = reconstruct_probe(terms, u);
    r.err_euclid = rel_error(approx, target, Norm::euclidean);
    r.err_sup = rel_error(approx, target, Norm::supremum);
    out.push_back(std::move(r));
  }
  return out;
}

double fit_radius(const FitOptions& opts, const MicroscopeParams& params, const GridGeometry& g) {
  return opts.window_factor > 0 ? probe_mass_radius(g, params, 0.99) : 0.0;
}

void validate_fit_options(const FitOptions& opts) {
  if (!(opts.window_factor >= 0) || !std::isfinite(opts.window_factor))
    throw InvalidArgument("fit window factor must be finite and >= 0");
  if (!(opts.rank_tol > 0) || opts.rank_tol >= 1) throw InvalidArgument("rank tolerance must lie in (0, 1)");
}

}  // namespace

ApproxPlan fit_coefficients(const LatticePair& lattice, const InputWaveKind& kind, int L,
                            const MicroscopeParams& params, const FitOptions& opts) {
  params.validate();
  kind.validate();
  validate_fit_options(opts);
  if (L < 1 || static_cast<std::size_t>(L) > lattice.sub_count())
    throw InvalidArgument("L must lie in [1, " + std::to_string(lattice.sub_count()) + "]");
  const ComplexField u = make_input_wave(kind, params, lattice.geom);
  const double r99 = fit_radius(opts, params, lattice.geom);
  ApproxPlan plan{lattice, kind, params, L, opts, {}};
  for (std::size_t r = 0; r < lattice.representative_count(); ++r) {
    auto fits = fit_representative(lattice, u, params, lattice.representative_index(static_cast<int>(r)), {L},
                                   opts, r99);
    plan.reps.push_back(std::move(fits.front()));
  }
  return plan;
}

ProbeTerms translate_plan_index(const ApproxPlan& plan, Pixel probe_index) {
  const auto& lat = plan.lattice;
  if (probe_index.x < 0 || probe_index.x >= lat.probe_nx || probe_index.y < 0 || probe_index.y >= lat.probe_ny)
    throw InvalidArgument("probe index outside the probe lattice");
  const auto& rep = plan.representative_for(probe_index);
  ProbeTerms t;
  t.probe_index = probe_index;
  t.position = lat.probe_position(probe_index);
  t.coeffs = rep.coeffs;
  for (const Pixel off : rep.offsets) {
    const Pixel pos{wrap_index(t.position.x + off.x, lat.geom.nx), wrap_index(t.position.y + off.y, lat.geom.ny)};
    const auto idx = lat.input_index(pos);
    if (!idx) throw InvalidArgument("plan does not match its lattice: translated neighbor is off the input lattice");
    t.positions.push_back(pos);
    t.inputs.push_back(*idx);
  }
  return t;
}

ProbeTerms translate_plan(const ApproxPlan& plan, Pixel probe_pos) {
  const auto idx = plan.lattice.probe_index(probe_pos);
  if (!idx)
    throw InvalidArgument("position (" + std::to_string(probe_pos.x) + ", " + std::to_string(probe_pos.y) +
                          ") is not on the probe lattice");
  return translate_plan_index(plan, *idx);
}

ComplexField reconstruct_probe(const ProbeTerms& terms, const ComplexField& u) {
  const auto& g = u.geometry();
  ComplexField out(g);
  for (std::size_t k = 0; k < terms.coeffs.size(); ++k) {
    const cplx c = terms.coeffs[k];
    const Pixel p = terms.positions[k];
    for (int y = 0; y < g.ny; ++y) {
      const int sy = wrap_index(y - p.y, g.ny);
      for (int x = 0; x < g.nx; ++x) out(x, y) += c * u(wrap_index(x - p.x, g.nx), sy);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Serialization

void save_plan(const std::string& path, const ApproxPlan& plan) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open " + path + " for writing");
  using io::format_double;
  const auto& lat = plan.lattice;
  const auto& g = lat.geom;
  const auto& p = plan.params;
  os << "LMAPLAN 1\n";
  os << "geometry " << g.nx << ' ' << g.ny << ' ' << format_double(g.lx) << ' ' << format_double(g.ly) << '\n';
  os << "microscope " << format_double(p.lambda) << ' ' << format_double(p.cs) << ' ' << format_double(p.z) << ' '
     << format_double(p.alpha_max) << ' ' << format_double(p.sigma) << '\n';
  os << "kind " << plan.kind.name() << ' ' << plan.kind.n << ' ' << format_double(plan.kind.sigma_g) << '\n';
  os << "lattice " << lat.probe_nx << ' ' << lat.probe_ny << ' ' << lat.input_nx << ' ' << lat.input_ny << ' '
     << mode_name(lat.mode) << ' ' << lat.f << '\n';
  os << "fit " << plan.L << ' ' << format_double(plan.fit.window_factor) << ' ' << format_double(plan.fit.rank_tol)
     << '\n';
  os << "reps " << plan.reps.size() << '\n';
  for (const auto& r : plan.reps)
    os << "rep " << r.index.x << ' ' << r.index.y << ' ' << format_double(r.err_euclid) << ' '
       << format_double(r.err_sup) << '\n';
  os << "END\n";
  for (const auto& r : plan.reps) {
    std::vector<double> buf;
    for (const Pixel o : r.offsets) {
      buf.push_back(o.x);
      buf.push_back(o.y);
    }
    for (const cplx c : r.coeffs) {
      buf.push_back(c.real());
      buf.push_back(c.imag());
    }
    io::write_f64(os, buf);
  }
  if (!os) throw InvalidArgument("write failed: " + path);
}

namespace {

std::istringstream expect_line(std::istream& is, const std::string& keyword) {
  std::istringstream line(io::read_header_line(is));
  std::string key;
  if (!(line >> key) || key != keyword) throw FormatError("LMAPLAN: expected '" + keyword + "' line");
  return line;
}

void expect_end(std::istringstream& line, const std::string& keyword) {
  if (line.fail()) throw FormatError("LMAPLAN: malformed '" + keyword + "' line");
  std::string rest;
  if (line >> rest) throw FormatError("LMAPLAN: trailing tokens on '" + keyword + "' line");
}

}  // namespace

ApproxPlan load_plan(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("cannot open " + path);
  {
    auto l = expect_line(is, "LMAPLAN");
    int version = 0;
    l >> version;
    expect_end(l, "LMAPLAN");
    if (version != 1) throw FormatError("unsupported LMAPLAN version " + std::to_string(version));
  }
  ApproxPlan plan;
  GridGeometry g;
  {
    auto l = expect_line(is, "geometry");
    int nx = 0, ny = 0;
    double lx = 0, ly = 0;
    l >> nx >> ny >> lx >> ly;
    expect_end(l, "geometry");
    try {
      g = GridGeometry::make(nx, ny, lx, ly);
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("LMAPLAN: ") + e.what());
    }
  }
  {
    auto l = expect_line(is, "microscope");
    auto& p = plan.params;
    l >> p.lambda >> p.cs >> p.z >> p.alpha_max >> p.sigma;
    expect_end(l, "microscope");
  }
  {
    auto l = expect_line(is, "kind");
    std::string tag;
    l >> tag >> plan.kind.n >> plan.kind.sigma_g;
    expect_end(l, "kind");
    try {
      plan.kind.tag = InputWaveKind::parse_tag(tag);
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("LMAPLAN: ") + e.what());
    }
  }
  int pnx = 0, pny = 0, rnx = 0, rny = 0, f = 0;
  std::string mode;
  {
    auto l = expect_line(is, "lattice");
    l >> pnx >> pny >> rnx >> rny >> mode >> f;
    expect_end(l, "lattice");
    if (mode != "aligned" && mode != "half_shift") throw FormatError("LMAPLAN: unknown lattice mode " + mode);
  }
  {
    auto l = expect_line(is, "fit");
    l >> plan.L >> plan.fit.window_factor >> plan.fit.rank_tol;
    expect_end(l, "fit");
  }
  std::size_t nreps = 0;
  {
    auto l = expect_line(is, "reps");
    l >> nreps;
    expect_end(l, "reps");
  }
  try {
    plan.params.validate();
    plan.kind.validate();
    validate_fit_options(plan.fit);
    plan.lattice = build_lattices(g, pnx, pny, rnx, rny,
                                  mode == "aligned" ? LatticeMode::aligned : LatticeMode::half_shift, f);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("LMAPLAN: ") + e.what());
  }
  const auto& lat = plan.lattice;
  if (lat.probe_nx != pnx || lat.probe_ny != pny || lat.input_nx != rnx || lat.input_ny != rny)
    throw FormatError("LMAPLAN: stored lattice counts are not canonical");
  if (nreps != lat.representative_count()) throw FormatError("LMAPLAN: representative count mismatch");
  if (plan.L < 1 || static_cast<std::size_t>(plan.L) > lat.sub_count()) throw FormatError("LMAPLAN: bad L");
  plan.reps.resize(nreps);
  for (std::size_t r = 0; r < nreps; ++r) {
    auto l = expect_line(is, "rep");
    auto& rep = plan.reps[r];
    l >> rep.index.x >> rep.index.y >> rep.err_euclid >> rep.err_sup;
    expect_end(l, "rep");
    if (rep.index != lat.representative_index(static_cast<int>(r))) throw FormatError("LMAPLAN: representative order");
  }
  {
    auto l = expect_line(is, "END");
    expect_end(l, "END");
  }
  const auto L = static_cast<std::size_t>(plan.L);
  for (auto& rep : plan.reps) {
    std::vector<double> buf(4 * L);
    try {
      io::read_f64(is, buf);
    } catch (const FormatError&) {
      throw FormatError("LMAPLAN: truncated coefficient payload");
    }
    for (std::size_t j = 0; j < L; ++j) {
      rep.offsets.push_back({static_cast<int>(buf[2 * j]), static_cast<int>(buf[2 * j + 1])});
      rep.coeffs.emplace_back(buf[2 * L + 2 * j], buf[2 * L + 2 * j + 1]);
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("LMAPLAN: trailing payload");

  // Re-verify against the lattice and the recorded errors.
  const ComplexField u = make_input_wave(plan.kind, plan.params, g);
  for (const auto& rep : plan.reps) {
    const Pixel pos = lat.probe_position(rep.index);
    const auto nb = neighbor_set(pos, lat, plan.L);
    for (std::size_t j = 0; j < L; ++j)
      if (nb[j].offset != rep.offsets[j]) throw FormatError("LMAPLAN: neighbor offsets do not match the lattice");
    for (const cplx c : rep.coeffs)
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw FormatError("LMAPLAN: non-finite coefficient");
    const ComplexField target = build_probe(pos, plan.params, g);
    const ComplexField approx = reconstruct_probe(translate_plan_index(plan, rep.index), u);
    const double e2 = rel_error(approx, target, Norm::euclidean);
    const double es = rel_error(approx, target, Norm::supremum);
    if (std::abs(e2 - rep.err_euclid) > 1e-12 || std::abs(es - rep.err_sup) > 1e-12)
      throw FormatError("LMAPLAN: recorded fit error does not match the coefficients for " + rep_label(rep.index));
  }
  return plan;
}

// ---------------------------------------------------------------------------------------------

std::vector<ApproxReportRow> probe_approx_report(const GridGeometry& geom, int probe_nx, int probe_ny,
                                                 LatticeMode mode, const InputWaveKind& kind,
                                                 const MicroscopeParams& params, const std::vector<int>& L_values,
                                                 const std::vector<int>& f_values, const FitOptions& opts) {
  params.validate();
  kind.validate();
  validate_fit_options(opts);
  if (L_values.empty() || f_values.empty()) throw InvalidArgument("empty L or f range");
  const ComplexField u = make_input_wave(kind, params, geom);
  const double r99 = fit_radius(opts, params, geom);
  std::vector<int> Ls = L_values;
  std::sort(Ls.begin(), Ls.end());
  Ls.erase(std::unique(Ls.begin(), Ls.end()), Ls.end());
  std::vector<ApproxReportRow> rows;
  for (int f : f_values) {
    const LatticePair lat = build_lattices(geom, probe_nx, probe_ny, mode, f);
    if (Ls.front() < 1 || static_cast<std::size_t>(Ls.back()) > lat.sub_count())
      throw InvalidArgument("L range exceeds |I_f| = " + std::to_string(lat.sub_count()) + " for f = " +
                            std::to_string(f));
    std::vector<ApproxReportRow> block(Ls.size());
    for (std::size_t r = 0; r < lat.representative_count(); ++r) {
      const auto fits = fit_representative(lat, u, params, lat.representative_index(static_cast<int>(r)), Ls, opts,
                                           r99);
      for (std::size_t k = 0; k < Ls.size(); ++k) {
        auto& row = block[k];
        row.f = f;
        row.L = Ls[k];
        if (r == 0) {
          row.euclid = fits[k].err_euclid;
          row.sup = fits[k].err_sup;
        }
        row.euclid_max = std::max(row.euclid_max, fits[k].err_euclid);
        row.sup_max = std::max(row.sup_max, fits[k].err_sup);
      }
    }
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

}  // namespace lms
