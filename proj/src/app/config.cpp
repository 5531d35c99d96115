#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "lms/app.hpp"
#include "lms/error.hpp"

namespace lms::app {

namespace pt = boost::property_tree;

namespace {

template <class T>
T parse_scalar(const std::string& where, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  std::string rest;
  if (in.fail() || (in >> rest)) throw ConfigError(where + ": cannot parse '" + text + "'");
  return v;
}

template <>
bool parse_scalar<bool>(const std::string& where, const std::string& text) {
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  throw ConfigError(where + ": expected a boolean, got '" + text + "'");
}

template <>
std::string parse_scalar<std::string>(const std::string&, const std::string& text) {
  return text;
}

template <class T>
std::vector<T> parse_list(const std::string& where, const std::string& text) {
  std::istringstream in(text);
  std::vector<T> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_scalar<T>(where, tok));
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

Pixel parse_pair(const std::string& where, const std::string& text) {
  const auto v = parse_list<int>(where, text);
  if (v.size() != 2) throw ConfigError(where + ": expected two integers");
  return {v[0], v[1]};
}

AtomSpec parse_atom(const std::string& where, const std::string& text) {
  const auto v = parse_list<double>(where, text);
  if (v.size() != 5) throw ConfigError(where + ": an atom is 'x y z amplitude width'");
  return {v[0], v[1], v[2], v[3], v[4]};
}

/// One INI section; remembers which keys were read so leftovers can be rejected.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return it->second.data();
  }

  template <class T>
  void read(const std::string& key, T& target) {
    if (auto v = raw(key)) target = parse_scalar<T>(where(key), *v);
  }

  void finish() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_)
      if (!used_.count(key)) throw ConfigError(where(key) + ": unknown key");
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
  std::set<std::string> used_;
};

RunConfig from_tree(const pt::ptree& root) {
  static const std::set<std::string> known{"grid",      "microscope", "specimen", "solver", "prism", "lma",
                                           "probes",    "detectors",  "output",   "run",    "edit",  "report"};
  std::map<std::string, const pt::ptree*> sections;
  for (const auto& [name, child] : root) {
    if (child.empty() && !child.data().empty()) throw ConfigError("key '" + name + "' outside any section");
    if (!known.count(name)) throw ConfigError("[" + name + "]: unknown section");
    sections[name] = &child;
  }
  auto section = [&](const std::string& name) {
    auto it = sections.find(name);
    return Section(it == sections.end() ? nullptr : it->second, name);
  };

  RunConfig cfg;
  {
    auto s = section("grid");
    s.read("nx", cfg.geom.nx);
    s.read("ny", cfg.geom.ny);
    s.read("lx", cfg.geom.lx);
    s.read("ly", cfg.geom.ly);
    s.finish();
    try {
      cfg.geom = GridGeometry::make(cfg.geom.nx, cfg.geom.ny, cfg.geom.lx, cfg.geom.ly);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("[grid]: ") + e.what());
    }
  }
  {
    auto s = section("microscope");
    s.read("lambda", cfg.params.lambda);
    s.read("cs", cfg.params.cs);
    s.read("z", cfg.params.z);
    s.read("alpha_max", cfg.params.alpha_max);
    s.read("sigma", cfg.params.sigma);
    s.finish();
  }
  {
    auto s = section("specimen");
    s.read("file", cfg.specimen.file);
    s.read("eps", cfg.specimen.eps);
    s.read("slices", cfg.specimen.slices);
    if (auto v = s.raw("atoms")) {
      std::istringstream in(*v);
      std::string item;
      while (std::getline(in, item, ';'))
        if (item.find_first_not_of(" \t") != std::string::npos)
          cfg.specimen.atoms.push_back(parse_atom(s.where("atoms"), item));
    }
    s.read("crystal_spacing", cfg.specimen.crystal_spacing);
    s.read("crystal_amplitude", cfg.specimen.crystal_amplitude);
    s.read("crystal_width", cfg.specimen.crystal_width);
    s.finish();
  }
  {
    auto s = section("solver");
    if (auto v = s.raw("kind")) {
      if (*v == "multislice") cfg.solver = SolverKind::multislice;
      else if (*v == "prism") cfg.solver = SolverKind::prism;
      else if (*v == "lma") cfg.solver = SolverKind::lma;
      else throw ConfigError(s.where("kind") + ": expected multislice, prism or lma");
    }
    if (auto v = s.raw("variant")) {
      if (*v == "fourier") cfg.propagator.variant = PropagationVariant::fourier;
      else if (*v == "realspace") cfg.propagator.variant = PropagationVariant::realspace;
      else throw ConfigError(s.where("variant") + ": expected fourier or realspace");
    }
    s.read("k1", cfg.propagator.k1);
    s.read("k2", cfg.propagator.k2);
    if (auto v = s.raw("window")) cfg.propagator.window = parse_pair(s.where("window"), *v);
    s.read("bandlimit", cfg.propagator.bandlimit);
    s.finish();
  }
  {
    auto s = section("prism");
    s.read("f", cfg.prism_f);
    s.read("crop", cfg.prism_crop);
    s.finish();
  }
  {
    auto s = section("lma");
    auto& l = cfg.lma;
    if (auto v = s.raw("wave")) {
      try {
        l.kind.tag = InputWaveKind::parse_tag(*v);
      } catch (const InvalidArgument& e) {
        throw ConfigError(s.where("wave") + ": " + e.what());
      }
    }
    if (auto v = s.raw("n")) {
      l.kind.n = parse_scalar<int>(s.where("n"), *v);
      l.auto_degree = false;
    }
    if (auto v = s.raw("sigma_g")) {
      l.kind.sigma_g = parse_scalar<double>(s.where("sigma_g"), *v);
      l.auto_width = false;
    }
    s.read("L", l.L);
    if (auto v = s.raw("mode")) {
      if (*v == "aligned") l.mode = LatticeMode::aligned;
      else if (*v == "half_shift") l.mode = LatticeMode::half_shift;
      else throw ConfigError(s.where("mode") + ": expected aligned or half_shift");
    }
    s.read("f", l.f);
    s.read("input_nx", l.input_nx);
    s.read("input_ny", l.input_ny);
    if (auto v = s.raw("store")) l.store = parse_pair(s.where("store"), *v);
    s.read("fit_window", l.fit_window);
    s.read("plan", l.plan_file);
    s.read("M", l.M);
    if (auto v = s.raw("strategy")) {
      try {
        l.strategy = parse_strategy(*v);
      } catch (const InvalidArgument& e) {
        throw ConfigError(s.where("strategy") + ": " + e.what());
      }
    }
    if (auto v = s.raw("greedy_seed")) l.greedy_seed = parse_pair(s.where("greedy_seed"), *v);
    s.finish();
  }
  {
    auto s = section("probes");
    s.read("nx", cfg.probes.nx);
    s.read("ny", cfg.probes.ny);
    if (auto v = s.raw("first")) cfg.probes.first = parse_pair(s.where("first"), *v);
    if (auto v = s.raw("last")) cfg.probes.last = parse_pair(s.where("last"), *v);
    s.finish();
  }
  if (auto it = sections.find("detectors"); it != sections.end()) {
    for (const auto& [name, child] : *it->second) {
      try {
        cfg.detectors.push_back(DetectorConfig::parse(name, child.data()));
      } catch (const InvalidArgument& e) {
        throw ConfigError("[detectors] " + name + ": " + e.what());
      }
    }
  } else {
    cfg.detectors = {DetectorConfig::annular("bf", 0, 15), DetectorConfig::annular("adf", 16, 40),
                     DetectorConfig::annular("haadf", 41, 200)};
  }
  {
    auto s = section("output");
    s.read("dir", cfg.out_dir);
    s.read("pgm", cfg.pgm);
    s.finish();
  }
  {
    auto s = section("run");
    s.read("seed", cfg.seed);
    s.read("workers", cfg.workers);
    s.finish();
  }
  {
    auto s = section("edit");
    if (auto v = s.raw("add")) cfg.edit.add = parse_atom(s.where("add"), *v);
    if (auto v = s.raw("remove")) cfg.edit.remove = parse_scalar<int>(s.where("remove"), *v);
    s.finish();
  }
  {
    auto s = section("report");
    if (auto v = s.raw("L")) cfg.report.L = parse_list<int>(s.where("L"), *v);
    if (auto v = s.raw("f")) cfg.report.f = parse_list<int>(s.where("f"), *v);
    if (auto v = s.raw("kinds")) cfg.report.kinds = parse_list<std::string>(s.where("kinds"), *v);
    if (auto v = s.raw("M_factors")) cfg.report.M_factors = parse_list<double>(s.where("M_factors"), *v);
    s.read("spread_angle", cfg.report.spread_angle);
    s.finish();
  }
  validate(cfg);
  return cfg;
}

template <class F>
void as_config_error(const std::string& where, F&& f) {
  try {
    f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  return from_tree(tree);
}

RunConfig load_config(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return from_tree(tree);
}

LatticePair build_lattice(const RunConfig& cfg) {
  const auto& l = cfg.lma;
  return build_lattices(cfg.geom, cfg.probes.nx, cfg.probes.ny, l.input_nx > 0 ? l.input_nx : cfg.probes.nx,
                        l.input_ny > 0 ? l.input_ny : cfg.probes.ny, l.mode, l.f);
}

InputWaveKind resolved_kind(const RunConfig& cfg) {
  InputWaveKind k = cfg.lma.kind;
  if (cfg.lma.auto_degree) k.n = trig_degree_from_probe(cfg.params, std::min(cfg.geom.qx(), cfg.geom.qy()));
  if (cfg.lma.auto_width) k.sigma_g = gaussian_width_from_probe(cfg.params);
  return k;
}

void validate(const RunConfig& cfg) {
  as_config_error("[microscope]", [&] { cfg.params.validate(); });
  as_config_error("[solver]", [&] { cfg.propagator.validate(cfg.geom); });
  const auto& sp = cfg.specimen;
  if (!sp.file.empty()) {
    if (!std::filesystem::exists(sp.file)) throw ConfigError("[specimen] file: '" + sp.file + "' does not exist");
    if (!sp.atoms.empty() || sp.crystal_spacing > 0)
      throw ConfigError("[specimen]: a specimen file excludes atoms and crystal_spacing");
  } else {
    if (!(sp.eps > 0)) throw ConfigError("[specimen] eps: must be positive");
    if (sp.slices < 1) throw ConfigError("[specimen] slices: must be >= 1");
    if (sp.crystal_spacing < 0) throw ConfigError("[specimen] crystal_spacing: must be >= 0");
  }
  if (cfg.prism_f < 1) throw ConfigError("[prism] f: must be >= 1");
  if (cfg.probes.nx < 1 || cfg.probes.ny < 1) throw ConfigError("[probes] nx, ny: must be >= 1");
  if (cfg.geom.nx % cfg.probes.nx != 0 || cfg.geom.ny % cfg.probes.ny != 0)
    throw ConfigError("[probes] nx, ny: must divide the grid size so probes sit on pixels");
  const Pixel last = cfg.probes.last.value_or(Pixel{cfg.probes.nx, cfg.probes.ny});
  if (cfg.probes.first.x < 0 || cfg.probes.first.y < 0 || last.x > cfg.probes.nx || last.y > cfg.probes.ny ||
      cfg.probes.first.x >= last.x || cfg.probes.first.y >= last.y)
    throw ConfigError("[probes] first, last: need 0 <= first < last <= (nx, ny)");
  if (cfg.detectors.empty()) throw ConfigError("[detectors]: at least one detector is required");
  if (cfg.workers < 0) throw ConfigError("[run] workers: must be >= 0");
  if (cfg.solver == SolverKind::lma) {
    const auto& l = cfg.lma;
    as_config_error("[lma]", [&] {
      const LatticePair lat = build_lattice(cfg);
      if (lat.probe_nx != cfg.probes.nx || lat.probe_ny != cfg.probes.ny)
        throw InvalidArgument("probe lattice would be rounded to " + std::to_string(lat.probe_nx) + " x " +
                              std::to_string(lat.probe_ny) + " for f = " + std::to_string(l.f) +
                              "; set [probes] nx, ny accordingly");
      if (l.L < 1 || static_cast<std::size_t>(l.L) > lat.sub_count())
        throw InvalidArgument("L must lie in [1, " + std::to_string(lat.sub_count()) + "]");
      resolved_kind(cfg).validate();
    });
    if (l.M != 0 && l.M < static_cast<std::size_t>(l.L)) throw ConfigError("[lma] M: must be 0 or >= L");
    if (l.fit_window < 0) throw ConfigError("[lma] fit_window: must be >= 0");
    if (!l.plan_file.empty() && !std::filesystem::exists(l.plan_file))
      throw ConfigError("[lma] plan: '" + l.plan_file + "' does not exist");
    if (l.store && (l.store->x < 1 || l.store->y < 1 || l.store->x > cfg.geom.nx || l.store->y > cfg.geom.ny))
      throw ConfigError("[lma] store: window must fit the grid");
  }
}

namespace {

std::vector<AtomSpec> all_atoms(const RunConfig& cfg) {
  const auto& sp = cfg.specimen;
  std::vector<AtomSpec> atoms = sp.atoms;
  if (sp.crystal_spacing > 0) {
    for (double y = 0.5 * sp.crystal_spacing; y < cfg.geom.ly; y += sp.crystal_spacing)
      for (double x = 0.5 * sp.crystal_spacing; x < cfg.geom.lx; x += sp.crystal_spacing)
        for (int j = 0; j < sp.slices; ++j)
          atoms.push_back({x, y, (j + 0.5) * sp.eps, sp.crystal_amplitude, sp.crystal_width});
  }
  return atoms;
}

Specimen make_specimen(const RunConfig& cfg, const std::vector<AtomSpec>& atoms) {
  try {
    return synth_specimen(atoms, cfg.geom, cfg.specimen.eps, cfg.specimen.slices);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("[specimen]: ") + e.what());
  }
}

}  // namespace

Specimen build_specimen(const RunConfig& cfg) {
  if (!cfg.specimen.file.empty()) {
    Specimen s = [&] {
      try {
        return load_specimen(cfg.specimen.file);
      } catch (const FormatError& e) {
        throw ConfigError("[specimen] file: " + std::string(e.what()));
      }
    }();
    if (!(s.geometry() == cfg.geom)) throw ConfigError("[specimen] file: geometry differs from [grid]");
    return s;
  }
  return make_specimen(cfg, all_atoms(cfg));
}

Specimen build_edited_specimen(const RunConfig& cfg) {
  if (!cfg.specimen.file.empty()) throw ConfigError("[edit]: edits need a synthesized specimen");
  if (!cfg.edit.add && !cfg.edit.remove) throw ConfigError("[edit]: set add and/or remove");
  auto atoms = all_atoms(cfg);
  if (cfg.edit.remove) {
    const int i = *cfg.edit.remove;
    if (i < 0 || static_cast<std::size_t>(i) >= atoms.size())
      throw ConfigError("[edit] remove: atom index out of range (" + std::to_string(atoms.size()) + " atoms)");
    atoms.erase(atoms.begin() + i);
  }
  if (cfg.edit.add) atoms.push_back(*cfg.edit.add);
  return make_specimen(cfg, atoms);
}

std::vector<Pixel> requested_probes(const RunConfig& cfg) {
  const Pixel last = cfg.probes.last.value_or(Pixel{cfg.probes.nx, cfg.probes.ny});
  std::vector<Pixel> out;
  for (int b = cfg.probes.first.y; b < last.y; ++b)
    for (int a = cfg.probes.first.x; a < last.x; ++a) out.push_back({a, b});
  return out;
}

}  // namespace lms::app
