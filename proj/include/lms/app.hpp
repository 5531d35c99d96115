#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lms/detect.hpp"
#include "lms/inputwaves.hpp"
#include "lms/lattice.hpp"
#include "lms/multislice.hpp"
#include "lms/optics.hpp"
#include "lms/plan.hpp"
#include "lms/scheduler.hpp"
#include "lms/specimen.hpp"

namespace lms::app {

/// Invalid configuration; the message names the offending section and key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolverKind { multislice, prism, lma };

struct SpecimenConfig {
  std::string file;  ///< LMASLICES file; when empty the specimen is synthesized
  double eps = 2.0;
  int slices = 4;
  std::vector<AtomSpec> atoms;
  double crystal_spacing = 0.0;  ///< > 0 adds a square grid of atom columns, one atom per slice
  double crystal_amplitude = 1.0;
  double crystal_width = 0.5;
};

struct LmaConfig {
  InputWaveKind kind = InputWaveKind::probe();
  bool auto_degree = true;  ///< n from the aperture when the key is absent
  bool auto_width = true;   ///< sigma_g from the aperture when the key is absent
  int L = 1;
  LatticeMode mode = LatticeMode::aligned;
  int f = 1;
  int input_nx = 0;  ///< 0: same as the probe lattice
  int input_ny = 0;
  std::optional<Pixel> store;
  double fit_window = 0.0;
  std::string plan_file;
  std::size_t M = 0;  ///< 0: unscheduled
  PartitionStrategy strategy = PartitionStrategy::rectangles;
  std::optional<Pixel> greedy_seed;
};

struct ProbeConfig {
  int nx = 8;
  int ny = 8;
  Pixel first{0, 0};        ///< requested index range [first, last)
  std::optional<Pixel> last;
};

struct EditConfig {
  std::optional<AtomSpec> add;
  std::optional<int> remove;
};

struct ReportConfig {
  std::vector<int> L{1, 4, 9, 16};
  std::vector<int> f{1, 2};
  std::vector<std::string> kinds{"probe"};
  std::vector<double> M_factors{1, 2, 4};
  double spread_angle = 0.0;
};

struct RunConfig {
  GridGeometry geom = GridGeometry{64, 64, 8.0, 8.0};
  MicroscopeParams params;
  SpecimenConfig specimen;
  SolverKind solver = SolverKind::multislice;
  PropagatorSpec propagator;
  int prism_f = 1;
  bool prism_crop = false;
  LmaConfig lma;
  ProbeConfig probes;
  std::vector<DetectorConfig> detectors;
  std::string out_dir = "out";
  bool pgm = true;
  std::uint64_t seed = 0;
  int workers = 0;
  EditConfig edit;
  ReportConfig report;
};

/// Parses an INI file. Every key is optional; unknown sections or keys are errors.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

/// Cross-field checks (solver blocks, lattice compatibility, files exist).
void validate(const RunConfig& cfg);

Specimen build_specimen(const RunConfig& cfg);
/// The specimen with the [edit] block applied.
Specimen build_edited_specimen(const RunConfig& cfg);

/// Requested probe lattice indices in scanline order.
std::vector<Pixel> requested_probes(const RunConfig& cfg);
LatticePair build_lattice(const RunConfig& cfg);
InputWaveKind resolved_kind(const RunConfig& cfg);

struct Options {
  std::string out_dir;  ///< overrides the config when non-empty
  int workers = 0;
  bool verbose = false;
};

/// Subcommands. Each writes its artifacts and a report to `out`; the return value is the
/// process exit code.
int cmd_simulate(const RunConfig& cfg, const Options& opts, std::ostream& out);
int cmd_compare(const std::string& dir_a, const std::string& dir_b, std::ostream& out);
int cmd_probe_approx(const RunConfig& cfg, const Options& opts, std::ostream& out);
int cmd_partition_report(const RunConfig& cfg, const Options& opts, std::ostream& out);
int cmd_recompute_demo(const RunConfig& cfg, const Options& opts, std::ostream& out);

}  // namespace lms::app
