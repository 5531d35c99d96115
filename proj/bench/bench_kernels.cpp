// Times the OpenMP kernels against their serial reference paths.
//   bench_kernels [grid=128] [repeats=3]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <vector>

#include "lms/detect.hpp"
#include "lms/kernels.hpp"
#include "lms/multislice.hpp"
#include "lms/optics.hpp"

using namespace lms;

namespace {

double best_of(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel) {
  std::printf("%-22s serial %9.4f s   parallel %9.4f s   speedup %5.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 128;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  const auto g = GridGeometry::make(n, n, n * 0.2, n * 0.2);
  const MicroscopeParams p;
  std::printf("grid %dx%d, %d OpenMP workers, best of %d\n", n, n, kernels::workers(), repeats);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pos(0.0, g.lx);
  std::vector<AtomSpec> atoms;
  for (int i = 0; i < n / 4; ++i) atoms.push_back({pos(rng), pos(rng), 0.5 + (i % 4) * 2.0, 1.0, 0.4});
  const auto spec = synth_specimen(atoms, g, 2.0, 4);
  const MultisliceSolver solver(spec, p, {});

  const std::size_t waves = 32;
  auto make = [&](std::size_t i) {
    const Pixel c{static_cast<int>(i * 7) % n, static_cast<int>(i * 13) % n};
    return std::pair{build_probe(c, p, g), c};
  };
  std::vector<PlacedField> sources;
  {
    OpCounters c;
    const double ts = best_of(repeats, [&] { kernels::propagate_batch(solver, waves, make, c, std::nullopt, kernels::Exec::serial); });
    const double tp = best_of(repeats, [&] { sources = kernels::propagate_batch(solver, waves, make, c); });
    row("propagate_batch", ts, tp);
  }

  std::vector<kernels::Combination> combos;
  std::uniform_int_distribution<int> pix(0, n - 1);
  std::normal_distribution<double> nd;
  for (int j = 0; j < 256; ++j) {
    kernels::Combination cb{{pix(rng), pix(rng)}, {}};
    for (std::size_t t = 0; t < 9; ++t) cb.terms.push_back({{nd(rng), nd(rng)}, (static_cast<std::size_t>(j) + 5 * t) % waves});
    combos.push_back(cb);
  }
  std::vector<const PlacedField*> ptrs;
  for (const auto& s : sources) ptrs.push_back(&s);
  const Pixel window{n / 2, n / 2};
  {
    OpCounters c;
    const double tr = best_of(repeats, [&] { kernels::combine_batch_reference(ptrs, combos, g, window, c); });
    const double ts = best_of(repeats, [&] { kernels::combine_batch(ptrs, combos, g, window, c, kernels::Exec::serial); });
    const double tp = best_of(repeats, [&] { kernels::combine_batch(ptrs, combos, g, window, c, kernels::Exec::parallel); });
    row("combine_batch", ts, tp);
    std::printf("%-22s reference (embed, sum, crop) %9.4f s\n", "", tr);
  }

  {
    const std::vector<DetectorConfig> dets{DetectorConfig::annular("bf", 0, 15), DetectorConfig::annular("haadf", 41, 200),
                                           DetectorConfig::rings("rings", 9, 10)};
    const double ts = best_of(repeats, [&] { detect_all(sources, dets, p.lambda, nullptr, kernels::Exec::serial); });
    const double tp = best_of(repeats, [&] { detect_all(sources, dets, p.lambda, nullptr, kernels::Exec::parallel); });
    row("detect_all", ts, tp);
  }
  return 0;
}
