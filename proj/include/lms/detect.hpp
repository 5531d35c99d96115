#pragma once

#include <string>
#include <vector>

#include "lms/grid.hpp"
#include "lms/kernels.hpp"

namespace lms {

enum class DetectorMode { annular, rings, pixelated };

/// Angles in mrad; frequency radius k = theta / lambda.
struct DetectorConfig {
  std::string name;
  DetectorMode mode = DetectorMode::annular;
  double r1 = 0.0;  ///< annular: inner and outer angle
  double r2 = 0.0;
  int A = 0;        ///< rings: A+1 bins of width r; pixelated: half extents A, B
  int B = 0;
  double r = 0.0;
  double dx = 0.0;  ///< pixelated: sample spacing
  double dy = 0.0;

  static DetectorConfig annular(std::string name, double r1, double r2);
  static DetectorConfig rings(std::string name, int A, double r);
  static DetectorConfig pixelated(std::string name, int A, int B, double dx, double dy);
  /// "2d R1 R2", "3d A R" or "4d A B DX DY".
  static DetectorConfig parse(std::string name, const std::string& spec);

  void validate() const;
  std::size_t channels() const;
};

struct DetectorReading {
  std::vector<double> values;
  bool partial = false;  ///< some frequency range reaches beyond the grid's inscribed Nyquist circle
};

/// annular: sum of |DFT|^2 * qx * qy over pixels with r1/lambda <= |k| < r2/lambda.
/// rings: bin a covers [a r, (a+1) r), a = 0..A. pixelated: |DFT|^2 at the Fourier pixel nearest
/// (a dx, b dy)/lambda for a = -A..A, b = -B..B (row-major in b, zero outside the grid).
/// The sum over all pixels is ||exit||^2 * nx * ny * qx * qy by Parseval.
DetectorReading detect(const ComplexField& exit, const DetectorConfig& cfg, double lambda);

/// Readings of every detector for every exit wave, concatenated per wave.
std::vector<std::vector<double>> detect_all(const std::vector<PlacedField>& exits,
                                            const std::vector<DetectorConfig>& detectors, double lambda,
                                            bool* any_partial = nullptr,
                                            kernels::Exec exec = kernels::Exec::parallel);

/// P_x x P_y image with `channels` values per pixel, (y * P_x + x) * channels + c.
struct STEMImage {
  int px = 0;
  int py = 0;
  int channels = 1;
  std::vector<double> values;
  std::vector<unsigned char> computed;  ///< per pixel

  double at(int x, int y, int c = 0) const {
    return values[(static_cast<std::size_t>(y) * px + x) * channels + c];
  }
  std::vector<double> channel(int c) const;
};

/// Places each probe's output at its lattice index. With `prior`, unlisted pixels keep the prior
/// values; otherwise they are zero and marked not computed. Throws InvalidArgument on count mismatch.
STEMImage assemble_image(const std::vector<Pixel>& probes, const std::vector<std::vector<double>>& outputs, int px,
                         int py, int channels, const STEMImage* prior = nullptr);

/// Relative euclidean error of one channel.
double image_rel_error(const STEMImage& a, const STEMImage& reference, int channel);

/// "LMAIMG Px Py C\n" + little-endian float64 values.
void save_image(const std::string& path, const STEMImage& img);
STEMImage load_image(const std::string& path);

/// 16-bit PGM of one channel, min-max scaled.
void save_image_pgm(const std::string& path, const STEMImage& img, int channel);

}  // namespace lms
