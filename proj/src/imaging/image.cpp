#include "ionfb/imaging/image.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ionfb/common/units.hpp"

namespace ionfb::imaging {

double IonImage::x(std::size_t c) const {
  return (static_cast<double>(c) - 0.5 * (static_cast<double>(cols) - 1.0)) * pixel_size;
}

double IonImage::y(std::size_t r) const {
  return (0.5 * (static_cast<double>(rows) - 1.0) - static_cast<double>(r)) * pixel_size;
}

double IonImage::total() const { return std::accumulate(pixels.begin(), pixels.end(), 0.0); }

void IonImage::validate() const {
  if (rows == 0 || cols == 0 || pixels.size() != rows * cols)
    throw std::invalid_argument("image: pixel count does not match rows x cols");
  if (!(pixel_size > 0.0)) throw std::invalid_argument("image: pixel_size must be > 0");
  for (double p : pixels)
    if (!std::isfinite(p) || p < 0.0)
      throw std::invalid_argument("image: intensities must be finite and >= 0");
}

void ImagingConfig::validate() const {
  if (rows < 8 || cols < 8) throw std::invalid_argument("imaging.rows/cols must be >= 8");
  if (!(pixel_size > 0.0)) throw std::invalid_argument("imaging.pixel_um must be > 0");
  if (!(psf_sigma > 0.0)) throw std::invalid_argument("imaging.psf_sigma_um must be > 0");
  if (!(photons > 0.0)) throw std::invalid_argument("imaging.photons must be > 0");
  if (!(background >= 0.0)) throw std::invalid_argument("imaging.background must be >= 0");
}

IonImage blank_image(const ImagingConfig& cfg) {
  IonImage img;
  img.rows = cfg.rows;
  img.cols = cfg.cols;
  img.pixel_size = cfg.pixel_size;
  img.pixels.assign(cfg.rows * cfg.cols, 0.0);
  return img;
}

IonImage synthesize_driven_image(double psf_sigma, double drive_amplitude, double drive_angle,
                                 double counts, Engine& rng, const ImagingConfig& cfg) {
  if (!(drive_amplitude >= 0.0))
    throw std::invalid_argument("synthesize_driven_image: amplitude must be >= 0");
  if (!(psf_sigma > 0.0)) throw std::invalid_argument("synthesize_driven_image: psf_sigma must be > 0");
  if (!(counts >= 0.0)) throw std::invalid_argument("synthesize_driven_image: counts must be >= 0");
  cfg.validate();

  IonImage img = blank_image(cfg);
  const double ux = std::cos(drive_angle), uy = std::sin(drive_angle);
  std::poisson_distribution<long> total(counts > 0.0 ? counts : 1.0);
  const long n = counts > 0.0 ? total(rng) : 0;
  std::normal_distribution<double> psf(0.0, psf_sigma);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  const double half_c = 0.5 * static_cast<double>(cfg.cols);
  const double half_r = 0.5 * static_cast<double>(cfg.rows);
  for (long i = 0; i < n; ++i) {
    const double s = drive_amplitude * std::sin(phase(rng));
    const double x = s * ux + psf(rng);
    const double y = s * uy + psf(rng);
    const double c = std::floor(x / cfg.pixel_size + half_c);
    const double r = std::floor(half_r - y / cfg.pixel_size);
    if (c < 0 || r < 0 || c >= static_cast<double>(cfg.cols) || r >= static_cast<double>(cfg.rows))
      continue;
    img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) += 1.0;
  }
  if (cfg.background > 0.0) {
    std::poisson_distribution<long> bg(cfg.background);
    for (double& p : img.pixels) p += static_cast<double>(bg(rng));
  }
  return img;
}

void write_image_csv(std::ostream& os, const IonImage& image) {
  fmt::print(os, "# rows={}\n# cols={}\n# pixel_size_m={:.10g}\n", image.rows, image.cols,
             image.pixel_size);
  for (std::size_t r = 0; r < image.rows; ++r) {
    for (std::size_t c = 0; c < image.cols; ++c)
      fmt::print(os, c + 1 < image.cols ? "{:.10g}," : "{:.10g}\n", image.at(r, c));
  }
}

void write_image_csv(const std::filesystem::path& path, const IonImage& image) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_image_csv(os, image);
}

IonImage read_image_csv(std::istream& is) {
  IonImage img;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string value = line.substr(eq + 1);
      if (key == "rows") img.rows = std::stoul(value);
      else if (key == "cols") img.cols = std::stoul(value);
      else if (key == "pixel_size_m") img.pixel_size = std::stod(value);
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) img.pixels.push_back(std::stod(cell));
  }
  img.validate();
  return img;
}

}  // namespace ionfb::imaging
