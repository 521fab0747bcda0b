#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ionfb/common/rng.hpp"

namespace ionfb::imaging {

/// Camera frame referred to the object plane. Pixel (r, c) is centred at
///   x = (c - (cols - 1)/2) * pixel_size,  y = ((rows - 1)/2 - r) * pixel_size,
/// so row 0 is the top of the image and y points up.
struct IonImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double pixel_size = 0.0;      // m
  std::vector<double> pixels;   // ADU, row-major

  double& at(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
  double x(std::size_t c) const;
  double y(std::size_t r) const;
  double total() const;

  /// Throws std::invalid_argument on a bad shape, negative or non-finite pixels.
  void validate() const;
};

struct ImagingConfig {
  std::size_t rows = 64;
  std::size_t cols = 64;
  double pixel_size = 0.2e-6;  // m
  double psf_sigma = 0.6e-6;   // m
  double photons = 1e5;        // mean detected photons per exposure
  double background = 1.0;     // mean counts per pixel

  void validate() const;
};

IonImage blank_image(const ImagingConfig& cfg);

/// Long exposure of an ion driven along `drive_angle` (rad, from the image
/// x-axis): each photon lands at the PSF-blurred position A sin(phi) along the
/// drive direction with uniform phi, plus a Poisson background.
IonImage synthesize_driven_image(double psf_sigma, double drive_amplitude, double drive_angle,
                                 double counts, Engine& rng, const ImagingConfig& cfg = {});

void write_image_csv(std::ostream& os, const IonImage& image);
void write_image_csv(const std::filesystem::path& path, const IonImage& image);
IonImage read_image_csv(std::istream& is);

}  // namespace ionfb::imaging
