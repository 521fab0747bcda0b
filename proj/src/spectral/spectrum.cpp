#include "ionfb/spectral/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace ionfb::spectral {

std::size_t Spectrum::nearest_bin(double f) const {
  if (freqs.empty()) throw std::invalid_argument("empty spectrum");
  const double df = bin_spacing();
  if (df <= 0.0) return 0;
  const double k = std::round((f - freqs.front()) / df);
  return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(freqs.size() - 1)));
}

double Spectrum::integrate(double f_lo, double f_hi) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < freqs.size(); ++k)
    if (freqs[k] >= f_lo && freqs[k] <= f_hi) acc += values[k];
  return acc * bin_spacing();
}

void Spectrum::validate() const {
  if (freqs.size() != values.size()) throw std::invalid_argument("spectrum size mismatch");
  if (!(rbw > 0.0)) throw std::invalid_argument("spectrum rbw must be > 0");
  for (std::size_t k = 1; k < freqs.size(); ++k)
    if (!(freqs[k] > freqs[k - 1])) throw std::invalid_argument("spectrum freqs not increasing");
  for (double v : values)
    if (!(v >= 0.0)) throw std::invalid_argument("spectrum values must be >= 0");
}

void write_spectrum_csv(std::ostream& os, const Spectrum& s) {
  fmt::print(os, "# rbw_hz={:.10g}\n# calibrated={}\n# scale={:.10g}\n", s.rbw,
             s.calibrated ? 1 : 0, s.scale);
  fmt::print(os, "freq_hz,psd_value\n");
  for (std::size_t k = 0; k < s.freqs.size(); ++k)
    fmt::print(os, "{:.10g},{:.10g}\n", s.freqs[k], s.values[k]);
}

void write_spectrum_csv(const std::string& path, const Spectrum& s) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_spectrum_csv(os, s);
}

Spectrum read_spectrum_csv(std::istream& is) {
  Spectrum s;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const double value = std::stod(line.substr(eq + 1));
      if (key == "rbw_hz") s.rbw = value;
      else if (key == "calibrated") s.calibrated = value != 0.0;
      else if (key == "scale") s.scale = value;
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("freq_hz", 0) == 0) continue;
    }
    std::istringstream ls(line);
    std::string a, b;
    std::getline(ls, a, ',');
    std::getline(ls, b);
    s.freqs.push_back(std::stod(a));
    s.values.push_back(std::stod(b));
  }
  return s;
}

}  // namespace ionfb::spectral
