#pragma once

// File formats: binary field dumps, PGM previews and CSV traces/spectra.
// Every writer accepts comment lines that are emitted as "# ..." headers.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oamsort/constants.hpp"
#include "oamsort/grid.hpp"
#include "oamsort/spectrum.hpp"
#include "oamsort/trace.hpp"

namespace oamsort::io {

using Comments = std::vector<std::string>;

namespace detail {

inline std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.precision(17);
  return out;
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error("cannot open " + path + " for reading");
  return in;
}

inline void put_le32(std::ostream& out, float v) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  char bytes[4];
  std::memcpy(bytes, &bits, 4);
  out.write(bytes, 4);
}

inline float get_le32(std::istream& in) {
  char bytes[4];
  if (!in.read(bytes, 4)) throw Error("field dump is truncated");
  std::uint32_t bits;
  std::memcpy(&bits, bytes, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  return std::bit_cast<float>(bits);
}

inline void write_comments(std::ostream& out, const Comments& comments) {
  for (const auto& c : comments) out << "# " << c << "\n";
}

/// Non-comment, non-empty lines of a text file.
inline std::vector<std::string> data_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

inline std::pair<double, double> parse_pair(const std::string& line, const std::string& path) {
  const auto comma = line.find(',');
  if (comma == std::string::npos) throw Error(path + ": expected two comma-separated values in '" + line + "'");
  try {
    std::size_t used = 0;
    const double a = std::stod(line.substr(0, comma), &used);
    const double b = std::stod(line.substr(comma + 1), &used);
    return {a, b};
  } catch (const std::exception&) {
    throw Error(path + ": cannot parse '" + line + "'");
  }
}

}  // namespace detail

/// Header "OAMFIELD1 nx ny dx dy wavelength", optionally followed by
/// "# <comment>" on the same line, then row-major float32 (re, im) pairs.
inline void write_field(const std::string& path, const ComplexField& field, const std::string& comment = {}) {
  const GridSpec& g = field.grid();
  auto out = detail::open_out(path, true);
  std::ostringstream header;
  header.precision(17);
  header << "OAMFIELD1 " << g.nx() << " " << g.ny() << " " << g.dx() << " " << g.dy() << " " << g.wavelength();
  if (!comment.empty()) header << " # " << comment;
  header << "\n";
  out << header.str();
  for (const auto& s : field.samples()) {
    detail::put_le32(out, static_cast<float>(s.real()));
    detail::put_le32(out, static_cast<float>(s.imag()));
  }
  if (!out) throw Error("failed writing " + path);
}

inline ComplexField read_field(const std::string& path) {
  auto in = detail::open_in(path, true);
  std::string header;
  if (!std::getline(in, header)) throw Error(path + ": missing field header");
  const auto hash = header.find('#');
  std::istringstream hs(header.substr(0, hash));
  std::string magic;
  int nx = 0, ny = 0;
  double dx = 0, dy = 0, wavelength = 0;
  if (!(hs >> magic >> nx >> ny >> dx >> dy >> wavelength) || magic != "OAMFIELD1") {
    throw Error(path + ": not an OAMFIELD1 dump");
  }
  GridSpec grid(nx, ny, dx, dy, wavelength);
  std::vector<Complex> samples(grid.size());
  for (auto& s : samples) {
    const float re = detail::get_le32(in);
    const float im = detail::get_le32(in);
    s = Complex(re, im);
  }
  return ComplexField(grid, std::move(samples));
}

/// 16-bit PGM scaled linearly to the image maximum. Rows are written top to
/// bottom, so the highest y comes first and the picture shows y pointing up.
inline void write_pgm16(const std::string& path, const RealImage& img, const Comments& comments = {}) {
  auto out = detail::open_out(path, true);
  out << "P5\n";
  detail::write_comments(out, comments);
  out << img.nx << " " << img.ny << "\n65535\n";
  const double top = img.max();
  const double scale = top > 0.0 ? 65535.0 / top : 0.0;
  for (int iy = img.ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < img.nx; ++ix) {
      const auto v = static_cast<std::uint16_t>(std::lround(std::clamp(img.at(ix, iy) * scale, 0.0, 65535.0)));
      const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
      out.write(bytes, 2);
    }
  }
  if (!out) throw Error("failed writing " + path);
}

/// 8-bit PGM of a phase map: 0 -> 0 rad, 255 -> 2 pi (phases wrapped).
inline void write_phase_pgm8(const std::string& path, const RealImage& phase, const Comments& comments = {}) {
  auto out = detail::open_out(path, true);
  out << "P5\n";
  detail::write_comments(out, comments);
  out << phase.nx << " " << phase.ny << "\n255\n";
  for (int iy = phase.ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < phase.nx; ++ix) {
      double p = std::fmod(phase.at(ix, iy), constants::two_pi);
      if (p < 0.0) p += constants::two_pi;
      const auto v = static_cast<unsigned char>(std::lround(p / constants::two_pi * 255.0));
      out.put(static_cast<char>(v));
    }
  }
  if (!out) throw Error("failed writing " + path);
}

inline void write_trace_csv(const std::string& path, const DetectorTrace& trace, const Comments& comments = {}) {
  trace.validate();
  auto out = detail::open_out(path);
  detail::write_comments(out, comments);
  out << "position,counts\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << trace.positions[i] << "," << trace.counts[i] << "\n";
  if (!out) throw Error("failed writing " + path);
}

inline DetectorTrace read_trace_csv(const std::string& path) {
  auto in = detail::open_in(path);
  auto lines = detail::data_lines(in);
  if (lines.empty() || lines.front() != "position,counts") throw Error(path + ": expected a 'position,counts' header");
  DetectorTrace t;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [p, c] = detail::parse_pair(lines[i], path);
    t.positions.push_back(p);
    t.counts.push_back(c);
  }
  t.validate();
  return t;
}

inline void write_spectrum_csv(const std::string& path, const OamSpectrum& s, const Comments& comments = {}) {
  auto out = detail::open_out(path);
  detail::write_comments(out, comments);
  out << "ell,weight\n";
  for (int ell = s.ell_min(); ell <= s.ell_max(); ++ell) out << ell << "," << s[ell] << "\n";
  if (!out) throw Error("failed writing " + path);
}

inline OamSpectrum read_spectrum_csv(const std::string& path) {
  auto in = detail::open_in(path);
  auto lines = detail::data_lines(in);
  if (lines.empty() || lines.front() != "ell,weight") throw Error(path + ": expected an 'ell,weight' header");
  std::vector<double> w;
  int first = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [e, v] = detail::parse_pair(lines[i], path);
    const int ell = static_cast<int>(std::lround(e));
    if (i == 1) first = ell;
    if (ell != first + static_cast<int>(i) - 1) throw Error(path + ": ell values must be consecutive");
    w.push_back(v);
  }
  return OamSpectrum(first, std::move(w));
}

/// Any other table: a header row and rows of values.
inline void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                            const std::vector<std::vector<std::string>>& rows, const Comments& comments = {}) {
  auto out = detail::open_out(path);
  detail::write_comments(out, comments);
  auto put = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << "\n";
  };
  put(header);
  for (const auto& r : rows) put(r);
  if (!out) throw Error("failed writing " + path);
}

}  // namespace oamsort::io
