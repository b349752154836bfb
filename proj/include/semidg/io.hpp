#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "semidg/kinetic.hpp"

namespace semidg {

/// Shortest round-trip decimal formatting; deterministic for identical doubles.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
}

/// Comma-separated table with a header row, '.' decimals, LF line endings.
inline void write_csv(const std::string& path, const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "'");
  for (size_t i = 0; i < columns.size(); ++i)
    out << columns[i] << (i + 1 < columns.size() ? "," : "");
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw std::runtime_error("write_csv: row width mismatch in '" + path + "'");
    for (size_t i = 0; i < row.size(); ++i)
      out << format_double(row[i]) << (i + 1 < row.size() ? "," : "");
    out << "\n";
  }
  if (!out.good()) throw std::runtime_error("write_csv: write failed for '" + path + "'");
}

/// Self-contained log-log scatter plot with the fitted line; the fitted slope
/// is embedded in the title text.
inline void write_svg_loglog(const std::string& path, const std::string& title,
                             const std::vector<double>& xs, const std::vector<double>& ys,
                             double slope, double intercept) {
  if (xs.size() != ys.size() || xs.empty())
    throw std::invalid_argument("write_svg_loglog: mismatched or empty series");
  ensure_parent_dir(path);
  const double W = 640, H = 480, ml = 70, mr = 20, mt = 50, mb = 50;
  double lx0 = 1e300, lx1 = -1e300, ly0 = 1e300, ly1 = -1e300;
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("write_svg_loglog: series must be positive");
    lx[i] = std::log10(xs[i]);
    ly[i] = std::log10(ys[i]);
    lx0 = std::min(lx0, lx[i]);
    lx1 = std::max(lx1, lx[i]);
    ly0 = std::min(ly0, ly[i]);
    ly1 = std::max(ly1, ly[i]);
  }
  if (lx1 - lx0 < 1e-12) lx1 = lx0 + 1.0;
  if (ly1 - ly0 < 1e-12) ly1 = ly0 + 1.0;
  const double padx = 0.05 * (lx1 - lx0), pady = 0.1 * (ly1 - ly0);
  lx0 -= padx; lx1 += padx; ly0 -= pady; ly1 += pady;
  auto X = [&](double v) { return ml + (v - lx0) / (lx1 - lx0) * (W - ml - mr); };
  auto Y = [&](double v) { return H - mb - (v - ly0) / (ly1 - ly0) * (H - mt - mb); };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_svg_loglog: cannot open '" + path + "'");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
      << H - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << H - mb << "\" stroke=\"black\"/>\n";
  // fitted line in log-log coordinates: log10 y = slope * log10 x + intercept
  const double fy0 = slope * lx0 + intercept, fy1 = slope * lx1 + intercept;
  out << "<line x1=\"" << X(lx0) << "\" y1=\"" << Y(fy0) << "\" x2=\"" << X(lx1)
      << "\" y2=\"" << Y(fy1) << "\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
  for (size_t i = 0; i < lx.size(); ++i)
    out << "<circle cx=\"" << X(lx[i]) << "\" cy=\"" << Y(ly[i])
        << "\" r=\"4\" fill=\"#d62728\"/>\n";
  for (size_t i = 0; i < lx.size(); ++i)
    out << "<text x=\"" << X(lx[i]) << "\" y=\"" << H - mb + 16
        << "\" text-anchor=\"middle\" font-size=\"10\">" << format_double(xs[i])
        << "</text>\n";
  out << "</svg>\n";
}

/// Kinetic state checkpoint: one header line with the discretization metadata,
/// then one coefficient per line in the documented dof order (x-cell major,
/// then v-cell, then tensor nodal index).
inline void save_state(const std::string& path, const KineticState& s,
                       const PhaseSpace& ps) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_state: cannot open '" + path + "'");
  out << "nx,kx,nv,kv,eps,beta,t\n";
  out << ps.Vx.mesh().n_cells() << "," << ps.Vx.degree() << "," << ps.Vv.mesh().n_cells()
      << "," << ps.Vv.degree() << "," << format_double(s.eps) << "," << s.beta << ","
      << format_double(s.t) << "\n";
  for (int i = 0; i < s.g.size(); ++i) out << format_double(s.g[i]) << "\n";
}

inline KineticState load_state(const std::string& path, const PhaseSpace& ps) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_state: cannot open '" + path + "'");
  std::string header, meta;
  std::getline(in, header);
  std::getline(in, meta);
  std::stringstream ss(meta);
  std::string tok;
  std::vector<std::string> parts;
  while (std::getline(ss, tok, ',')) parts.push_back(tok);
  if (parts.size() != 7) throw std::runtime_error("load_state: malformed header");
  if (std::stoi(parts[0]) != ps.Vx.mesh().n_cells() || std::stoi(parts[1]) != ps.Vx.degree() ||
      std::stoi(parts[2]) != ps.Vv.mesh().n_cells() || std::stoi(parts[3]) != ps.Vv.degree())
    throw std::runtime_error("load_state: discretization mismatch");
  KineticState s;
  s.eps = std::stod(parts[4]);
  s.beta = std::stoi(parts[5]);
  s.t = std::stod(parts[6]);
  s.g.resize(ps.dim());
  for (int i = 0; i < s.g.size(); ++i) {
    std::string line;
    if (!std::getline(in, line))
      throw std::runtime_error("load_state: truncated coefficient block");
    s.g[i] = std::stod(line);
  }
  return s;
}

}  // namespace semidg
