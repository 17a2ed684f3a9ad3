#include "capcal/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace capcal::io {

namespace {

constexpr double pf = 1e-12;
constexpr double nm = 1e-9;
constexpr double mv = 1e-3;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  return cells;
}

double parse_cell(const std::string& cell, size_t row, size_t col,
                  const std::string& name) {
  if (cell.empty()) {
    throw ParseError("row " + std::to_string(row) + ", column '" + name +
                     "' (index " + std::to_string(col) + "): empty cell");
  }
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE ||
      !std::isfinite(value)) {
    throw ParseError("row " + std::to_string(row) + ", column '" + name +
                     "': non-finite or non-numeric value '" + cell + "'");
  }
  return value;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // row numbers start at 2
};

CsvTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open '" + path.string() + "'");
  }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw ParseError("'" + path.string() + "': empty file or missing header");
  }
  table.header = split_csv(line);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    table.rows.push_back(split_csv(line));
  }
  if (table.rows.empty()) {
    throw ParseError("'" + path.string() + "': no data rows");
  }
  return table;
}

size_t column_index(const CsvTable& table, const std::string& name,
                    bool required) {
  for (size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == name) return i;
  }
  if (required) throw ParseError("missing required column '" + name + "'");
  return static_cast<size_t>(-1);
}

double cell_at(const CsvTable& table, size_t irow, size_t col,
               const std::string& name) {
  const auto& row = table.rows[irow];
  if (col >= row.size()) {
    throw ParseError("row " + std::to_string(irow + 2) + ": missing column '" +
                     name + "'");
  }
  return parse_cell(row[col], irow + 2, col, name);
}

// Display value that converts back to exactly `si` when multiplied by
// `scale`; the naive quotient can be a few ulps off, so search nearby.
// Values ingested from a CSV always have an exact preimage; synthesized
// SI values almost always do, and the nearest quotient otherwise.
double exact_display(double si, double scale) {
  double q = si / scale;
  if (q * scale == si) return q;
  double up = q, down = q;
  for (int i = 0; i < 4; ++i) {
    up = std::nextafter(up, 1e308);
    if (up * scale == si) return up;
    down = std::nextafter(down, -1e308);
    if (down * scale == si) return down;
  }
  return q;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

calibration::CapacitanceSeries read_capacitance_csv(
    const std::filesystem::path& path) {
  const auto table = read_table(path);
  const size_t cv = column_index(table, "v_pzt_V", true);
  const size_t cc = column_index(table, "capacitance_pF", true);
  const size_t cs = column_index(table, "sigma_pF", false);
  calibration::CapacitanceSeries series;
  series.has_sigma = cs != static_cast<size_t>(-1);
  series.points.reserve(table.rows.size());
  for (size_t i = 0; i < table.rows.size(); ++i) {
    calibration::CapacitanceSeries::Point p;
    p.v_pzt = cell_at(table, i, cv, "v_pzt_V");
    p.capacitance = cell_at(table, i, cc, "capacitance_pF") * pf;
    p.sigma = 0.0;
    if (series.has_sigma) {
      p.sigma = cell_at(table, i, cs, "sigma_pF") * pf;
      if (!(p.sigma > 0.0)) {
        throw ParseError("row " + std::to_string(i + 2) +
                         ": sigma_pF must be > 0");
      }
    }
    series.points.push_back(p);
  }
  return series;
}

vzero::VZeroSeries read_vzero_csv(const std::filesystem::path& path) {
  const auto table = read_table(path);
  const size_t cd = column_index(table, "distance_nm", true);
  const size_t cv = column_index(table, "v0_mV", true);
  const size_t cs = column_index(table, "sigma_mV", true);
  vzero::VZeroSeries series;
  series.points.reserve(table.rows.size());
  for (size_t i = 0; i < table.rows.size(); ++i) {
    vzero::VZeroSeries::Point p;
    p.distance = cell_at(table, i, cd, "distance_nm") * nm;
    p.v0 = cell_at(table, i, cv, "v0_mV") * mv;
    p.sigma = cell_at(table, i, cs, "sigma_mV") * mv;
    if (!(p.sigma > 0.0)) {
      throw ParseError("row " + std::to_string(i + 2) +
                       ": sigma_mV must be > 0");
    }
    series.points.push_back(p);
  }
  return series;
}

void write_capacitance_csv(const std::filesystem::path& path,
                           const calibration::CapacitanceSeries& series) {
  std::ostringstream os;
  os << (series.has_sigma ? "v_pzt_V,capacitance_pF,sigma_pF\n"
                          : "v_pzt_V,capacitance_pF\n");
  for (const auto& p : series.points) {
    os << fmt(p.v_pzt) << ',' << fmt(exact_display(p.capacitance, pf));
    if (series.has_sigma) os << ',' << fmt(exact_display(p.sigma, pf));
    os << '\n';
  }
  atomic_write(path, os.str());
}

void write_vzero_csv(const std::filesystem::path& path,
                     const vzero::VZeroSeries& series) {
  std::ostringstream os;
  os << "distance_nm,v0_mV,sigma_mV\n";
  for (const auto& p : series.points) {
    os << fmt(exact_display(p.distance, nm)) << ','
       << fmt(exact_display(p.v0, mv)) << ','
       << fmt(exact_display(p.sigma, mv)) << '\n';
  }
  atomic_write(path, os.str());
}

void atomic_write(const std::filesystem::path& path,
                  const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace capcal::io
