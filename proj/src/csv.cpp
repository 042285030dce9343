#include "gfcond/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gfcond/errors.hpp"

namespace gfcond {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("io-error", "cannot open '" + path + "' for writing");
  return out;
}

std::vector<double> parse_row(const std::string& line, const std::string& path, int lineno) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t pos = 0;
      row.push_back(std::stod(cell, &pos));
    } catch (const std::exception&) {
      fail("csv-parse", path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
    }
  }
  return row;
}

}  // namespace

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io-error", "cannot open '" + path + "' for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    rows.push_back(parse_row(line, path, lineno));
    if (rows.back().size() != rows.front().size()) {
      fail("csv-parse", path + ":" + std::to_string(lineno) + ": ragged row");
    }
  }
  if (rows.empty()) fail("csv-parse", path + ": empty file");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_paths_csv(const std::string& path, const std::vector<double>& grid_points,
                     const Eigen::MatrixXd& paths) {
  std::ofstream out = open_out(path);
  for (std::size_t j = 0; j < grid_points.size(); ++j) {
    if (j) out << ',';
    out << format_double(grid_points[j]);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < paths.rows(); ++i) {
    for (Eigen::Index j = 0; j < paths.cols(); ++j) {
      if (j) out << ',';
      out << format_double(paths(i, j));
    }
    out << '\n';
  }
}

void write_series_csv(const std::string& path, const std::vector<double>& grid_points,
                      const Eigen::VectorXd& values) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out << format_double(grid_points[i]) << ',' << format_double(values[i]) << '\n';
  }
}

void write_envelope_csv(const std::string& path, const std::vector<double>& grid_points,
                        const Eigen::VectorXd& mean, const Eigen::VectorXd& variance_diag) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double half_width = 2.0 * std::sqrt(std::max(0.0, variance_diag[i]));
    out << format_double(grid_points[i]) << ',' << format_double(mean[i]) << ','
        << format_double(mean[i] - half_width) << ',' << format_double(mean[i] + half_width)
        << '\n';
  }
}

}  // namespace gfcond
