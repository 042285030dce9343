#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gfcond {

// Doubles are written with 17 significant digits so values round-trip.
std::string format_double(double v);

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

// One path per row; header row holds the grid points.
void write_paths_csv(const std::string& path, const std::vector<double>& grid_points,
                     const Eigen::MatrixXd& paths);

// Column layout: t, value.
void write_series_csv(const std::string& path, const std::vector<double>& grid_points,
                      const Eigen::VectorXd& values);

// Column layout: t, mean, lower, upper (mean -/+ 2 sqrt diag).
void write_envelope_csv(const std::string& path, const std::vector<double>& grid_points,
                        const Eigen::VectorXd& mean, const Eigen::VectorXd& variance_diag);

}  // namespace gfcond
