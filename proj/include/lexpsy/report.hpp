#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

// Plain CSV tables and minimal hand-written SVG charts for analysis bundles.
namespace lexpsy::report {

std::string matrix_csv(const std::string& corner, const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels, const Eigen::MatrixXd& m);

/// Descending eigenvalues against component number.
std::string scree_svg(const std::string& title, const Eigen::VectorXd& eigenvalues, int max_points = 40);

/// Diverging blue/red heatmap over [-1, 1] (or [0, 1] when every value is non-negative).
std::string heatmap_svg(const std::string& title, const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels, const Eigen::MatrixXd& m);

std::string scatter_svg(const std::string& title, const std::vector<std::pair<double, double>>& points,
                        const std::string& x_label, const std::string& y_label);

std::string xml_escape(const std::string& s);

}  // namespace lexpsy::report
