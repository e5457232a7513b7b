#include "lexpsy/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lexpsy/text.hpp"

namespace lexpsy::report {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string svg_open(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
         "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text_at(double x, double y, const std::string& s, const char* anchor = "middle",
                    const char* extra = "") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\"" + extra + ">" +
         xml_escape(s) + "</text>\n";
}

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string matrix_csv(const std::string& corner, const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels, const Eigen::MatrixXd& m) {
  std::string out;
  text::CsvRow header{corner};
  header.insert(header.end(), col_labels.begin(), col_labels.end());
  out += text::csv_line(header);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    text::CsvRow row{row_labels[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(std::isnan(m(i, j)) ? "" : text::format_double(m(i, j)));
    out += text::csv_line(row);
  }
  return out;
}

std::string scree_svg(const std::string& title, const Eigen::VectorXd& eigenvalues, int max_points) {
  const int w = 640, h = 400, left = 60, right = 20, top = 40, bottom = 50;
  const int n = std::min<int>(max_points, static_cast<int>(eigenvalues.size()));
  double ymax = n > 0 ? eigenvalues.head(n).maxCoeff() : 1.0;
  if (!(ymax > 0)) ymax = 1.0;
  auto px = [&](int i) { return left + (w - left - right) * (n > 1 ? double(i) / (n - 1) : 0.5); };
  auto py = [&](double v) { return top + (h - top - bottom) * (1.0 - v / ymax); };

  std::string s = svg_open(w, h);
  s += text_at(w / 2.0, 22, title, "middle", " font-size=\"14\"");
  s += "<line x1=\"" + num(left) + "\" y1=\"" + num(h - bottom) + "\" x2=\"" + num(w - right) + "\" y2=\"" +
       num(h - bottom) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" + num(h - bottom) +
       "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    double v = ymax * t / 4.0;
    s += text_at(left - 6, py(v) + 4, num(v), "end");
  }
  s += text_at(w / 2.0, h - 12, "Component", "middle");
  s += text_at(16, h / 2.0, "Eigenvalue", "middle", " transform=\"rotate(-90 16 200)\"");
  std::string path;
  for (int i = 0; i < n; ++i) {
    path += (i ? " L" : "M") + num(px(i)) + " " + num(py(eigenvalues[i]));
    s += "<circle cx=\"" + num(px(i)) + "\" cy=\"" + num(py(eigenvalues[i])) + "\" r=\"3\" fill=\"#1f77b4\"/>\n";
    if (i % 5 == 0 || i == n - 1) s += text_at(px(i), h - bottom + 16, std::to_string(i + 1));
  }
  if (n > 0) s += "<path d=\"" + path + "\" fill=\"none\" stroke=\"#1f77b4\"/>\n";
  s += "</svg>\n";
  return s;
}

std::string heatmap_svg(const std::string& title, const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels, const Eigen::MatrixXd& m) {
  const int cell = 36, left = 140, top = 110;
  const int w = left + cell * static_cast<int>(m.cols()) + 20;
  const int h = top + cell * static_cast<int>(m.rows()) + 20;
  bool non_negative = m.size() == 0 || (m.array().isNaN() || m.array() >= 0).all();

  std::string s = svg_open(w, h);
  s += text_at(w / 2.0, 20, title, "middle", " font-size=\"14\"");
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    double x = left + cell * (j + 0.5);
    s += text_at(x, top - 8, col_labels[static_cast<std::size_t>(j)], "start",
                 (" transform=\"rotate(-60 " + num(x) + " " + num(top - 8) + ")\"").c_str());
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double y = top + cell * i;
    s += text_at(left - 6, y + cell / 2.0 + 4, row_labels[static_cast<std::size_t>(i)], "end");
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      std::string fill = "#dddddd";
      if (!std::isnan(v)) {
        double t = std::clamp(v, -1.0, 1.0);
        int r, g, b;
        if (non_negative || t >= 0) {
          r = static_cast<int>(255 * (1 - t) + 178 * t);
          g = static_cast<int>(255 * (1 - t) + 24 * t);
          b = static_cast<int>(255 * (1 - t) + 43 * t);
        } else {
          double a = -t;
          r = static_cast<int>(255 * (1 - a) + 33 * a);
          g = static_cast<int>(255 * (1 - a) + 102 * a);
          b = static_cast<int>(255 * (1 - a) + 172 * a);
        }
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
        fill = buf;
      }
      double x = left + cell * j;
      s += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + std::to_string(cell) + "\" height=\"" +
           std::to_string(cell) + "\" fill=\"" + fill + "\" stroke=\"white\"/>\n";
      if (!std::isnan(v)) s += text_at(x + cell / 2.0, y + cell / 2.0 + 4, num(v), "middle", " font-size=\"9\"");
    }
  }
  s += "</svg>\n";
  return s;
}

std::string scatter_svg(const std::string& title, const std::vector<std::pair<double, double>>& points,
                        const std::string& x_label, const std::string& y_label) {
  const int w = 640, h = 400, left = 60, right = 20, top = 40, bottom = 50;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!points.empty()) {
    xmin = xmax = points.front().first;
    ymin = ymax = points.front().second;
    for (auto [x, y] : points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) { return left + (w - left - right) * (x - xmin) / (xmax - xmin); };
  auto py = [&](double y) { return top + (h - top - bottom) * (1.0 - (y - ymin) / (ymax - ymin)); };

  std::string s = svg_open(w, h);
  s += text_at(w / 2.0, 22, title, "middle", " font-size=\"14\"");
  s += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(w - left - right) + "\" height=\"" +
       num(h - top - bottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += text_at(left, h - bottom + 16, num(xmin), "start");
  s += text_at(w - right, h - bottom + 16, num(xmax), "end");
  s += text_at(left - 6, h - bottom, num(ymin), "end");
  s += text_at(left - 6, top + 8, num(ymax), "end");
  s += text_at(w / 2.0, h - 12, x_label);
  s += text_at(16, h / 2.0, y_label, "middle", " transform=\"rotate(-90 16 200)\"");
  for (auto [x, y] : points)
    s += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"2.5\" fill=\"#1f77b4\" fill-opacity=\"0.7\"/>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace lexpsy::report
