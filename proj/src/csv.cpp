#include "ptrobust/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ptrobust {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

std::string to_csv_string(const CsvTable& table) {
  std::string out;
  for (const auto& c : table.comments) out += "# " + c + "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i > 0) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::invalid_argument("csv row width does not match the header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += format_number(row[i]);
    }
    out += '\n';
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      table.comments.push_back(line.size() > 1 && line[1] == ' ' ? line.substr(2)
                                                                  : line.substr(1));
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw std::runtime_error("csv line " + std::to_string(number) +
                               ": wrong number of columns");
    }
    std::vector<double> values;
    values.reserve(cells.size());
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str() || *end != '\0') {
        throw std::runtime_error("csv line " + std::to_string(number) +
                                 ": malformed number '" + c + "'");
      }
      values.push_back(v);
    }
    table.rows.push_back(std::move(values));
  }
  if (!have_header) throw std::runtime_error("csv has no header row");
  return table;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_text(path, to_csv_string(table));
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

CsvTable trajectory_table(const Trajectory& traj, std::vector<std::string> comments) {
  CsvTable table;
  table.comments = std::move(comments);
  if (traj.samples.empty()) return table;
  const auto n = traj.samples.front().x.size();
  const auto m = traj.samples.front().eta.size();
  table.header.push_back("t");
  for (Eigen::Index i = 0; i < n; ++i) table.header.push_back("x" + std::to_string(i + 1));
  for (Eigen::Index i = 0; i < m; ++i) table.header.push_back("eta" + std::to_string(i + 1));
  table.header.push_back("gain_out");
  for (const auto& s : traj.samples) {
    std::vector<double> row;
    row.reserve(table.header.size());
    row.push_back(s.t);
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(s.x(i));
    for (Eigen::Index i = 0; i < m; ++i) row.push_back(s.eta(i));
    row.push_back(s.gain_output);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<std::string> echo_comments(
    const std::vector<std::pair<std::string, std::string>>& echo) {
  std::vector<std::string> out;
  for (const auto& [key, value] : echo) out.push_back("config " + key + " = " + value);
  return out;
}

std::string trajectory_svg(const Trajectory& traj, const std::string& title) {
  constexpr double kWidth = 640.0;
  constexpr double kHeight = 400.0;
  constexpr double kMargin = 50.0;
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : traj.samples) {
    const double tau = traj.T - s.t;
    const double norm = s.x.norm();
    if (tau > 0.0 && norm > 0.0) pts.emplace_back(std::log10(tau), std::log10(norm));
  }
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n",
                kWidth, kHeight);
  out += buf;
  out += "<title>" + title + "</title>\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (pts.size() >= 2) {
    double x0 = pts.front().first, x1 = x0, y0 = pts.front().second, y1 = y0;
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
    if (x1 - x0 < 1e-12) x1 = x0 + 1.0;
    if (y1 - y0 < 1e-12) y1 = y0 + 1.0;
    // Time-to-go decreases to the right.
    auto px = [&](double x) { return kMargin + (x1 - x) / (x1 - x0) * (kWidth - 2 * kMargin); };
    auto py = [&](double y) { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); };
    out += "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
    for (const auto& [x, y] : pts) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(x), py(y));
      out += buf;
    }
    out += "\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.0f\" y=\"%.0f\" font-size=\"12\">log10(T - t) from %.2f to %.2f</text>\n",
                  kMargin, kHeight - 15.0, x1, x0);
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.0f\" y=\"%.0f\" font-size=\"12\">log10 ||x|| from %.2f to %.2f</text>\n",
                  kMargin, 25.0, y0, y1);
    out += buf;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace ptrobust
