#ifndef PTROBUST_CSV_HPP_
#define PTROBUST_CSV_HPP_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ptrobust/integrate.hpp"

namespace ptrobust {

/// 17 significant digits in decimal-exponent form; strtod restores the value
/// bit for bit.
std::string format_number(double v);

struct CsvTable {
  std::vector<std::string> comments;  ///< without the leading '#'
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);
std::string to_csv_string(const CsvTable& table);
CsvTable parse_csv(const std::string& text);

/// Columns t, x1..xn, eta1..etam, gain_out from the trajectory samples.
CsvTable trajectory_table(const Trajectory& traj,
                          std::vector<std::string> comments = {});

/// Comment rows echoing configuration pairs.
std::vector<std::string> echo_comments(
    const std::vector<std::pair<std::string, std::string>>& echo);

/// Line chart of ||x|| against T - t, both on log scales.
std::string trajectory_svg(const Trajectory& traj, const std::string& title);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ptrobust

#endif  // PTROBUST_CSV_HPP_
