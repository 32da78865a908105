#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "ptrobust/attack.hpp"
#include "ptrobust/csv.hpp"

using namespace ptrobust;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

TEST(FormatNumber, SeventeenSignificantDigits) {
  EXPECT_EQ(format_number(1.0), "1.0000000000000000e+00");
  EXPECT_EQ(format_number(-0.1), "-1.0000000000000001e-01");
}

TEST(FormatNumber, RoundTripsBitExactly) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> exp(-300, 300);
  for (int i = 0; i < 20000; ++i) {
    const double v = std::ldexp(mant(rng), exp(rng));
    EXPECT_TRUE(same_bits(std::strtod(format_number(v).c_str(), nullptr), v)) << v;
  }
  for (double v : {0.0, -0.0, std::numeric_limits<double>::denorm_min(),
                   std::numeric_limits<double>::max(), 1.0 - 1e-16}) {
    EXPECT_TRUE(same_bits(std::strtod(format_number(v).c_str(), nullptr), v));
  }
}

TEST(Csv, TableRoundTrip) {
  CsvTable t;
  t.comments = {"config a = 1", "schedule t_k = 0"};
  t.header = {"t", "x1"};
  t.rows = {{0.1, 1.0 / 3.0}, {0.2, -2e-300}};
  const CsvTable back = parse_csv(to_csv_string(t));
  EXPECT_EQ(back.comments, t.comments);
  EXPECT_EQ(back.header, t.header);
  ASSERT_EQ(back.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_TRUE(same_bits(back.rows[i][j], t.rows[i][j]));
  }
}

TEST(Csv, RejectsMalformedInput) {
  EXPECT_THROW(parse_csv("# only comments\n"), std::runtime_error);
  EXPECT_THROW(parse_csv("a,b\n1,2,3\n"), std::runtime_error);
  EXPECT_THROW(parse_csv("a\nxyz\n"), std::runtime_error);
  CsvTable bad;
  bad.header = {"a"};
  bad.rows = {{1.0, 2.0}};
  EXPECT_THROW(to_csv_string(bad), std::invalid_argument);
}

TEST(Csv, TrajectoryColumnsAndNoiseBound) {
  const auto m = SystemModel::diff_error(InjectionSpec::holloway(1, 1, 1));
  DifferentiatorTerminalErrorNoise noise(0.1, 1.0, 1.0);
  const Trajectory traj = integrate(m, noise, Vector::Zero(2), 0.0, 1.0 - 1e-6, {});
  const CsvTable t = parse_csv(to_csv_string(trajectory_table(traj, {"noise_bound = 0.1"})));
  EXPECT_EQ(t.header, (std::vector<std::string>{"t", "x1", "x2", "eta1", "gain_out"}));
  ASSERT_EQ(t.rows.size(), traj.samples.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_TRUE(same_bits(t.rows[i][0], traj.samples[i].t));
    EXPECT_TRUE(same_bits(t.rows[i][2], traj.samples[i].x(1)));
    EXPECT_LE(std::abs(t.rows[i][3]), 0.1);
  }
}

TEST(Csv, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "ptrobust_csv_test";
  std::filesystem::remove_all(dir);
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{1.5, std::nan("")}};
  write_csv(dir / "sub" / "t.csv", t);
  const CsvTable back = read_csv(dir / "sub" / "t.csv");
  EXPECT_EQ(back.rows[0][0], 1.5);
  EXPECT_TRUE(std::isnan(back.rows[0][1]));
  std::filesystem::remove_all(dir);
}

TEST(Svg, ContainsPolyline) {
  const auto m = SystemModel::control_loop(ControllerSpec::example_eq4());
  ZeroNoise noise(2);
  const Trajectory traj = integrate(m, noise, Eigen::Vector2d(1, 0), 0.0, 1.0 - 1e-6, {});
  const std::string svg = trajectory_svg(traj, "run");
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_EQ(svg, trajectory_svg(traj, "run"));
}

TEST(EchoComments, OneLinePerKey) {
  const auto c = echo_comments({{"a", "1"}, {"b", "x y"}});
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[1], "config b = x y");
}
