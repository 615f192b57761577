#pragma once

#include <string>
#include <vector>

namespace causaldq::report {

struct ResultRow {
  std::string method;
  int p = 0;
  int m = 0;
  double delta = 0.0;
  double sigma = 0.0;
  double mean_add = 0.0;
  double stderr_add = 0.0;
  double false_alarm_rate = 0.0;
  int seed_count = 0;
};

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> read_results_csv(const std::string& path);

struct Series {
  std::string name;
  std::vector<double> values;
};

/// Columns: episode, then one column per series.
void write_curves_csv(const std::vector<Series>& series, const std::string& path);
std::vector<Series> read_curves_csv(const std::string& path);

/// 800x500 line chart, one polyline per series, 5 ticks per axis.
std::string render_svg(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                       const std::string& y_label);
void write_svg(const std::vector<Series>& series, const std::string& path, const std::string& title,
               const std::string& x_label = "episode", const std::string& y_label = "cumulative reward");

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace causaldq::report
