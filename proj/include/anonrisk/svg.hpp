#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace anonrisk::svg {

struct Bar {
  std::string label;
  double value = 0.0;
};

// Simple vertical bar chart; values are scaled to the tallest bar.
void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<Bar>& bars);

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // step CDF points
};

// Step-function CDF plot for x in [0, 1], y in [0, 1].
void write_cdf_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<Series>& series);

}  // namespace anonrisk::svg
