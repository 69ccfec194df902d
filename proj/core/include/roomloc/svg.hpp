#pragma once

#include <string>
#include <vector>

namespace roomloc::svg {

struct Series {
  std::string name;
  std::vector<double> y;
};

/// Minimal standalone SVG line chart. All series share the x positions
/// 0..n-1, labelled by `x_labels` when given. Non-finite points break a line.
std::string line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                       const std::vector<Series>& series, const std::string& y_label);

}  // namespace roomloc::svg
