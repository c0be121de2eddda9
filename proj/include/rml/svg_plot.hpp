#pragma once

#include <string>
#include <vector>

namespace rml::plot {

struct ScatterSpec {
  int width = 860;
  int height = 640;
  std::string title;
  // one label per point; -1 renders as noise (gray cross, "noise" legend)
  std::vector<int> labels;
  std::vector<std::string> label_names;  // indexed by label
};

// Self-contained deterministic SVG scatter: fixed palette, legend, fixed
// float formatting. Identical inputs give identical bytes.
std::string scatter_svg(const std::vector<double>& x,
                        const std::vector<double>& y, const ScatterSpec& spec);

}  // namespace rml::plot
