#include "rml/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace rml::plot {

namespace {

const char* kPalette[] = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#bcbd22", "#17becf", "#393b79", "#ad494a", "#637939",
    "#7b4173", "#e6550d", "#31a354", "#3182bd",
};
constexpr int kPaletteSize = int(sizeof(kPalette) / sizeof(kPalette[0]));
constexpr const char* kNoiseColor = "#9e9e9e";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string scatter_svg(const std::vector<double>& x,
                        const std::vector<double>& y,
                        const ScatterSpec& spec) {
  if (x.size() != y.size())
    throw std::invalid_argument("scatter_svg: x/y size mismatch");
  if (!spec.labels.empty() && spec.labels.size() != x.size())
    throw std::invalid_argument("scatter_svg: label count mismatch");

  const double margin = 48.0;
  const double legend_w = 140.0;
  const double plot_w = double(spec.width) - 2.0 * margin - legend_w;
  const double plot_h = double(spec.height) - 2.0 * margin;

  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  if (!x.empty()) {
    xmin = *std::min_element(x.begin(), x.end());
    xmax = *std::max_element(x.begin(), x.end());
    ymin = *std::min_element(y.begin(), y.end());
    ymax = *std::max_element(y.begin(), y.end());
    if (xmax - xmin < 1e-12) {
      xmin -= 1.0;
      xmax += 1.0;
    }
    if (ymax - ymin < 1e-12) {
      ymin -= 1.0;
      ymax += 1.0;
    }
    const double padx = 0.04 * (xmax - xmin);
    const double pady = 0.04 * (ymax - ymin);
    xmin -= padx; xmax += padx;
    ymin -= pady; ymax += pady;
  }

  auto sx = [&](double v) {
    return margin + (v - xmin) / (xmax - xmin) * plot_w;
  };
  auto sy = [&](double v) {
    return margin + plot_h - (v - ymin) / (ymax - ymin) * plot_h;
  };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(spec.width) + "\" height=\"" +
         std::to_string(spec.height) + "\" viewBox=\"0 0 " +
         std::to_string(spec.width) + " " + std::to_string(spec.height) +
         "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<rect x=\"" + fmt(margin) + "\" y=\"" + fmt(margin) + "\" width=\"" +
         fmt(plot_w) + "\" height=\"" + fmt(plot_h) +
         "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  if (!spec.title.empty())
    svg += "<text x=\"" + fmt(margin) + "\" y=\"" + fmt(margin - 14.0) +
           "\" font-family=\"sans-serif\" font-size=\"15\">" +
           xml_escape(spec.title) + "</text>\n";

  // collect legend entries in label order
  std::vector<int> used;
  bool any_noise = false;
  for (size_t i = 0; i < x.size(); ++i) {
    const int lab = spec.labels.empty() ? 0 : spec.labels[i];
    if (lab < 0) {
      any_noise = true;
      continue;
    }
    if (std::find(used.begin(), used.end(), lab) == used.end())
      used.push_back(lab);
  }
  std::sort(used.begin(), used.end());

  for (size_t i = 0; i < x.size(); ++i) {
    const int lab = spec.labels.empty() ? 0 : spec.labels[i];
    const double px = sx(x[i]);
    const double py = sy(y[i]);
    if (lab < 0) {
      // noise: small gray cross
      svg += "<path d=\"M" + fmt(px - 2.4) + " " + fmt(py - 2.4) + " L" +
             fmt(px + 2.4) + " " + fmt(py + 2.4) + " M" + fmt(px - 2.4) + " " +
             fmt(py + 2.4) + " L" + fmt(px + 2.4) + " " + fmt(py - 2.4) +
             "\" stroke=\"" + kNoiseColor + "\" stroke-width=\"1\"/>\n";
    } else {
      svg += "<circle cx=\"" + fmt(px) + "\" cy=\"" + fmt(py) +
             "\" r=\"2.5\" fill=\"" +
             kPalette[size_t(lab % kPaletteSize)] + "\" fill-opacity=\"0.8\"/>\n";
    }
  }

  // legend
  double ly = margin + 6.0;
  const double lx = margin + plot_w + 18.0;
  for (int lab : used) {
    svg += "<circle cx=\"" + fmt(lx) + "\" cy=\"" + fmt(ly) +
           "\" r=\"4\" fill=\"" + kPalette[size_t(lab % kPaletteSize)] +
           "\"/>\n";
    const std::string name = size_t(lab) < spec.label_names.size()
                                 ? spec.label_names[size_t(lab)]
                                 : std::to_string(lab);
    svg += "<text x=\"" + fmt(lx + 10.0) + "\" y=\"" + fmt(ly + 4.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" +
           xml_escape(name) + "</text>\n";
    ly += 18.0;
  }
  if (any_noise) {
    svg += "<path d=\"M" + fmt(lx - 3.0) + " " + fmt(ly - 3.0) + " L" +
           fmt(lx + 3.0) + " " + fmt(ly + 3.0) + " M" + fmt(lx - 3.0) + " " +
           fmt(ly + 3.0) + " L" + fmt(lx + 3.0) + " " + fmt(ly - 3.0) +
           "\" stroke=\"" + kNoiseColor + "\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt(lx + 10.0) + "\" y=\"" + fmt(ly + 4.0) +
           "\" font-family=\"sans-serif\" font-size=\"12\">noise</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace rml::plot
