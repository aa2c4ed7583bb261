#include "followup/plotdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "followup/error.hpp"

namespace followup::plot {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_plotdata_csv(std::ostream& out, std::span<const NamedCurve> curves) {
  if (curves.empty()) throw InputError("plot data needs at least one curve");
  out << "curve_id,t,value,se,n_risk\n";
  for (const auto& [id, curve] : curves) {
    auto row = [&](double t, double value, double se, std::size_t n_risk) {
      out << id << ',' << num(t) << ',' << num(value) << ',' << num(se) << ',' << n_risk << '\n';
    };
    row(0.0, curve.initial, 0.0, curve.n_total);
    double level = curve.initial;
    double se = 0.0;
    for (const auto& k : curve.knots) {
      row(k.time, level, se, k.n_risk);
      row(k.time, k.value, k.se, k.n_risk);
      level = k.value;
      se = k.se;
    }
    const double last = curve.knots.empty() ? 0.0 : curve.knots.back().time;
    if (curve.max_time > last) row(curve.max_time, level, se, curve.n_risk_at(curve.max_time));
  }
}

std::string plotdata_csv(std::span<const NamedCurve> curves) {
  std::ostringstream out;
  write_plotdata_csv(out, curves);
  return out.str();
}

std::vector<std::vector<std::size_t>> risk_row(std::span<const NamedCurve> curves,
                                               std::span<const double> grid) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& c : curves) {
    std::vector<std::size_t> counts;
    for (double t : grid) counts.push_back(c.curve.n_risk_at(t));
    out.push_back(std::move(counts));
  }
  return out;
}

std::string render_svg(std::span<const NamedCurve> curves, const SvgOptions& options) {
  if (curves.empty()) throw InputError("plot needs at least one curve");
  const double left = 70.0;
  const double right = 20.0;
  const double top = options.title.empty() ? 20.0 : 40.0;
  const double risk_height = options.risk_grid.empty() ? 0.0 : 22.0 * (curves.size() + 1);
  const double bottom = 50.0 + risk_height;
  const double plot_w = options.width - left - right;
  const double plot_h = options.height - top - bottom;

  double x_max = 0.0;
  double y_max = 1.0;
  for (const auto& c : curves) {
    x_max = std::max(x_max, c.curve.max_time);
    if (!c.curve.knots.empty()) x_max = std::max(x_max, c.curve.knots.back().time);
    y_max = std::max(y_max, c.curve.initial);
    for (const auto& k : c.curve.knots) y_max = std::max(y_max, k.value);
  }
  if (x_max <= 0.0) x_max = 1.0;
  const auto sx = [&](double t) { return left + plot_w * t / x_max; };
  const auto sy = [&](double v) { return top + plot_h * (1.0 - v / y_max); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(options.width)
      << "\" height=\"" << num(options.height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  if (!options.title.empty()) {
    svg << "<text x=\"" << num(options.width / 2) << "\" y=\"22\" text-anchor=\"middle\">"
        << xml_escape(options.title) << "</text>\n";
  }
  // axes
  svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + plot_h) << "\" x2=\""
      << num(left + plot_w) << "\" y2=\"" << num(top + plot_h) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left)
      << "\" y2=\"" << num(top + plot_h) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = y_max * i / 5.0;
    svg << "<text x=\"" << num(left - 8) << "\" y=\"" << num(sy(v) + 4)
        << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  std::vector<double> x_ticks = options.risk_grid;
  if (x_ticks.empty()) {
    for (int i = 0; i <= 6; ++i) x_ticks.push_back(x_max * i / 6.0);
  }
  for (double t : x_ticks) {
    svg << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(top + plot_h + 16)
        << "\" text-anchor=\"middle\">" << num(std::round(t * 10.0) / 10.0) << "</text>\n";
  }
  svg << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"" << num(top + plot_h + 34)
      << "\" text-anchor=\"middle\">" << xml_escape(options.x_label) << "</text>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i].curve;
    const char* color = kPalette[i % std::size(kPalette)];
    std::ostringstream path;
    path << "M" << num(sx(0.0)) << "," << num(sy(c.initial));
    for (const auto& k : c.knots) {
      path << " H" << num(sx(k.time)) << " V" << num(sy(k.value));
    }
    path << " H" << num(sx(std::max(c.max_time, c.knots.empty() ? 0.0 : c.knots.back().time)));
    svg << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"><title>" << xml_escape(curves[i].id) << "</title></path>\n";
    if (options.censor_ticks) {
      for (double t : c.censor_times) {
        const double y = sy(c.at(t));
        svg << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(y - 4) << "\" x2=\"" << num(sx(t))
            << "\" y2=\"" << num(y + 4) << "\" stroke=\"" << color << "\"/>\n";
      }
    }
    svg << "<text x=\"" << num(left + plot_w - 4) << "\" y=\"" << num(top + 14 + 16.0 * i)
        << "\" text-anchor=\"end\" fill=\"" << color << "\">" << xml_escape(curves[i].id)
        << "</text>\n";
  }

  if (!options.risk_grid.empty()) {
    const auto counts = risk_row(curves, options.risk_grid);
    double y = top + plot_h + 58;
    svg << "<text x=\"4\" y=\"" << num(y) << "\">At risk</text>\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
      y += 18;
      svg << "<text x=\"4\" y=\"" << num(y) << "\" fill=\"" << kPalette[i % std::size(kPalette)]
          << "\">" << xml_escape(curves[i].id.substr(0, 10)) << "</text>\n";
      for (std::size_t j = 0; j < options.risk_grid.size(); ++j) {
        svg << "<text class=\"at-risk\" x=\"" << num(sx(options.risk_grid[j])) << "\" y=\""
            << num(y) << "\" text-anchor=\"middle\">" << counts[i][j] << "</text>\n";
      }
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace followup::plot
