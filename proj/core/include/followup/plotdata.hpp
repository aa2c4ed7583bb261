#pragma once

// Step-coordinate CSV for plotting right-continuous curves, and a minimal
// SVG renderer (axes, step paths, censor ticks, at-risk row).
//
// CSV columns: curve_id,t,value,se,n_risk. Each curve starts with an origin
// row at t=0; every knot then contributes a pre-jump and a post-jump row at
// the same t; a final row extends the last level to the largest observed
// time when that lies beyond the last knot.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "followup/survival.hpp"

namespace followup::plot {

struct NamedCurve {
  std::string id;
  StepCurve curve;
};

void write_plotdata_csv(std::ostream& out, std::span<const NamedCurve> curves);
std::string plotdata_csv(std::span<const NamedCurve> curves);

struct SvgOptions {
  std::string title;
  std::string x_label = "Months";
  std::vector<double> risk_grid;  // at-risk row ticks; empty: no row
  bool censor_ticks = true;
  double width = 760.0;
  double height = 480.0;
};

// At-risk counts per curve on the grid, as printed in the SVG at-risk row.
std::vector<std::vector<std::size_t>> risk_row(std::span<const NamedCurve> curves,
                                               std::span<const double> grid);

std::string render_svg(std::span<const NamedCurve> curves, const SvgOptions& options = {});

}  // namespace followup::plot
