#pragma once

#include <string>

#include "countdiag/diagnostics.hpp"
#include "countdiag/rootogram.hpp"

namespace countdiag {

struct SvgOptions {
  std::string title;
  int width = 640;
  int height = 420;
};

/// One rect per bin, the expected curve as a single polyline and the zero
/// reference line. With a band, adds dashed warning limits and solid band
/// polylines.
std::string render_svg(const RootogramCoords& coords, const SvgOptions& options = {},
                       const BootstrapBand* band = nullptr);

/// Sample vs theoretical quantiles with the shaded envelope and diagonal.
std::string render_svg(const QQCoordinates& qq, const SvgOptions& options = {});

/// Pearson residuals against fitted means.
std::string render_svg(const DiagnosticSeries& pearson, const SvgOptions& options = {});

}  // namespace countdiag
