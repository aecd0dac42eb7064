#include "countdiag/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "countdiag/error.hpp"

namespace countdiag {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string label(double v) {
  char buf[32];
  if (std::abs(v - std::round(v)) < 1e-9) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.3g", v);
  }
  std::string s = buf;
  if (s == "-0") s = "0";
  return s;
}

std::string escape(const std::string& s) {
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

struct Tick {
  double at;
  std::string text;
};

// Round-number ticks covering [lo, hi].
std::vector<Tick> linear_ticks(double lo, double hi) {
  const double span = std::max(hi - lo, 1e-12);
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    step = f * mag;
    if (step >= raw) break;
  }
  std::vector<Tick> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
    ticks.push_back({t, label(std::abs(t) < 1e-12 ? 0.0 : t)});
  }
  return ticks;
}

// Ticks at integer positions on the square-root scale, labelled with the
// frequency they stand for (k^2, signed).
std::vector<Tick> sqrt_ticks(double lo, double hi) {
  const double span = std::max(hi - lo, 1e-12);
  const double step = std::max(1.0, std::ceil(span / 7.0));
  std::vector<Tick> ticks;
  for (double k = std::ceil(lo / step) * step; k <= hi + 1e-9; k += step) {
    const double freq = k < 0 ? -k * k : k * k;
    ticks.push_back({k, label(freq)});
  }
  return ticks;
}

class Plot {
 public:
  Plot(const SvgOptions& o, double x0, double x1, double y0, double y1)
      : o_(o), x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
    if (!(x1_ > x0_)) x1_ = x0_ + 1.0;
    if (!(y1_ > y0_)) y1_ = y0_ + 1.0;
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\""
         << o.height << "\" viewBox=\"0 0 " << o.width << ' ' << o.height << "\">\n";
    out_ << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    if (!o.title.empty()) {
      out_ << "<text x=\"" << num(o.width / 2.0) << "\" y=\"18\" text-anchor=\"middle\" "
           << "font-size=\"13\">" << escape(o.title) << "</text>\n";
    }
  }

  double px(double x) const { return left + (x - x0_) / (x1_ - x0_) * (o_.width - left - right); }
  double py(double y) const {
    return o_.height - bottom - (y - y0_) / (y1_ - y0_) * (o_.height - top - bottom);
  }

  void axes(const std::vector<Tick>& xt, const std::vector<Tick>& yt, const std::string& xlab,
            const std::string& ylab) {
    const double xa = o_.height - bottom, ya = left;
    out_ << "<path d=\"M" << num(ya) << ' ' << num(top) << " V" << num(xa) << " H"
         << num(o_.width - right) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (const auto& t : xt) {
      out_ << "<line x1=\"" << num(px(t.at)) << "\" y1=\"" << num(xa) << "\" x2=\""
           << num(px(t.at)) << "\" y2=\"" << num(xa + 4) << "\" stroke=\"black\"/>"
           << "<text x=\"" << num(px(t.at)) << "\" y=\"" << num(xa + 16)
           << "\" text-anchor=\"middle\">" << t.text << "</text>\n";
    }
    for (const auto& t : yt) {
      out_ << "<line x1=\"" << num(ya - 4) << "\" y1=\"" << num(py(t.at)) << "\" x2=\""
           << num(ya) << "\" y2=\"" << num(py(t.at)) << "\" stroke=\"black\"/>"
           << "<text x=\"" << num(ya - 6) << "\" y=\"" << num(py(t.at) + 4)
           << "\" text-anchor=\"end\">" << t.text << "</text>\n";
    }
    out_ << "<text x=\"" << num(px(0.5 * (x0_ + x1_))) << "\" y=\"" << num(o_.height - 8.0)
         << "\" text-anchor=\"middle\">" << escape(xlab) << "</text>\n";
    out_ << "<text x=\"14\" y=\"" << num(py(0.5 * (y0_ + y1_)))
         << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << num(py(0.5 * (y0_ + y1_)))
         << ")\">" << escape(ylab) << "</text>\n";
  }

  void hline(double y, const std::string& style) {
    out_ << "<line x1=\"" << num(px(x0_)) << "\" y1=\"" << num(py(y)) << "\" x2=\""
         << num(px(x1_)) << "\" y2=\"" << num(py(y)) << "\" " << style << "/>\n";
  }

  void polyline(const std::vector<double>& x, const std::vector<double>& y,
                const std::string& style) {
    out_ << "<polyline points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
      out_ << (i ? " " : "") << num(px(x[i])) << ',' << num(py(y[i]));
    }
    out_ << "\" fill=\"none\" " << style << "/>\n";
  }

  std::ostringstream& raw() { return out_; }

  std::string finish() {
    out_ << "</g>\n</svg>\n";
    return out_.str();
  }

  static constexpr double left = 56, right = 16, top = 28, bottom = 40;

 private:
  SvgOptions o_;
  double x0_, x1_, y0_, y1_;
  std::ostringstream out_;
};

std::pair<double, double> padded(double lo, double hi) {
  const double pad = 0.05 * std::max(hi - lo, 1e-6);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string render_svg(const RootogramCoords& c, const SvgOptions& options,
                       const BootstrapBand* band) {
  const std::size_t m = c.bins();
  if (m == 0) throw DomainError("cannot render an empty rootogram");
  if (band && band->lower.size() != m) throw DomainError("band and rootogram bin counts differ");

  double ylo = c.reference_line, yhi = c.reference_line;
  for (std::size_t j = 0; j < m; ++j) {
    ylo = std::min({ylo, c.bar_bottom[j], c.bar_top[j], c.expected_curve[j]});
    yhi = std::max({yhi, c.bar_bottom[j], c.bar_top[j], c.expected_curve[j]});
  }
  if (band) {
    const auto [wl, wu] = warning_limits();
    ylo = std::min(ylo, wl);
    yhi = std::max(yhi, wu);
    for (std::size_t j = 0; j < m; ++j) {
      ylo = std::min(ylo, band->lower[j]);
      yhi = std::max(yhi, band->upper[j]);
    }
  }
  const auto [y0, y1] = padded(ylo, yhi);
  Plot plot(options, c.breaks.front(), c.breaks.back(), y0, y1);

  std::vector<Tick> xt;
  const double step = std::max(1.0, std::ceil(static_cast<double>(m) / 16.0));
  for (std::size_t j = 0; j < m; j += static_cast<std::size_t>(step)) {
    xt.push_back({c.bin_centers[j], label(c.bin_centers[j])});
  }
  const auto yt = c.scale == Scale::sqrt ? sqrt_ticks(y0, y1) : linear_ticks(y0, y1);
  plot.axes(xt, yt, "count",
            c.scale == Scale::sqrt ? "frequency (square-root scale)" : "frequency");

  for (std::size_t j = 0; j < m; ++j) {
    const double w = c.bar_width * (c.breaks[j + 1] - c.breaks[j]);
    const double xl = plot.px(c.bin_centers[j] - 0.5 * w);
    const double xr = plot.px(c.bin_centers[j] + 0.5 * w);
    const double ya = plot.py(std::max(c.bar_top[j], c.bar_bottom[j]));
    const double yb = plot.py(std::min(c.bar_top[j], c.bar_bottom[j]));
    plot.raw() << "<rect x=\"" << num(xl) << "\" y=\"" << num(ya) << "\" width=\"" << num(xr - xl)
               << "\" height=\"" << num(yb - ya)
               << "\" fill=\"#bdbdbd\" stroke=\"#4d4d4d\"/>\n";
  }
  plot.hline(c.reference_line, "stroke=\"black\"");
  if (c.style != Style::suspended) {
    plot.polyline(c.bin_centers, c.expected_curve, "stroke=\"#b2182b\" stroke-width=\"2\"");
  }
  if (band) {
    const auto [wl, wu] = warning_limits();
    plot.hline(wl, "stroke=\"#2166ac\" stroke-dasharray=\"6 4\" class=\"warning-limit\"");
    plot.hline(wu, "stroke=\"#2166ac\" stroke-dasharray=\"6 4\" class=\"warning-limit\"");
    plot.polyline(c.bin_centers, band->lower, "stroke=\"#2166ac\" class=\"bootstrap-band\"");
    plot.polyline(c.bin_centers, band->upper, "stroke=\"#2166ac\" class=\"bootstrap-band\"");
  }
  return plot.finish();
}

std::string render_svg(const QQCoordinates& qq, const SvgOptions& options) {
  if (qq.sample.empty()) throw DomainError("cannot render an empty Q-Q plot");
  double lo = std::min(qq.theoretical.front(), qq.sample.front());
  double hi = std::max(qq.theoretical.back(), qq.sample.back());
  for (std::size_t i = 0; i < qq.lower.size(); ++i) {
    lo = std::min(lo, qq.lower[i]);
    hi = std::max(hi, qq.upper[i]);
  }
  const auto [a, b] = padded(lo, hi);
  Plot plot(options, a, b, a, b);
  plot.axes(linear_ticks(a, b), linear_ticks(a, b), "theoretical quantiles", "sample quantiles");

  auto& out = plot.raw();
  out << "<polygon points=\"";
  for (std::size_t i = 0; i < qq.lower.size(); ++i) {
    out << (i ? " " : "") << num(plot.px(qq.theoretical[i])) << ',' << num(plot.py(qq.upper[i]));
  }
  for (std::size_t i = qq.lower.size(); i-- > 0;) {
    out << ' ' << num(plot.px(qq.theoretical[i])) << ',' << num(plot.py(qq.lower[i]));
  }
  out << "\" fill=\"#d9d9d9\" stroke=\"none\"/>\n";
  plot.polyline({a, b}, {a, b}, "stroke=\"#4d4d4d\" stroke-dasharray=\"4 3\"");
  for (std::size_t i = 0; i < qq.sample.size(); ++i) {
    out << "<circle cx=\"" << num(plot.px(qq.theoretical[i])) << "\" cy=\""
        << num(plot.py(qq.sample[i])) << "\" r=\"2\" fill=\"black\"/>\n";
  }
  return plot.finish();
}

std::string render_svg(const DiagnosticSeries& s, const SvgOptions& options) {
  if (s.values.empty()) throw DomainError("cannot render an empty residual series");
  const auto [xlo, xhi] = std::minmax_element(s.fitted_means.begin(), s.fitted_means.end());
  const auto [rlo, rhi] = std::minmax_element(s.values.begin(), s.values.end());
  const auto [x0, x1] = padded(*xlo, *xhi);
  const auto [y0, y1] = padded(std::min(*rlo, 0.0), std::max(*rhi, 0.0));
  Plot plot(options, x0, x1, y0, y1);
  plot.axes(linear_ticks(x0, x1), linear_ticks(y0, y1), "fitted means",
            s.kind == ResidualKind::pearson ? "Pearson residuals" : "quantile residuals");
  plot.hline(0.0, "stroke=\"#4d4d4d\" stroke-dasharray=\"4 3\"");
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    plot.raw() << "<circle cx=\"" << num(plot.px(s.fitted_means[i])) << "\" cy=\""
               << num(plot.py(s.values[i])) << "\" r=\"2\" fill=\"black\"/>\n";
  }
  return plot.finish();
}

}  // namespace countdiag
