#pragma once

// Minimal standalone SVG 1.1 output: panels with data coordinates, dots,
// polylines and labels. No external references.

#include <string>
#include <vector>

namespace a3t::cli {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

class SvgDocument;

class SvgPanel {
 public:
  void dot(double x, double y, double radius, const std::string& fill, double opacity = 1.0);
  void ring(double x, double y, double radius, const std::string& stroke);
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0, double opacity = 1.0);
  void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::string& stroke, double width = 1.5);
  void label(double x, double y, const std::string& text, const std::string& fill = "#333");

 private:
  friend class SvgDocument;
  SvgPanel(SvgDocument& doc, double left, double top, double width, double height, Range xr,
           Range yr);
  double px(double x) const;
  double py(double y) const;

  SvgDocument* doc_;
  double left_, top_, width_, height_;
  Range xr_, yr_;
};

class SvgDocument {
 public:
  SvgDocument(double width, double height);

  // Adds a framed plotting area with tick labels at the range ends.
  SvgPanel panel(double left, double top, double width, double height, Range xr, Range yr,
                 const std::string& title, const std::string& x_label = "",
                 const std::string& y_label = "");
  void text(double x, double y, const std::string& text, double size = 12,
            const std::string& anchor = "start", const std::string& fill = "#333");
  void raw(const std::string& element);
  std::string str() const;

 private:
  double width_, height_;
  std::string body_;
};

std::string svg_escape(const std::string& s);

// Fixed palette for up to eight series.
const std::string& series_color(std::size_t i);

}  // namespace a3t::cli
