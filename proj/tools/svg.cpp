#include "svg.hpp"

#include <array>
#include <cstdio>

namespace a3t::cli {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string svg_escape(const std::string& s) {
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

const std::string& series_color(std::size_t i) {
  static const std::array<std::string, 8> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  return palette[i % palette.size()];
}

SvgPanel::SvgPanel(SvgDocument& doc, double left, double top, double width, double height,
                   Range xr, Range yr)
    : doc_(&doc), left_(left), top_(top), width_(width), height_(height), xr_(xr), yr_(yr) {}

double SvgPanel::px(double x) const { return left_ + (x - xr_.lo) / (xr_.hi - xr_.lo) * width_; }
double SvgPanel::py(double y) const { return top_ + (yr_.hi - y) / (yr_.hi - yr_.lo) * height_; }

void SvgPanel::dot(double x, double y, double radius, const std::string& fill, double opacity) {
  std::string e = "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"" + num(radius) +
                  "\" fill=\"" + fill + "\"";
  if (opacity < 1.0) e += " fill-opacity=\"" + num(opacity) + "\"";
  doc_->raw(e + "/>");
}

void SvgPanel::ring(double x, double y, double radius, const std::string& stroke) {
  doc_->raw("<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"" + num(radius) +
            "\" fill=\"none\" stroke=\"" + stroke + "\"/>");
}

void SvgPanel::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                    double width, double opacity) {
  std::string e = "<line x1=\"" + num(px(x1)) + "\" y1=\"" + num(py(y1)) + "\" x2=\"" +
                  num(px(x2)) + "\" y2=\"" + num(py(y2)) + "\" stroke=\"" + stroke +
                  "\" stroke-width=\"" + num(width) + "\"";
  if (opacity < 1.0) e += " stroke-opacity=\"" + num(opacity) + "\"";
  doc_->raw(e + "/>");
}

void SvgPanel::polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                        const std::string& stroke, double width) {
  std::string pts;
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
    if (i) pts += ' ';
    pts += num(px(xs[i])) + "," + num(py(ys[i]));
  }
  doc_->raw("<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + stroke +
            "\" stroke-width=\"" + num(width) + "\"/>");
}

void SvgPanel::label(double x, double y, const std::string& text, const std::string& fill) {
  doc_->text(px(x) + 4, py(y) - 4, text, 10, "start", fill);
}

SvgDocument::SvgDocument(double width, double height) : width_(width), height_(height) {}

SvgPanel SvgDocument::panel(double left, double top, double width, double height, Range xr,
                            Range yr, const std::string& title, const std::string& x_label,
                            const std::string& y_label) {
  raw("<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(width) +
      "\" height=\"" + num(height) + "\" fill=\"#fff\" stroke=\"#888\"/>");
  text(left + width / 2, top - 8, title, 13, "middle");
  const auto tick = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  text(left, top + height + 14, tick(xr.lo), 10, "middle");
  text(left + width, top + height + 14, tick(xr.hi), 10, "middle");
  text(left - 4, top + height, tick(yr.lo), 10, "end");
  text(left - 4, top + 10, tick(yr.hi), 10, "end");
  if (!x_label.empty()) text(left + width / 2, top + height + 28, x_label, 11, "middle");
  if (!y_label.empty()) {
    raw("<text x=\"0\" y=\"0\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333\" "
        "transform=\"translate(" + num(left - 30) + "," + num(top + height / 2) +
        ") rotate(-90)\">" + svg_escape(y_label) + "</text>");
  }
  return SvgPanel(*this, left, top, width, height, xr, yr);
}

void SvgDocument::text(double x, double y, const std::string& s, double size,
                       const std::string& anchor, const std::string& fill) {
  raw("<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
      "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\">" + svg_escape(s) + "</text>");
}

void SvgDocument::raw(const std::string& element) {
  body_ += element;
  body_ += '\n';
}

std::string SvgDocument::str() const {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(width_) +
         "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) +
         "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>\n" +
         body_ + "</svg>\n";
}

}  // namespace a3t::cli
