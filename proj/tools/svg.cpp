#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "config.hpp"

namespace distpd_cli {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g(double v) { return fmt("%.6g", v); }
std::string px(double v) { return fmt("%.2f", v); }

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

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                "#bcbd22", "#17becf"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    } else if (lo == hi) {
      const double pad = lo == 0.0 ? 1.0 : 0.1 * std::abs(lo);
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw ConfigError("plot: unknown column '" + name + "'");
}

std::string Table::csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i)
    out << (i ? "," : "") << columns[i];
  if (!text_column.empty()) out << ',' << text_column;
  out << '\n';
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    for (std::size_t i = 0; i < r.size(); ++i)
      out << (i ? "," : "") << fmt("%.12g", r[i]);
    if (!text_column.empty()) out << ',' << (k < text.size() ? text[k] : "");
    out << '\n';
  }
  return out.str();
}

std::string emit_svg(const Table& table, const PlotSpec& spec) {
  const std::size_t xi = table.column(spec.x);
  const std::size_t yi = table.column(spec.y);
  std::vector<std::size_t> gi;
  for (const auto& name : spec.group_by) gi.push_back(table.column(name));

  // Group rows by the tuple of grouping values, first appearance first.
  std::vector<std::vector<double>> keys;
  std::vector<std::vector<std::size_t>> members;
  std::map<std::vector<double>, std::size_t> index;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::vector<double> key;
    for (std::size_t c : gi) key.push_back(table.rows[r][c]);
    auto [it, fresh] = index.emplace(key, keys.size());
    if (fresh) {
      keys.push_back(key);
      members.emplace_back();
    }
    members[it->second].push_back(r);
  }

  Range xr, yr;
  for (const auto& row : table.rows) {
    if (std::isfinite(row[xi]) && std::isfinite(row[yi])) {
      xr.add(row[xi]);
      yr.add(row[yi]);
    }
  }
  if (spec.threshold) yr.add(*spec.threshold);
  xr.settle();
  yr.settle();

  const double left = 70, right = 170, top = 40, bottom = 55;
  const double w = spec.width - left - right;
  const double h = spec.height - top - bottom;
  auto sx = [&](double v) { return left + (v - xr.lo) / (xr.hi - xr.lo) * w; };
  auto sy = [&](double v) { return top + (yr.hi - v) / (yr.hi - yr.lo) * h; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
    << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width << ' '
    << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\""
    << spec.height << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << px(left + w / 2) << "\" y=\"22\" text-anchor=\"middle\" "
    << "font-size=\"15\">" << escape(spec.title) << "</text>\n";

  // Axes and ticks.
  o << "<g stroke=\"black\" fill=\"none\">\n";
  o << "<rect x=\"" << px(left) << "\" y=\"" << px(top) << "\" width=\""
    << px(w) << "\" height=\"" << px(h) << "\"/>\n";
  o << "</g>\n<g fill=\"black\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = xr.lo + (xr.hi - xr.lo) * k / 5.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * k / 5.0;
    o << "<text x=\"" << px(sx(xv)) << "\" y=\"" << px(top + h + 16)
      << "\" text-anchor=\"middle\">" << g(xv) << "</text>\n";
    o << "<text x=\"" << px(left - 6) << "\" y=\"" << px(sy(yv) + 4)
      << "\" text-anchor=\"end\">" << g(yv) << "</text>\n";
  }
  o << "<text x=\"" << px(left + w / 2) << "\" y=\"" << px(spec.height - 12)
    << "\" text-anchor=\"middle\">" << escape(spec.x_label.empty() ? spec.x : spec.x_label)
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << px(top + h / 2)
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << px(top + h / 2)
    << ")\">" << escape(spec.y_label.empty() ? spec.y : spec.y_label)
    << "</text>\n</g>\n";

  if (spec.threshold) {
    const double ty = sy(*spec.threshold);
    o << "<line class=\"threshold\" x1=\"" << px(left) << "\" y1=\"" << px(ty)
      << "\" x2=\"" << px(left + w) << "\" y2=\"" << px(ty)
      << "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
  }

  for (std::size_t s = 0; s < keys.size(); ++s) {
    const char* colour = kPalette[s % (sizeof kPalette / sizeof *kPalette)];
    std::string label;
    for (std::size_t k = 0; k < gi.size(); ++k)
      label += (k ? ", " : "") + spec.group_by[k] + "=" + g(keys[s][k]);
    o << "<g class=\"series\" stroke=\"" << colour << "\" fill=\"" << colour
      << "\">\n<polyline fill=\"none\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t r : members[s]) {
      const auto& row = table.rows[r];
      if (!std::isfinite(row[xi]) || !std::isfinite(row[yi])) continue;
      o << (first ? "" : " ") << px(sx(row[xi])) << ',' << px(sy(row[yi]));
      first = false;
    }
    o << "\"/>\n";
    if (spec.markers) {
      for (std::size_t r : members[s]) {
        const auto& row = table.rows[r];
        if (!std::isfinite(row[xi]) || !std::isfinite(row[yi])) continue;
        o << "<circle cx=\"" << px(sx(row[xi])) << "\" cy=\"" << px(sy(row[yi]))
          << "\" r=\"2.5\"/>\n";
      }
    }
    const double ly = top + 10 + 16 * static_cast<double>(s);
    o << "<text x=\"" << px(left + w + 12) << "\" y=\"" << px(ly + 4)
      << "\" stroke=\"none\">" << escape(label) << "</text>\n</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace distpd_cli
