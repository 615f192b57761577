#include "causaldq/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace causaldq::report {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

double parse_num(const std::string& s, const std::string& path) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad number '" + s + "' in " + path);
  return v;
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

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "method,p,m,delta,sigma,mean_add,stderr,false_alarm_rate,seed_count\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.p << ',' << r.m << ',' << format_double(r.delta) << ',' << format_double(r.sigma)
        << ',' << format_double(r.mean_add) << ',' << format_double(r.stderr_add) << ','
        << format_double(r.false_alarm_rate) << ',' << r.seed_count << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty results file " + path);
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = split(line, ',');
    if (c.size() != 9) throw std::invalid_argument("results row with " + std::to_string(c.size()) + " fields in " + path);
    ResultRow r;
    r.method = c[0];
    r.p = static_cast<int>(parse_num(c[1], path));
    r.m = static_cast<int>(parse_num(c[2], path));
    r.delta = parse_num(c[3], path);
    r.sigma = parse_num(c[4], path);
    r.mean_add = parse_num(c[5], path);
    r.stderr_add = parse_num(c[6], path);
    r.false_alarm_rate = parse_num(c[7], path);
    r.seed_count = static_cast<int>(parse_num(c[8], path));
    rows.push_back(r);
  }
  return rows;
}

void write_curves_csv(const std::vector<Series>& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "episode";
  std::size_t len = 0;
  for (const auto& s : series) {
    out << ',' << s.name;
    len = std::max(len, s.values.size());
  }
  out << '\n';
  for (std::size_t e = 0; e < len; ++e) {
    out << e;
    for (const auto& s : series) {
      out << ',';
      if (e < s.values.size()) out << format_double(s.values[e]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<Series> read_curves_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty curve file " + path);
  auto header = split(line, ',');
  if (header.empty() || header[0] != "episode") throw std::invalid_argument("curve file lacks episode column: " + path);
  std::vector<Series> series;
  for (std::size_t c = 1; c < header.size(); ++c) series.push_back({header[c], {}});
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line, ',');
    for (std::size_t c = 1; c < cells.size() && c <= series.size(); ++c)
      if (!cells[c].empty()) series[c - 1].values.push_back(parse_num(cells[c], path));
  }
  return series;
}

std::string render_svg(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                       const std::string& y_label) {
  const double width = 800, height = 500;
  const double left = 80, right = 160, top = 40, bottom = 60;
  const double pw = width - left - right, ph = height - top - bottom;

  double xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool any = false;
  for (const auto& s : series) {
    xmax = std::max(xmax, static_cast<double>(s.values.size() > 0 ? s.values.size() - 1 : 0));
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      if (!any) {
        ymin = ymax = v;
        any = true;
      }
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  auto sx = [&](double x) { return left + pw * x / xmax; };
  auto sy = [&](double y) { return top + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

  std::ostringstream o;
  o.precision(6);
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  o << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title)
    << "</text>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i < 5; ++i) {
    double fx = xmax * i / 4.0;
    double fy = ymin + (ymax - ymin) * i / 4.0;
    o << "<line x1=\"" << sx(fx) << "\" y1=\"" << top + ph << "\" x2=\"" << sx(fx) << "\" y2=\"" << top + ph + 5
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << sx(fx) << "\" y=\"" << top + ph + 20 << "\" text-anchor=\"middle\" font-size=\"12\">" << fx
      << "</text>\n";
    o << "<line x1=\"" << left - 5 << "\" y1=\"" << sy(fy) << "\" x2=\"" << left << "\" y2=\"" << sy(fy)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << left - 8 << "\" y=\"" << sy(fy) + 4 << "\" text-anchor=\"end\" font-size=\"12\">" << fy
      << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
    << xml_escape(x_label) << "</text>\n";
  o << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
    << top + ph / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % (sizeof kPalette / sizeof *kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t e = 0; e < s.values.size(); ++e) {
      if (!std::isfinite(s.values[e])) continue;
      o << (first ? "" : " ") << sx(static_cast<double>(e)) << ',' << sy(s.values[e]);
      first = false;
    }
    o << "\"/>\n";
    double ly = top + 20 + 20.0 * static_cast<double>(k);
    o << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 45 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << xml_escape(s.name)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_svg(const std::vector<Series>& series, const std::string& path, const std::string& title,
               const std::string& x_label, const std::string& y_label) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << render_svg(series, title, x_label, y_label);
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace causaldq::report
