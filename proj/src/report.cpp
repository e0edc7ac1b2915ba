#include "cvqkd/report.hpp"

#include "cvqkd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace cvqkd {

namespace {

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream iss(line);
  while (std::getline(iss, field, sep)) out.push_back(field);
  return out;
}

} // namespace

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream oss;
  oss << "scenario,power_dbm,xi_b_mean,xi_b_std,t_hat,skr_bps\n";
  for (const auto& r : rows) {
    oss << r.scenario << ',' << fmt9(r.total_launch_power_dbm) << ',' << fmt9(r.xi_b_mean)
        << ',' << fmt9(r.xi_b_std) << ',' << fmt9(r.t_hat) << ',' << fmt9(r.skr_bps) << '\n';
  }
  return oss.str();
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open CSV for writing: " + path);
  out << sweep_to_csv(rows);
}

std::vector<SweepRow> parse_sweep_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("CSV: empty input");
  if (line != "scenario,power_dbm,xi_b_mean,xi_b_std,t_hat,skr_bps")
    throw ConfigError("CSV: unexpected header: " + line);
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 6) throw ConfigError("CSV: expected 6 fields: " + line);
    SweepRow r;
    r.scenario = fields[0];
    r.total_launch_power_dbm = std::stod(fields[1]);
    r.xi_b_mean = std::stod(fields[2]);
    r.xi_b_std = std::stod(fields[3]);
    r.t_hat = std::stod(fields[4]);
    r.skr_bps = std::stod(fields[5]);
    rows.push_back(r);
  }
  return rows;
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV: " + path);
  std::ostringstream oss;
  oss << in.rdbuf();
  return parse_sweep_csv(oss.str());
}

std::string sweep_to_svg(const std::vector<SweepRow>& rows, const std::string& title) {
  if (rows.empty()) throw ConfigError("SVG: no rows");

  const double width = 720, height = 480;
  const double ml = 80, mr = 24, mt = 40, mb = 56; // margins
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = rows.front().total_launch_power_dbm, xmax = xmin;
  double ymin = 0.0, ymax = 0.0;
  for (const auto& r : rows) {
    xmin = std::min(xmin, r.total_launch_power_dbm);
    xmax = std::max(xmax, r.total_launch_power_dbm);
    ymax = std::max(ymax, r.xi_b_mean + r.xi_b_std);
    ymin = std::min(ymin, r.xi_b_mean - r.xi_b_std);
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1e-6;
  const double ypad = 0.08 * (ymax - ymin);
  ymax += ypad;
  ymin -= ypad;

  const auto xpix = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  const auto ypix = [&](double y) { return mt + (ymax - y) / (ymax - ymin) * ph; };

  static const char* palette[] = {"#1f77b4", "#2ca02c", "#ff7f0e", "#d62728", "#9467bd"};
  std::map<std::string, int> series;
  for (const auto& r : rows)
    if (!series.count(r.scenario)) {
      const int idx = static_cast<int>(series.size());
      series[r.scenario] = idx;
    }

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << title << "</text>\n";

  // Axes and ticks
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
      << mt + ph << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 6; ++i) {
    const double x = xmin + i * (xmax - xmin) / 6.0;
    const double y = ymin + i * (ymax - ymin) / 6.0;
    char xbuf[32], ybuf[32];
    std::snprintf(xbuf, sizeof(xbuf), "%.3g", x);
    std::snprintf(ybuf, sizeof(ybuf), "%.3g", y);
    svg << "<line x1=\"" << xpix(x) << "\" y1=\"" << mt + ph << "\" x2=\"" << xpix(x)
        << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>"
        << "<text x=\"" << xpix(x) << "\" y=\"" << mt + ph + 20
        << "\" text-anchor=\"middle\" font-size=\"11\">" << xbuf << "</text>\n";
    svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << ypix(y) << "\" x2=\"" << ml << "\" y2=\""
        << ypix(y) << "\" stroke=\"black\"/>"
        << "<text x=\"" << ml - 8 << "\" y=\"" << ypix(y) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << ybuf << "</text>\n";
  }
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">total launch power (dBm)</text>\n";
  svg << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " << mt + ph / 2
      << ")\">excess noise xi_B (SNU)</text>\n";

  for (const auto& [label, idx] : series) {
    const char* color = palette[idx % 5];
    std::ostringstream pts;
    for (const auto& r : rows) {
      if (r.scenario != label) continue;
      const double x = xpix(r.total_launch_power_dbm);
      const double y = ypix(r.xi_b_mean);
      pts << x << ',' << y << ' ';
      svg << "<line x1=\"" << x << "\" y1=\"" << ypix(r.xi_b_mean - r.xi_b_std) << "\" x2=\""
          << x << "\" y2=\"" << ypix(r.xi_b_mean + r.xi_b_std) << "\" stroke=\"" << color
          << "\"/>\n";
      svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"" << pts.str()
        << "\"/>\n";
    svg << "<rect x=\"" << ml + pw - 180 << "\" y=\"" << mt + 8 + 18 * idx
        << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>"
        << "<text x=\"" << ml + pw - 162 << "\" y=\"" << mt + 18 + 18 * idx
        << "\" font-size=\"12\">" << label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_sweep_svg(const std::vector<SweepRow>& rows, const std::string& title,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open SVG for writing: " + path);
  out << sweep_to_svg(rows, title);
}

} // namespace cvqkd
