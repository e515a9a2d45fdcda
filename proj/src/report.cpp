#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "htbnn/bench.hpp"
#include "htbnn/errors.hpp"
#include "htbnn/serialize.hpp"

namespace htbnn {

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void write_csv(const RateReport& r, const std::filesystem::path& p) {
  auto os = open_out(p);
  os << "n,replication,error,method\n";
  for (const auto& row : r.rows)
    os << row.n << ',' << row.replication << ',' << format_double(row.error) << ',' << row.method << '\n';
}

void write_json(const RateReport& r, const std::filesystem::path& p) {
  nlohmann::ordered_json j;
  j["fixture"] = r.fixture_label;
  j["design"] = r.design;
  j["architecture"] = r.architecture;
  j["theoretical_architecture"] = r.theoretical_architecture;
  j["reference_exponents"] = r.reference_exponents;
  j["slope_tolerance"] = r.slope_tolerance;
  j["partial"] = r.partial;
  j["failures"] = r.failures;
  j["methods"] = nlohmann::ordered_json::array();
  for (const auto& s : r.summaries) {
    nlohmann::ordered_json m;
    m["method"] = s.method;
    m["n"] = s.n;
    m["mean_error"] = s.mean_error;
    m["stderr"] = s.stderr;
    m["slope"] = s.slope;
    m["slope_stderr"] = s.slope_stderr;
    m["slope_ci"] = {s.slope_ci_low, s.slope_ci_high};
    m["slope_within_tolerance"] = s.slope_within_tolerance;
    m["monotone_violations"] = s.monotone_violations;
    m["monotone"] = s.monotone;
    j["methods"].push_back(m);
  }
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

// Log-log plot of mean error against n with one dashed reference line per exponent.
void write_svg(const RateReport& r, const std::filesystem::path& p) {
  constexpr double W = 640, H = 440, left = 70, right = 20, top = 20, bottom = 50;
  double x0 = std::log(100.0), x1 = std::log(10000.0), y0 = std::log(0.01), y1 = std::log(10.0);
  bool have = false;
  for (const auto& s : r.summaries)
    for (std::size_t i = 0; i < s.n.size(); ++i) {
      if (!(s.mean_error[i] > 0)) continue;
      const double lx = std::log(static_cast<double>(s.n[i])), ly = std::log(s.mean_error[i]);
      if (!have) {
        x0 = x1 = lx;
        y0 = y1 = ly;
        have = true;
      }
      x0 = std::min(x0, lx);
      x1 = std::max(x1, lx);
      y0 = std::min(y0, ly);
      y1 = std::max(y1, ly);
    }
  if (x1 - x0 < 1e-9) x1 = x0 + 1.0;
  const double ypad = std::max(0.25, 0.1 * (y1 - y0));
  y0 -= ypad;
  y1 += ypad;
  auto X = [&](double lx) { return left + (lx - x0) / (x1 - x0) * (W - left - right); };
  auto Y = [&](double ly) { return top + (y1 - ly) / (y1 - y0) * (H - top - bottom); };
  auto f = [](double v) { return format_double(std::round(v * 100.0) / 100.0); };

  auto os = open_out(p);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
     << "\" stroke=\"black\"/>\n";
  os << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (W + left) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">log n</text>\n";
  os << "<text x=\"16\" y=\"" << (H - bottom + top) / 2 << "\" transform=\"rotate(-90 16 " << (H - bottom + top) / 2
     << ")\" text-anchor=\"middle\">log L2 error</text>\n";
  for (const auto& s : r.summaries)
    for (std::size_t i = 0; i < s.n.size(); ++i) {
      const double lx = std::log(static_cast<double>(s.n[i]));
      os << "<text x=\"" << f(X(lx)) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">" << s.n[i] << "</text>\n";
    }

  // Reference lines pass through the first point of the first method.
  double ax = x0, ay = 0.5 * (y0 + y1);
  if (!r.summaries.empty() && !r.summaries.front().n.empty() && r.summaries.front().mean_error.front() > 0) {
    ax = std::log(static_cast<double>(r.summaries.front().n.front()));
    ay = std::log(r.summaries.front().mean_error.front());
  }
  for (double e : r.reference_exponents) {
    const double bx = x1, by = ay - e * (x1 - ax);
    os << "<line class=\"reference\" data-exponent=\"" << format_double(e) << "\" x1=\"" << f(X(ax)) << "\" y1=\""
       << f(Y(ay)) << "\" x2=\"" << f(X(bx)) << "\" y2=\"" << f(Y(by))
       << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
  }

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::size_t c = 0;
  for (const auto& s : r.summaries) {
    const char* col = colors[c++ % 4];
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.n.size(); ++i) {
      if (!(s.mean_error[i] > 0)) continue;
      const double px = X(std::log(static_cast<double>(s.n[i]))), py = Y(std::log(s.mean_error[i]));
      pts << f(px) << ',' << f(py) << ' ';
      const double lo = s.mean_error[i] - s.stderr[i], hi = s.mean_error[i] + s.stderr[i];
      if (lo > 0)
        os << "<line class=\"errorbar\" x1=\"" << f(px) << "\" y1=\"" << f(Y(std::log(lo))) << "\" x2=\"" << f(px)
           << "\" y2=\"" << f(Y(std::log(hi))) << "\" stroke=\"" << col << "\"/>\n";
      os << "<circle cx=\"" << f(px) << "\" cy=\"" << f(py) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    }
    os << "<polyline class=\"method\" data-method=\"" << s.method << "\" points=\"" << pts.str()
       << "\" fill=\"none\" stroke=\"" << col << "\"/>\n";
    os << "<text x=\"" << W - right - 150 << "\" y=\"" << top + 14 * static_cast<double>(c) << "\" fill=\"" << col << "\">"
       << s.method << " slope " << f(s.slope) << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace

void emit_report(const RateReport& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create report directory " + dir);
  const std::filesystem::path base(dir);
  write_csv(report, base / "results.csv");
  write_json(report, base / "summary.json");
  write_svg(report, base / "rate_plot.svg");
}

std::vector<RateRow> read_results_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(is, line);
  if (line != "n,replication,error,method") throw ConfigError("unexpected results.csv header in " + path);
  std::vector<RateRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c, d;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',') || !std::getline(ss, d))
      throw ConfigError("malformed results.csv line: " + line);
    rows.push_back({std::stoi(a), std::stoi(b), std::stod(c), d});
  }
  return rows;
}

}  // namespace htbnn
