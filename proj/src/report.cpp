#include "clickseq/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace clickseq {
namespace {

constexpr const char* kResultsHeader = "course,dimension,value,feature_set,model,split,seed,accuracy,n";

std::string svg_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

// Numeric values sort numerically, All goes last.
bool value_less(const std::string& a, const std::string& b) {
  if (a == b) return false;
  if (a == "All") return false;
  if (b == "All") return true;
  return std::stoll(a) < std::stoll(b);
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

void write_results_csv(std::ostream& out, std::span<const ExperimentCell> cells) {
  out << kResultsHeader << '\n';
  for (const auto& c : cells) {
    out << csv_escape(c.course) << ',' << c.dimension << ',' << c.value << ',' << c.feature_set << ',' << c.model
        << ',' << c.split << ',' << c.seed << ',' << format_double(c.accuracy) << ',' << c.n << '\n';
  }
}

std::vector<ExperimentCell> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kResultsHeader) {
    throw Error(ErrorKind::schema, std::string("results file must start with '") + kResultsHeader + "'");
  }
  std::vector<ExperimentCell> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(trim(line));
    if (f.size() != 9) throw Error(ErrorKind::parse, "results line " + std::to_string(line_no) + ": expected 9 fields");
    try {
      ExperimentCell c{f[0], f[1], f[2], f[3], f[4], f[5], std::stoull(f[6]), std::stod(f[7]),
                       static_cast<std::size_t>(std::stoull(f[8]))};
      if (!(c.accuracy >= 0.0 && c.accuracy <= 1.0)) throw std::out_of_range("accuracy");
      if (c.value != "All") (void)std::stoll(c.value);
      out.push_back(std::move(c));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::parse, "results line " + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

std::vector<ExperimentCell> load_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return read_results_csv(in);
}

void write_significance_csv(std::ostream& out, std::span<const SignificanceRow> rows) {
  // runs_per_config makes the repetition count behind each test explicit.
  out << "config_a,config_b,mean_a,mean_b,runs_per_config,t,df,p,significant@0.05\n";
  for (const auto& r : rows) {
    const auto runs = static_cast<long>(std::lround((r.result.degrees_of_freedom + 2.0) / 2.0));
    out << r.config_a << ',' << r.config_b << ',' << format_double(r.result.mean_a) << ','
        << format_double(r.result.mean_b) << ',' << runs << ',' << format_double(r.result.t_statistic) << ','
        << format_double(r.result.degrees_of_freedom) << ',' << format_double(r.result.p_value) << ','
        << (r.result.p_value <= 0.05 ? "true" : "false") << '\n';
  }
}

void write_skipped_csv(std::ostream& out, std::span<const SkippedCell> rows) {
  out << "dimension,value,feature_set,model,reason\n";
  for (const auto& r : rows) {
    out << r.dimension << ',' << r.value << ',' << r.feature_set << ',' << r.model << ',' << csv_escape(r.reason)
        << '\n';
  }
}

void write_exclusions_csv(std::ostream& out, std::span<const Exclusion> rows) {
  out << "dimension,value,feature_set,split,excluded\n";
  for (const auto& r : rows) {
    out << r.dimension << ',' << r.value << ',' << r.feature_set << ',' << r.split << ',' << r.excluded << '\n';
  }
}

std::vector<PlotData> plot_data(std::span<const ExperimentCell> cells) {
  const bool has_eval = std::any_of(cells.begin(), cells.end(), [](const auto& c) { return c.split != "train"; });
  // dimension -> series -> value -> (sum, count)
  std::map<std::string, std::map<std::string, std::map<std::string, std::pair<double, int>>>> acc;
  std::vector<std::string> dim_order;
  std::map<std::string, std::vector<std::string>> series_order;
  for (const auto& c : cells) {
    if (has_eval && c.split == "train") continue;
    std::string series = c.feature_set + "/" + c.model;
    if (c.split == "transfer") series += " (transfer)";
    if (!acc.count(c.dimension)) dim_order.push_back(c.dimension);
    auto& by_series = acc[c.dimension];
    if (!by_series.count(series)) series_order[c.dimension].push_back(series);
    auto& slot = by_series[series][c.value];
    slot.first += c.accuracy;
    slot.second += 1;
  }
  std::vector<PlotData> out;
  for (const auto& dim : dim_order) {
    PlotData pd;
    pd.dimension = dim;
    for (const auto& [series, values] : acc[dim]) {
      for (const auto& [v, _] : values) {
        if (std::find(pd.x_labels.begin(), pd.x_labels.end(), v) == pd.x_labels.end()) pd.x_labels.push_back(v);
      }
    }
    std::sort(pd.x_labels.begin(), pd.x_labels.end(), value_less);
    for (const auto& series : series_order[dim]) {
      PlotSeries s{series, {}};
      const auto& values = acc[dim][series];
      for (const auto& x : pd.x_labels) {
        const auto it = values.find(x);
        s.accuracy.push_back(it == values.end() ? std::numeric_limits<double>::quiet_NaN()
                                                : it->second.first / it->second.second);
      }
      pd.series.push_back(std::move(s));
    }
    out.push_back(std::move(pd));
  }
  return out;
}

std::string render_svg(const PlotData& data) {
  const double width = 640, height = 400, left = 60, right = 190, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  double lo = 1.0, hi = 0.0;
  for (const auto& s : data.series) {
    for (double a : s.accuracy) {
      if (std::isnan(a)) continue;
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  if (lo > hi) lo = 0.0, hi = 1.0;
  lo = std::max(0.0, std::floor(lo * 10.0 - 0.5) / 10.0);
  hi = std::min(1.0, std::ceil(hi * 10.0 + 0.5) / 10.0);
  if (hi - lo < 0.1) hi = std::min(1.0, lo + 0.1), lo = hi - 0.1;

  const std::size_t nx = data.x_labels.size();
  auto xpos = [&](std::size_t i) { return left + (nx <= 1 ? pw / 2 : pw * static_cast<double>(i) / (nx - 1)); };
  auto ypos = [&](double a) { return top + ph * (1.0 - (a - lo) / (hi - lo)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">Accuracy vs "
      << svg_escape(data.dimension) << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double a = lo + (hi - lo) * k / 5.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << ypos(a) + 4 << "\" text-anchor=\"end\">" << fixed(a)
        << "</text>\n";
  }
  for (std::size_t i = 0; i < nx; ++i) {
    svg << "<text x=\"" << xpos(i) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
        << svg_escape(data.x_labels[i]) << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
      << svg_escape(data.dimension) << "</text>\n";
  for (std::size_t s = 0; s < data.series.size(); ++s) {
    const auto& series = data.series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    std::ostringstream pts;
    bool first = true;
    for (std::size_t i = 0; i < nx; ++i) {
      const double a = series.accuracy[i];
      if (std::isnan(a)) continue;
      if (!first) pts << ' ';
      pts << fixed(xpos(i), 1) << ',' << fixed(ypos(a), 1);
      first = false;
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts.str()
        << "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(s) + 6;
    svg << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + pw + 36 << "\" y=\"" << ly + 4 << "\">" << svg_escape(series.name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::filesystem::path> write_plots(std::span<const ExperimentCell> cells,
                                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (const auto& pd : plot_data(cells)) {
    const auto path = dir / ("accuracy_" + pd.dimension + ".svg");
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << render_svg(pd);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace clickseq
