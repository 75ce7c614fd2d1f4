#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "lawlab/format.hpp"
#include "lawlab/lab.hpp"

namespace lawlab {

namespace {

constexpr double kWidth = 900, kHeight = 560;
constexpr double kLeft = 90, kRight = 250, kTop = 40, kBottom = 60;
constexpr int kSamples = 200;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

struct Curve {
  std::string label;
  LawForm form;
  Vector params;
  double flop_constant = 6.0;
  double objective = INFINITY;
};

double pick(PlotAxes axes, const Allocation& a) {
  switch (axes) {
    case PlotAxes::c_vs_n: return a.n;
    case PlotAxes::c_vs_d: return a.d;
    case PlotAxes::c_vs_rho: return a.rho;
  }
  return NAN;
}

std::optional<double> reference_value(PlotAxes axes, const json& ref) {
  const bool has_n = ref.contains("n") && ref["n"].is_number();
  const bool has_d = ref.contains("d") && ref["d"].is_number();
  switch (axes) {
    case PlotAxes::c_vs_n:
      if (has_n) return ref["n"].get<double>();
      break;
    case PlotAxes::c_vs_d:
      if (has_d) return ref["d"].get<double>();
      break;
    case PlotAxes::c_vs_rho:
      if (has_n && has_d) return ref["d"].get<double>() / ref["n"].get<double>();
      break;
  }
  return std::nullopt;
}

std::optional<double> evaluate(const Curve& c, PlotAxes axes, double compute) {
  try {
    const double v = pick(axes, allocate(c.form, c.params, compute, c.flop_constant));
    if (std::isfinite(v) && v > 0.0) return v;
  } catch (const Error&) {
  }
  return std::nullopt;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string short_num(double v) { return fmt::format("{:.3g}", v); }

}  // namespace

PlotAxes parse_plot_axes(std::string_view name) {
  if (name == "c_vs_n") return PlotAxes::c_vs_n;
  if (name == "c_vs_d") return PlotAxes::c_vs_d;
  if (name == "c_vs_rho") return PlotAxes::c_vs_rho;
  throw ConfigError("unknown plot axes '" + std::string(name) + "'");
}

std::string to_string(PlotAxes a) {
  switch (a) {
    case PlotAxes::c_vs_n: return "c_vs_n";
    case PlotAxes::c_vs_d: return "c_vs_d";
    case PlotAxes::c_vs_rho: return "c_vs_rho";
  }
  return {};
}

std::string render_plot(const std::vector<PlotSeries>& series, PlotAxes axes,
                        std::optional<std::pair<double, double>> c_range) {
  if (series.empty()) throw EmptyReports("nothing to plot: no reports given");
  if (c_range && !(c_range->first > 0.0 && c_range->second > c_range->first))
    throw DomainError("plot compute range must satisfy 0 < lo < hi");

  std::vector<Curve> curves;
  std::map<std::string, json> refs;  // by label; the first report to mention a label wins
  double c_lo = INFINITY, c_hi = 0.0;
  for (const auto& s : series) {
    const json& r = s.report;
    Curve c;
    c.label = s.label;
    c.form = parse_law_form(r.at("best").at("form").get<std::string>());
    const auto& names = param_names(c.form);
    c.params.resize(static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i)
      c.params[static_cast<Eigen::Index>(i)] = r.at("best").at("params").at(names[i]).get<double>();
    c.flop_constant = r.at("config").at("counting").at("flop_constant").get<double>();
    if (r["best"]["objective"].is_number()) c.objective = r["best"]["objective"].get<double>();
    curves.push_back(c);
    const auto& range = r.at("data").at("c_range");
    c_lo = std::min(c_lo, range[0].get<double>());
    c_hi = std::max(c_hi, range[1].get<double>());
    for (const auto& ref : r.at("config").at("report").at("reference_points")) {
      refs.emplace(ref["label"].get<std::string>(), ref);
      c_lo = std::min(c_lo, ref["c"].get<double>());
      c_hi = std::max(c_hi, ref["c"].get<double>());
    }
  }
  const double x0 = c_range ? std::log10(c_range->first) : std::floor(std::log10(c_lo)) - 1.0;
  const double x1 = c_range ? std::log10(c_range->second) : std::ceil(std::log10(c_hi)) + 1.0;

  std::size_t best = 0;
  for (std::size_t i = 1; i < curves.size(); ++i)
    if (curves[i].objective < curves[best].objective) best = i;

  std::vector<std::vector<std::pair<double, double>>> lines(curves.size());
  double y_lo = INFINITY, y_hi = 0.0;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    for (int i = 0; i < kSamples; ++i) {
      const double lc = x0 + (x1 - x0) * i / (kSamples - 1);
      if (auto v = evaluate(curves[k], axes, std::pow(10.0, lc))) {
        lines[k].emplace_back(lc, std::log10(*v));
        y_lo = std::min(y_lo, *v);
        y_hi = std::max(y_hi, *v);
      }
    }
  }
  for (const auto& [_, ref] : refs)
    if (auto v = reference_value(axes, ref)) {
      y_lo = std::min(y_lo, *v);
      y_hi = std::max(y_hi, *v);
    }
  if (!(y_hi > 0.0)) y_lo = 1.0, y_hi = 10.0;
  double yl0 = std::floor(std::log10(y_lo)), yl1 = std::ceil(std::log10(y_hi));
  if (yl1 <= yl0) yl0 -= 1.0, yl1 += 1.0;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double lc) { return kLeft + (lc - x0) / (x1 - x0) * pw; };
  auto py = [&](double ly) { return kTop + (yl1 - ly) / (yl1 - yl0) * ph; };

  const char* y_name = axes == PlotAxes::c_vs_n ? "N_opt (parameters)"
                       : axes == PlotAxes::c_vs_d ? "D_opt (tokens)"
                                                  : "D_opt / N_opt";
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      kWidth, kHeight, kWidth, kHeight);
  svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"black\"/>\n",
                     kLeft, kTop, pw, ph);

  const int xstep = std::max(1, static_cast<int>(std::ceil((x1 - x0) / 12.0)));
  for (int e = static_cast<int>(x0); e <= static_cast<int>(x1); e += xstep) {
    svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#dddddd\"/>\n",
                       px(e), kTop, kTop + ph);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">1e{}</text>\n", px(e),
                       kTop + ph + 16, e);
  }
  const int ystep = std::max(1, static_cast<int>(std::ceil((yl1 - yl0) / 10.0)));
  for (int e = static_cast<int>(yl0); e <= static_cast<int>(yl1); e += ystep) {
    svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#dddddd\"/>\n",
                       kLeft, py(e), kLeft + pw);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">1e{}</text>\n", kLeft - 6, py(e) + 4, e);
  }
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">C (FLOPs)</text>\n", kLeft + pw / 2,
                     kHeight - 18);
  svg += fmt::format("<text x=\"18\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2f})\">{}</text>\n",
                     kTop + ph / 2, kTop + ph / 2, y_name);

  for (std::size_t k = 0; k < curves.size(); ++k) {
    if (lines[k].empty()) continue;
    std::string pts;
    for (const auto& [lc, ly] : lines[k]) pts += fmt::format("{:.2f},{:.2f} ", px(lc), py(ly));
    pts.pop_back();
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" points=\"{}\"/>\n",
                       kPalette[k % std::size(kPalette)], k == best ? "3" : "1.2", pts);
  }

  // reference compute lines, markers and min/max annotations
  for (const auto& [label, ref] : refs) {
    const double lc = std::log10(ref["c"].get<double>());
    svg += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#888888\" stroke-dasharray=\"4 3\"/>\n",
        px(lc), kTop, kTop + ph);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", px(lc), kTop - 6,
                       esc(label));
    if (auto v = reference_value(axes, ref)) {
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"black\"/>\n", px(lc), py(std::log10(*v)));
      svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", px(lc) + 6, py(std::log10(*v)) - 6,
                         esc(label));
    }
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& c : curves)
      if (auto v = evaluate(c, axes, ref["c"].get<double>())) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
    if (std::isfinite(lo)) {
      svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\">min {}</text>\n", px(lc) + 4,
                         py(std::log10(lo)) + 14, short_num(lo));
      svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\">max {}</text>\n", px(lc) + 4,
                         py(std::log10(hi)) - 14, short_num(hi));
    }
  }

  // legend
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const double y = kTop + 14 + 18 * static_cast<double>(k);
    svg += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"{}\"/>\n",
                       kLeft + pw + 14, y, kLeft + pw + 40, y, kPalette[k % std::size(kPalette)],
                       k == best ? "3" : "1.2");
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", kLeft + pw + 46, y + 4,
                       esc(curves[k].label + (k == best ? " (lowest objective)" : "")));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace lawlab
