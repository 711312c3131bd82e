#include "carmine/render.hpp"

#include "carmine/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace carmine {

namespace {

std::string fmt2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
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

std::string svg_open(double width, double height) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt2(width)
      << "\" height=\"" << fmt2(height) << "\" viewBox=\"0 0 " << fmt2(width) << " "
      << fmt2(height) << "\">\n";
  return out.str();
}

void emit_title(std::ostringstream& out, const std::string& title, double width) {
  if (title.empty()) return;
  out << "  <text class=\"title\" x=\"" << fmt2(width / 2)
      << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";
}

// Fixed palette for overlay label colours, assigned to the distinct labels in
// lexicographic order.
const char* overlay_palette(std::size_t index) {
  static const char* colours[] = {"#1a9641", "#0571b0", "#fdae61", "#d7191c",
                                  "#7b3294", "#636363", "#e66101", "#018571"};
  return colours[index % (sizeof(colours) / sizeof(colours[0]))];
}

}  // namespace

std::array<int, 3> ColorScale::rgb(double t) const {
  if (anchors.size() < 2) throw Error("colour scale needs at least two anchors");
  t = std::clamp(t, 0.0, 1.0);
  if (reversed) t = 1.0 - t;
  std::size_t hi = 1;
  while (hi + 1 < anchors.size() && anchors[hi].t < t) ++hi;
  const Anchor& a = anchors[hi - 1];
  const Anchor& b = anchors[hi];
  const double span = b.t - a.t;
  const double f = span > 0 ? std::clamp((t - a.t) / span, 0.0, 1.0) : 0.0;
  const auto mix = [f](int x, int y) {
    return static_cast<int>(std::lround(static_cast<double>(x) + f * (y - x)));
  };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

std::string ColorScale::css(double t) const {
  const auto c = rgb(t);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

ColorScale ColorScale::blue_red() {
  return {{{0.0, 49, 54, 149}, {0.5, 255, 255, 191}, {1.0, 165, 0, 38}}, false};
}

ColorScale ColorScale::white_dark() {
  return {{{0.0, 255, 255, 255}, {1.0, 45, 45, 45}}, false};
}

std::string render_node_map(const Eigen::VectorXd& values, int rows, int cols,
                            const ColorScale& scale, const MapOverlay* overlay,
                            const std::string& title, const NodeMapStyle& style) {
  if (values.size() != static_cast<Eigen::Index>(rows) * cols)
    throw Error("node map: " + std::to_string(values.size()) + " values for a " +
                std::to_string(rows) + "x" + std::to_string(cols) + " grid");
  if (overlay && overlay->per_node.size() != static_cast<std::size_t>(rows) * cols)
    throw Error("node map: overlay node count mismatch");

  const double width = 2 * style.margin + cols * style.cell;
  const double height = 2 * style.margin + rows * style.cell;
  const double vmin = values.minCoeff();
  const double vmax = values.maxCoeff();
  const bool flat = !(vmax > vmin);

  std::map<std::string, std::size_t> label_colour;
  if (overlay) {
    std::set<std::string> labels;
    for (const auto& node : overlay->per_node) {
      for (const auto& [id, label] : node) {
        (void)id;
        if (!label.empty()) labels.insert(label);
      }
    }
    std::size_t i = 0;
    for (const auto& label : labels) label_colour[label] = i++;
  }

  std::ostringstream out;
  out << svg_open(width, height);
  emit_title(out, title, width);

  for (int node = 1; node <= rows * cols; ++node) {
    const int grid_row = (node - 1) / cols;  // counted from the bottom
    const int grid_col = (node - 1) % cols;
    const double x = style.margin + grid_col * style.cell;
    const double y = style.margin + (rows - 1 - grid_row) * style.cell;
    const double v = values(node - 1);
    const double t = flat ? 0.5 : (v - vmin) / (vmax - vmin);
    out << "  <rect class=\"node\" x=\"" << fmt2(x) << "\" y=\"" << fmt2(y) << "\" width=\""
        << fmt2(style.cell) << "\" height=\"" << fmt2(style.cell) << "\" fill=\"" << scale.css(t)
        << "\" stroke=\"#555555\" stroke-width=\"0.5\"/>\n";
    out << "  <text class=\"nodeindex\" x=\"" << fmt2(x + style.cell - 3) << "\" y=\""
        << fmt2(y + style.cell - 3)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"7\" fill=\"#777777\">"
        << node << "</text>\n";

    if (!overlay) continue;
    const auto& entries = overlay->per_node[static_cast<std::size_t>(node - 1)];
    const double line_height = (style.cell - 12.0) / style.label_lines;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const int line = static_cast<int>(i) % style.label_lines;
      const int column = (static_cast<int>(i) / style.label_lines) % 2;
      const double lx = x + 3 + column * (style.cell / 2);
      const double ly = y + 10 + line * line_height;
      const auto& [id, label] = entries[i];
      const char* colour =
          label.empty() ? "#222222" : overlay_palette(label_colour.at(label));
      out << "  <text class=\"lbl\" x=\"" << fmt2(lx) << "\" y=\"" << fmt2(ly)
          << "\" font-family=\"sans-serif\" font-size=\"" << fmt2(style.label_font)
          << "\" fill=\"" << colour << "\">" << xml_escape(id) << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_histogram(const std::vector<std::pair<std::string, std::int64_t>>& bars,
                             const std::string& title, const HistogramStyle& style) {
  const std::size_t n = bars.size();
  const double plot_width =
      n > 0 ? n * style.bar_width + (n - 1) * style.gap : 2 * style.bar_width;
  const double width = 2 * style.margin + plot_width;
  const double height = 2 * style.margin + style.height;

  std::int64_t max_count = 0;
  for (const auto& [label, count] : bars) {
    (void)label;
    max_count = std::max(max_count, count);
  }

  std::ostringstream out;
  out << svg_open(width, height);
  emit_title(out, title, width);

  const double base_y = style.margin + style.height;
  out << "  <line class=\"axis\" x1=\"" << fmt2(style.margin - 6) << "\" y1=\"" << fmt2(base_y)
      << "\" x2=\"" << fmt2(width - style.margin + 6) << "\" y2=\"" << fmt2(base_y)
      << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
  out << "  <line class=\"axis\" x1=\"" << fmt2(style.margin - 6) << "\" y1=\""
      << fmt2(style.margin) << "\" x2=\"" << fmt2(style.margin - 6) << "\" y2=\"" << fmt2(base_y)
      << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";

  for (std::size_t i = 0; i < n; ++i) {
    const auto& [label, count] = bars[i];
    const double x = style.margin + i * (style.bar_width + style.gap);
    const double h =
        max_count > 0 ? style.height * static_cast<double>(count) / static_cast<double>(max_count)
                      : 0.0;
    out << "  <rect class=\"bar\" x=\"" << fmt2(x) << "\" y=\"" << fmt2(base_y - h)
        << "\" width=\"" << fmt2(style.bar_width) << "\" height=\"" << fmt2(h)
        << "\" fill=\"#4878a8\"/>\n";
    out << "  <text class=\"count\" x=\"" << fmt2(x + style.bar_width / 2) << "\" y=\""
        << fmt2(base_y - h - 4)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << count
        << "</text>\n";
    out << "  <text class=\"barlabel\" x=\"" << fmt2(x + style.bar_width / 2) << "\" y=\""
        << fmt2(base_y + 14)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << xml_escape(label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_rule_graph(const std::vector<ClassRule>& rules,
                              const ItemDictionary& dictionary, const std::string& title,
                              const RuleGraphStyle& style) {
  // Outer ring: distinct items, alphabetical by display name.
  std::set<std::string> names;
  std::map<std::string, int> name_to_id;
  for (const auto& rule : rules) {
    for (const int id : rule.antecedent) {
      names.insert(dictionary.display(id));
      name_to_id[dictionary.display(id)] = id;
    }
    names.insert(dictionary.display(rule.consequent));
    name_to_id[dictionary.display(rule.consequent)] = rule.consequent;
  }

  const double cx = style.width / 2;
  const double cy = style.height / 2;
  const double outer_r = std::min(style.width, style.height) / 2 - 110;
  const double inner_r = outer_r * 0.45;

  std::map<int, std::pair<double, double>> item_pos;
  {
    std::size_t i = 0;
    for (const auto& name : names) {
      const double angle = -std::numbers::pi / 2 + 2 * std::numbers::pi * static_cast<double>(i) /
                                           static_cast<double>(names.size());
      item_pos[name_to_id.at(name)] = {cx + outer_r * std::cos(angle),
                                       cy + outer_r * std::sin(angle)};
      ++i;
    }
  }

  std::vector<std::pair<double, double>> rule_pos(rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const double angle =
        -std::numbers::pi / 2 + 2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(rules.size(), 1));
    rule_pos[i] = {cx + inner_r * std::cos(angle), cy + inner_r * std::sin(angle)};
  }

  // Dense rank of lift drives the radius; min-max confidence the fill.
  std::vector<double> lifts;
  for (const auto& rule : rules) lifts.push_back(rule.lift);
  std::sort(lifts.begin(), lifts.end());
  lifts.erase(std::unique(lifts.begin(), lifts.end()), lifts.end());
  const double rank_denom = static_cast<double>(std::max<std::size_t>(lifts.size(), 2) - 1);

  double cmin = 0, cmax = 0;
  if (!rules.empty()) {
    cmin = cmax = rules.front().confidence;
    for (const auto& rule : rules) {
      cmin = std::min(cmin, rule.confidence);
      cmax = std::max(cmax, rule.confidence);
    }
  }
  const ColorScale fill{{{0.0, 255, 214, 214}, {1.0, 153, 0, 0}}, false};

  std::ostringstream out;
  out << svg_open(style.width, style.height);
  emit_title(out, title, style.width);

  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& rule = rules[i];
    for (const int id : rule.antecedent) {
      const auto& [ix, iy] = item_pos.at(id);
      out << "  <line class=\"edge\" x1=\"" << fmt2(ix) << "\" y1=\"" << fmt2(iy) << "\" x2=\""
          << fmt2(rule_pos[i].first) << "\" y2=\"" << fmt2(rule_pos[i].second)
          << "\" stroke=\"#bbbbbb\" stroke-width=\"0.8\"/>\n";
    }
    const auto& [tx, ty] = item_pos.at(rule.consequent);
    out << "  <line class=\"cedge\" x1=\"" << fmt2(rule_pos[i].first) << "\" y1=\""
        << fmt2(rule_pos[i].second) << "\" x2=\"" << fmt2(tx) << "\" y2=\"" << fmt2(ty)
        << "\" stroke=\"#889988\" stroke-width=\"1.1\"/>\n";
  }

  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& rule = rules[i];
    const auto rank = static_cast<double>(
        std::lower_bound(lifts.begin(), lifts.end(), rule.lift) - lifts.begin());
    const double radius =
        style.rule_radius_min + (style.rule_radius_max - style.rule_radius_min) * rank / rank_denom;
    const double t = cmax > cmin ? (rule.confidence - cmin) / (cmax - cmin) : 0.5;
    out << "  <circle class=\"rule\" cx=\"" << fmt2(rule_pos[i].first) << "\" cy=\""
        << fmt2(rule_pos[i].second) << "\" r=\"" << fmt2(radius) << "\" fill=\"" << fill.css(t)
        << "\" stroke=\"#802020\" stroke-width=\"0.8\"/>\n";
  }

  for (const auto& name : names) {
    const auto& [ix, iy] = item_pos.at(name_to_id.at(name));
    out << "  <circle class=\"item\" cx=\"" << fmt2(ix) << "\" cy=\"" << fmt2(iy) << "\" r=\""
        << fmt2(style.item_radius)
        << "\" fill=\"#7fbf7b\" stroke=\"#2d6a2d\" stroke-width=\"0.8\"/>\n";
    const double label_x = ix + (ix >= cx ? style.item_radius + 4 : -(style.item_radius + 4));
    out << "  <text class=\"itemlabel\" x=\"" << fmt2(label_x) << "\" y=\"" << fmt2(iy + 3)
        << "\" text-anchor=\"" << (ix >= cx ? "start" : "end")
        << "\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(name) << "</text>\n";
  }

  out << "</svg>\n";
  return out.str();
}

}  // namespace carmine
