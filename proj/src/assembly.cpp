#include "doclayout/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include <nlohmann/json.hpp>

#include "doclayout/errors.hpp"
#include "doclayout/geometry.hpp"

namespace doclayout {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

TableCells rectangularize(std::vector<std::vector<std::string>> rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.size());
  for (auto& r : rows) r.resize(width);
  return TableCells{std::move(rows)};
}

namespace {

bool accepts_child(ClassLabel parent, ClassLabel child) {
  if (child == ClassLabel::kCaption) return is_group(parent);
  if (parent == ClassLabel::kImageCaption) return child == ClassLabel::kImage;
  if (parent == ClassLabel::kTableCaption) return child == ClassLabel::kTable;
  return false;
}

// Total order used within a column; input index comes last.
auto position_key(const LayoutComponent& c, std::size_t index) {
  return std::make_tuple(c.bbox.y1(), c.bbox.x1(), c.bbox.y2(), c.bbox.x2(), class_id(c.label),
                         -c.score, index);
}

void sort_by_position(std::vector<std::size_t>& idx, const std::vector<LayoutComponent>& comps) {
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return position_key(comps[a], a) < position_key(comps[b], b);
  });
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Orders one band (no spanning boxes) column by column.
void order_band(std::vector<std::size_t> band, const std::vector<LayoutComponent>& comps,
                double page_width, const ReadingOrderConfig& cfg, std::vector<std::size_t>& out) {
  if (band.empty()) return;
  DisjointSets sets(band.size());
  for (std::size_t i = 0; i < band.size(); ++i) {
    for (std::size_t j = i + 1; j < band.size(); ++j) {
      const auto& a = comps[band[i]].bbox;
      const auto& b = comps[band[j]].bbox;
      const double narrow = std::min(a.width(), b.width());
      const double overlap = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
      if (narrow > 0 && overlap / narrow >= cfg.column_overlap) sets.unite(i, j);
    }
  }

  struct Cluster {
    double lo, hi;
    std::vector<std::size_t> members;  // positions in `band`
  };
  std::vector<Cluster> clusters;
  std::vector<std::size_t> slot(band.size(), static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < band.size(); ++i) {
    const std::size_t root = sets.find(i);
    if (slot[root] == static_cast<std::size_t>(-1)) {
      slot[root] = clusters.size();
      clusters.push_back({comps[band[i]].bbox.x1(), comps[band[i]].bbox.x2(), {}});
    }
    auto& c = clusters[slot[root]];
    c.lo = std::min(c.lo, comps[band[i]].bbox.x1());
    c.hi = std::max(c.hi, comps[band[i]].bbox.x2());
    c.members.push_back(i);
  }
  std::sort(clusters.begin(), clusters.end(), [&](const Cluster& a, const Cluster& b) {
    return std::tie(a.lo, a.hi, a.members.front()) < std::tie(b.lo, b.hi, b.members.front());
  });

  std::vector<Cluster> columns;
  for (auto& c : clusters) {
    if (!columns.empty() && c.lo - columns.back().hi <= cfg.column_gap * page_width) {
      auto& last = columns.back();
      last.hi = std::max(last.hi, c.hi);
      last.members.insert(last.members.end(), c.members.begin(), c.members.end());
    } else {
      columns.push_back(std::move(c));
    }
  }

  for (const auto& col : columns) {
    std::vector<std::size_t> idx;
    for (const std::size_t m : col.members) idx.push_back(band[m]);
    sort_by_position(idx, comps);
    out.insert(out.end(), idx.begin(), idx.end());
  }
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

ordered_json component_json(const LayoutComponent& c) {
  ordered_json o;
  o["bbox"] = {round2(c.bbox.x1()), round2(c.bbox.y1()), round2(c.bbox.x2()), round2(c.bbox.y2())};
  o["class"] = std::string(name_of(c.label));
  o["score"] = c.score;
  if (const auto* text = std::get_if<std::string>(&c.data)) {
    o["data"] = *text;
  } else if (const auto* table = std::get_if<TableCells>(&c.data)) {
    o["data"] = table->rows;
  } else {
    o["data"] = nullptr;
  }
  if (c.error) o["error"] = *c.error;
  if (is_group(c.label)) {
    o["children"] = ordered_json::array();
    for (const auto& child : c.children) o["children"].push_back(component_json(child));
  }
  return o;
}

LayoutComponent component_from_json(const json& o, const std::string& path) {
  if (!o.is_object()) throw SchemaError(path, "expected an object");
  LayoutComponent c;
  const auto bbox = o.find("bbox");
  if (bbox == o.end() || !bbox->is_array() || bbox->size() != 4) {
    throw SchemaError(path + ".bbox", "expected [x1,y1,x2,y2]");
  }
  std::array<double, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(*bbox)[i].is_number()) throw SchemaError(path + ".bbox", "expected numbers");
    v[i] = (*bbox)[i].get<double>();
  }
  c.bbox = BBox(v[0], v[1], v[2], v[3]);
  const auto cls = o.find("class");
  if (cls == o.end() || !cls->is_string()) throw SchemaError(path + ".class", "expected a string");
  c.label = class_from_name(cls->get<std::string>());
  if (const auto s = o.find("score"); s != o.end()) {
    if (!s->is_number()) throw SchemaError(path + ".score", "expected a number");
    c.score = s->get<double>();
  }
  if (const auto d = o.find("data"); d != o.end() && !d->is_null()) {
    if (d->is_string()) {
      c.data = d->get<std::string>();
    } else if (d->is_array()) {
      try {
        c.data = TableCells{d->get<std::vector<std::vector<std::string>>>()};
      } catch (const json::exception&) {
        throw SchemaError(path + ".data", "expected rows of strings");
      }
    } else {
      throw SchemaError(path + ".data", "expected null, a string or rows of strings");
    }
  }
  if (const auto e = o.find("error"); e != o.end()) {
    if (!e->is_string()) throw SchemaError(path + ".error", "expected a string");
    c.error = e->get<std::string>();
  }
  if (const auto ch = o.find("children"); ch != o.end()) {
    if (!ch->is_array()) throw SchemaError(path + ".children", "expected an array");
    for (std::size_t i = 0; i < ch->size(); ++i) {
      c.children.push_back(
          component_from_json((*ch)[i], path + ".children[" + std::to_string(i) + "]"));
    }
  }
  return c;
}

}  // namespace

std::vector<LayoutComponent> group_components(std::span<const Detection> dets,
                                              double child_coverage) {
  struct Candidate {
    double cover;
    std::size_t child, parent;
  };
  std::vector<Candidate> candidates;
  for (std::size_t p = 0; p < dets.size(); ++p) {
    if (!is_group(dets[p].label)) continue;
    for (std::size_t c = 0; c < dets.size(); ++c) {
      if (!accepts_child(dets[p].label, dets[c].label)) continue;
      const double cover = coverage(dets[c].bbox, dets[p].bbox);
      if (cover >= child_coverage) candidates.push_back({cover, c, p});
    }
  }
  // Best coverage first; higher-scored children and earlier indices win ties.
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    return std::make_tuple(-a.cover, -dets[a.child].score, a.child, -dets[a.parent].score, a.parent) <
           std::make_tuple(-b.cover, -dets[b.child].score, b.child, -dets[b.parent].score, b.parent);
  });

  std::vector<std::size_t> owner(dets.size(), static_cast<std::size_t>(-1));
  std::vector<bool> has_element(dets.size(), false), has_caption(dets.size(), false);
  for (const auto& cand : candidates) {
    if (owner[cand.child] != static_cast<std::size_t>(-1)) continue;
    auto& slot = dets[cand.child].label == ClassLabel::kCaption ? has_caption : has_element;
    if (slot[cand.parent]) continue;
    slot[cand.parent] = true;
    owner[cand.child] = cand.parent;
  }

  auto make = [](const Detection& d) {
    LayoutComponent c;
    c.bbox = d.bbox;
    c.label = d.label;
    c.score = d.score;
    return c;
  };
  std::vector<LayoutComponent> out;
  std::vector<std::size_t> position(dets.size(), 0);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (owner[i] != static_cast<std::size_t>(-1)) continue;
    position[i] = out.size();
    out.push_back(make(dets[i]));
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (owner[i] == static_cast<std::size_t>(-1)) continue;
    out[position[owner[i]]].children.push_back(make(dets[i]));
  }
  for (auto& c : out) {
    std::vector<std::size_t> idx(c.children.size());
    std::iota(idx.begin(), idx.end(), 0);
    sort_by_position(idx, c.children);
    std::vector<LayoutComponent> sorted;
    for (const std::size_t k : idx) sorted.push_back(std::move(c.children[k]));
    c.children = std::move(sorted);
  }
  return out;
}

std::vector<LayoutComponent> reading_order(std::vector<LayoutComponent> components,
                                           double page_width, const ReadingOrderConfig& cfg) {
  std::vector<std::size_t> spanning, narrow;
  for (std::size_t i = 0; i < components.size(); ++i) {
    (components[i].bbox.width() > cfg.spanning_width * page_width ? spanning : narrow).push_back(i);
  }
  sort_by_position(spanning, components);

  // Band k holds narrow boxes starting at or below spanning box k-1 and
  // above spanning box k.
  std::vector<std::vector<std::size_t>> bands(spanning.size() + 1);
  for (const std::size_t i : narrow) {
    const double y = components[i].bbox.y1();
    const auto band = static_cast<std::size_t>(
        std::count_if(spanning.begin(), spanning.end(),
                      [&](std::size_t s) { return components[s].bbox.y1() <= y; }));
    bands[band].push_back(i);
  }

  std::vector<std::size_t> order;
  order.reserve(components.size());
  for (std::size_t b = 0; b < bands.size(); ++b) {
    order_band(bands[b], components, page_width, cfg, order);
    if (b < spanning.size()) order.push_back(spanning[b]);
  }

  std::vector<LayoutComponent> out;
  out.reserve(components.size());
  for (const std::size_t i : order) out.push_back(std::move(components[i]));
  return out;
}

PageLayout assemble_page(const std::string& page_id, int image_width, int image_height,
                         std::span<const Detection> dets, const AssemblyConfig& cfg) {
  PageLayout layout;
  layout.page_id = page_id;
  layout.image_width = image_width;
  layout.image_height = image_height;
  layout.components = reading_order(group_components(dets, cfg.child_coverage), image_width, cfg.order);
  return layout;
}

std::size_t count_components(std::span<const LayoutComponent> components) {
  std::size_t n = 0;
  for (const auto& c : components) n += 1 + count_components(c.children);
  return n;
}

std::string emit_layout_json(const PageLayout& layout) {
  ordered_json root;
  root["page_id"] = layout.page_id;
  root["image_width"] = layout.image_width;
  root["image_height"] = layout.image_height;
  root["components"] = ordered_json::array();
  for (const auto& c : layout.components) root["components"].push_back(component_json(c));
  return root.dump(2) + "\n";
}

PageLayout parse_layout_json(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw SchemaError("$", "expected an object");
  PageLayout layout;
  try {
    layout.page_id = root.at("page_id").get<std::string>();
    layout.image_width = root.at("image_width").get<int>();
    layout.image_height = root.at("image_height").get<int>();
  } catch (const json::exception& e) {
    throw SchemaError("$", e.what());
  }
  const auto comps = root.find("components");
  if (comps == root.end() || !comps->is_array()) {
    throw SchemaError("$.components", "expected an array");
  }
  for (std::size_t i = 0; i < comps->size(); ++i) {
    layout.components.push_back(
        component_from_json((*comps)[i], "$.components[" + std::to_string(i) + "]"));
  }
  return layout;
}

}  // namespace doclayout
