#include "avfm/taxonomy.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <functional>
#include <map>

#include "avfm/errors.hpp"
#include "avfm/io_util.hpp"

namespace avfm {

namespace {
using nlohmann::json;
}

TaxonomyGraph::TaxonomyGraph(std::vector<std::string> nodes,
                             std::vector<std::pair<std::string, std::string>> child_parent_edges,
                             std::unordered_map<std::string, std::string> class_anchors)
    : nodes_(std::move(nodes)) {
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i], static_cast<int>(i)).second)
      throw ValidationError("taxonomy: duplicate node " + nodes_[i]);
  }
  parents_.resize(nodes_.size());
  for (const auto& [child, parent] : child_parent_edges) {
    parents_[static_cast<size_t>(node_index(child))].push_back(node_index(parent));
  }
  for (auto& p : parents_) {
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
  }
  for (const auto& [cls, node] : class_anchors) anchors_.emplace(cls, node_index(node));

  // Cycle detection + longest root distance in one DFS.
  depth_.assign(nodes_.size(), -1);
  std::vector<int> state(nodes_.size(), 0);  // 0 new, 1 on stack, 2 done
  std::function<int(int)> visit = [&](int n) -> int {
    if (state[static_cast<size_t>(n)] == 1)
      throw ValidationError("taxonomy: cycle through node " + nodes_[static_cast<size_t>(n)]);
    if (state[static_cast<size_t>(n)] == 2) return depth_[static_cast<size_t>(n)];
    state[static_cast<size_t>(n)] = 1;
    int d = 0;
    for (int p : parents_[static_cast<size_t>(n)]) d = std::max(d, 1 + visit(p));
    state[static_cast<size_t>(n)] = 2;
    depth_[static_cast<size_t>(n)] = d;
    return d;
  };
  for (size_t n = 0; n < nodes_.size(); ++n) visit(static_cast<int>(n));
}

bool TaxonomyGraph::has_node(const std::string& name) const { return index_.count(name) > 0; }

int TaxonomyGraph::node_index(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("taxonomy: unknown node " + name);
  return it->second;
}

int TaxonomyGraph::anchor_of(const std::string& class_name) const {
  const auto it = anchors_.find(class_name);
  if (it == anchors_.end()) throw ValidationError("taxonomy: class has no anchor: " + class_name);
  return it->second;
}

std::vector<std::string> TaxonomyGraph::class_names() const {
  std::vector<std::string> names;
  names.reserve(anchors_.size());
  for (const auto& [cls, _] : anchors_) names.push_back(cls);
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<int> TaxonomyGraph::up_closure(int node) const {
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<int> stack{node}, out;
  seen[static_cast<size_t>(node)] = true;
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    out.push_back(n);
    for (int p : parents_[static_cast<size_t>(n)]) {
      if (!seen[static_cast<size_t>(p)]) {
        seen[static_cast<size_t>(p)] = true;
        stack.push_back(p);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool TaxonomyGraph::is_ancestor_or_self(int ancestor, int node) const {
  const auto up = up_closure(node);
  return std::binary_search(up.begin(), up.end(), ancestor);
}

int TaxonomyGraph::depth(int node) const { return depth_.at(static_cast<size_t>(node)); }

double coverage(const TaxonomyGraph& graph, const std::string& node,
                const std::vector<std::string>& classes) {
  if (classes.empty()) throw ValidationError("coverage: empty class list");
  const int target = graph.node_index(node);
  int covered = 0;
  for (const std::string& cls : classes) {
    if (graph.is_ancestor_or_self(target, graph.anchor_of(cls))) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(classes.size());
}

SuperClassGrouping group_superclasses(const TaxonomyGraph& graph,
                                      const std::vector<std::string>& classes, double p_min,
                                      double p_max) {
  if (!(0.0 < p_min && p_min <= p_max && p_max <= 1.0))
    throw ValidationError("grouping thresholds need 0 < p_min <= p_max <= 1");
  if (classes.empty()) throw ValidationError("grouping: empty class list");

  // Coverage counts for every node touched by some anchor's closure.
  std::vector<int> covered(graph.nodes().size(), 0);
  std::vector<std::vector<int>> closures;
  closures.reserve(classes.size());
  for (const std::string& cls : classes) {
    closures.push_back(graph.up_closure(graph.anchor_of(cls)));
    for (int n : closures.back()) ++covered[static_cast<size_t>(n)];
  }
  const double total = static_cast<double>(classes.size());

  std::map<std::string, std::vector<std::string>> groups;
  std::vector<std::string> residual;
  for (size_t i = 0; i < classes.size(); ++i) {
    int best = -1;
    for (int candidate : closures[i]) {
      const double cov = covered[static_cast<size_t>(candidate)] / total;
      if (cov < p_min || cov > p_max) continue;
      if (best == -1 || graph.depth(candidate) > graph.depth(best) ||
          (graph.depth(candidate) == graph.depth(best) &&
           graph.nodes()[static_cast<size_t>(candidate)] < graph.nodes()[static_cast<size_t>(best)]))
        best = candidate;
    }
    if (best == -1)
      residual.push_back(classes[i]);
    else
      groups[graph.nodes()[static_cast<size_t>(best)]].push_back(classes[i]);
  }

  SuperClassGrouping grouping;
  for (auto& [name, members] : groups) {
    std::sort(members.begin(), members.end());
    grouping.groups.push_back({name, std::move(members)});
  }
  std::sort(residual.begin(), residual.end());
  grouping.residual = std::move(residual);
  return grouping;
}

std::vector<int> remap_labels(const SuperClassGrouping& grouping,
                              const std::vector<std::string>& labels) {
  std::unordered_map<std::string, int> target;
  for (size_t g = 0; g < grouping.groups.size(); ++g) {
    for (const std::string& member : grouping.groups[g].members)
      target[member] = static_cast<int>(g);
  }
  for (const std::string& cls : grouping.residual) target[cls] = grouping.ignore_index();

  std::vector<int> out;
  out.reserve(labels.size());
  for (const std::string& label : labels) {
    const auto it = target.find(label);
    if (it == target.end()) throw ValidationError("remap: unknown label " + label);
    out.push_back(it->second);
  }
  return out;
}

TaxonomyGraph taxonomy_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("taxonomy JSON: ") + e.what());
  }
  try {
    std::vector<std::string> nodes = j.at("nodes").get<std::vector<std::string>>();
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2)
        throw ValidationError("taxonomy: each edge must be [child, parent]");
      edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    std::unordered_map<std::string, std::string> anchors;
    for (const auto& [cls, node] : j.at("anchors").items())
      anchors[cls] = node.get<std::string>();
    return TaxonomyGraph(std::move(nodes), std::move(edges), std::move(anchors));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("taxonomy JSON: ") + e.what());
  }
}

TaxonomyGraph load_taxonomy(const std::string& path) {
  return taxonomy_from_json(read_file(path));
}

std::string grouping_to_json(const SuperClassGrouping& grouping) {
  json j;
  j["groups"] = json::array();
  for (const SuperClassGroup& g : grouping.groups)
    j["groups"].push_back({{"name", g.name}, {"members", g.members}});
  j["residual"] = grouping.residual;
  return j.dump(2) + "\n";
}

SuperClassGrouping grouping_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
    SuperClassGrouping grouping;
    for (const auto& g : j.at("groups")) {
      grouping.groups.push_back(
          {g.at("name").get<std::string>(), g.at("members").get<std::vector<std::string>>()});
    }
    grouping.residual = j.at("residual").get<std::vector<std::string>>();
    return grouping;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("grouping JSON: ") + e.what());
  }
}

SuperClassGrouping load_grouping(const std::string& path) {
  return grouping_from_json(read_file(path));
}

}  // namespace avfm
