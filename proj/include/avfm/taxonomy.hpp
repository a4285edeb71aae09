#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace avfm {

// Hypernym DAG: child -> parents edges, plus an anchor node per dataset
// class. Acyclic by construction (checked on load/build).
class TaxonomyGraph {
 public:
  TaxonomyGraph(std::vector<std::string> nodes,
                std::vector<std::pair<std::string, std::string>> child_parent_edges,
                std::unordered_map<std::string, std::string> class_anchors);

  const std::vector<std::string>& nodes() const { return nodes_; }
  bool has_node(const std::string& name) const;
  int node_index(const std::string& name) const;

  const std::vector<int>& parents(int node) const { return parents_[node]; }
  int anchor_of(const std::string& class_name) const;
  std::vector<std::string> class_names() const;

  // Ancestor-or-self closure, as node indices.
  std::vector<int> up_closure(int node) const;
  bool is_ancestor_or_self(int ancestor, int node) const;

  // Longest root-to-node distance; roots are 0.
  int depth(int node) const;

 private:
  std::vector<std::string> nodes_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::vector<int>> parents_;
  std::unordered_map<std::string, int> anchors_;
  std::vector<int> depth_;
};

struct SuperClassGroup {
  std::string name;                   // super-class node
  std::vector<std::string> members;   // dataset classes, sorted
};

struct SuperClassGrouping {
  std::vector<SuperClassGroup> groups;  // sorted by name
  std::vector<std::string> residual;    // classes with no qualifying ancestor

  // Residual labels remap to this index.
  int ignore_index() const { return static_cast<int>(groups.size()); }
};

// Fraction of `classes` whose anchor lies at or below `node`.
double coverage(const TaxonomyGraph& graph, const std::string& node,
                const std::vector<std::string>& classes);

// Per class, the deepest ancestor-or-self of its anchor with coverage in
// [p_min, p_max]; depth ties break lexicographically; classes with no
// qualifying ancestor land in the residual.
SuperClassGrouping group_superclasses(const TaxonomyGraph& graph,
                                      const std::vector<std::string>& classes,
                                      double p_min = 0.05, double p_max = 0.40);

// Class label -> group index; residual -> grouping.ignore_index().
// Unknown labels throw.
std::vector<int> remap_labels(const SuperClassGrouping& grouping,
                              const std::vector<std::string>& labels);

// Taxonomy file: {nodes:[...], edges:[[child,parent],...], anchors:{class:node}}
TaxonomyGraph load_taxonomy(const std::string& path);
TaxonomyGraph taxonomy_from_json(const std::string& text);

// Grouping file: {groups:[{name, members:[...]}], residual:[...]}
std::string grouping_to_json(const SuperClassGrouping& grouping);
SuperClassGrouping grouping_from_json(const std::string& text);
SuperClassGrouping load_grouping(const std::string& path);

}  // namespace avfm
