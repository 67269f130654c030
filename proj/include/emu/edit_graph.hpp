#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "emu/geometry.hpp"
#include "emu/types.hpp"

namespace emu {

// Region pairs are linked when they are "notationally similar". The three
// cases, in priority order: both regions are subjects, both carry the same
// edit label (none excluded), or their boxes overlap at least tau.
enum class EdgeRule { both_subjects, same_label, overlap };

inline const char* to_string(EdgeRule r) {
  switch (r) {
    case EdgeRule::both_subjects: return "both_subjects";
    case EdgeRule::same_label: return "same_label";
    case EdgeRule::overlap: return "overlap";
  }
  throw std::logic_error("unknown EdgeRule");
}

struct GraphEdge {
  int from = 0;  // region index values, not list positions
  int to = 0;
  EdgeRule rule = EdgeRule::overlap;

  bool operator==(const GraphEdge&) const = default;
};

// Rooted DAG over the edited image's regions. Construction (build_graph)
// only ever links to unseen regions, so the result is a tree and acyclic by
// construction; the struct itself also admits hand-built general DAGs.
struct EditGraph {
  std::vector<Region> nodes;
  int seed = 0;                  // region index of the root
  std::vector<GraphEdge> edges;  // in insertion order

  bool operator==(const EditGraph&) const = default;
};

// Topological position per region index; regions absent from the map were
// unreachable from the seed and embed as the zero vector downstream.
struct PriorityAssignment {
  std::map<int, int> reachable;  // region index -> topo position (seed = 0)

  std::optional<int> position_of(int region_index) const {
    auto it = reachable.find(region_index);
    if (it == reachable.end()) return std::nullopt;
    return it->second;
  }

  size_t reachable_count() const { return reachable.size(); }

  bool operator==(const PriorityAssignment&) const = default;
};

// Graphs are kept desk-scale; larger detector outputs are truncated first
// (cap_regions).
inline constexpr size_t kMaxGraphRegions = 64;

// Keep the kMaxGraphRegions largest regions by box area (ties: lower index),
// preserving ascending index order in the result.
inline std::vector<Region> cap_regions(std::vector<Region> regions, size_t cap = kMaxGraphRegions) {
  if (regions.size() <= cap) return regions;
  std::vector<Region> sorted = regions;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Region& a, const Region& b) {
    if (a.box.area() != b.box.area()) return a.box.area() > b.box.area();
    return a.index < b.index;
  });
  sorted.resize(cap);
  std::sort(sorted.begin(), sorted.end(),
            [](const Region& a, const Region& b) { return a.index < b.index; });
  return sorted;
}

// Seed choice: the question's subject when present, else the lowest-index
// subject, else the lowest-index edited region, else region 0 of the list.
inline int select_seed(const std::vector<Region>& regions, const Question& question) {
  if (regions.empty()) throw std::invalid_argument("select_seed: no regions");
  if (question.subject_index.has_value()) return *question.subject_index;

  const Region* best = nullptr;
  for (const Region& r : regions)
    if (r.is_subject && (!best || r.index < best->index)) best = &r;
  if (best) return best->index;

  for (const Region& r : regions)
    if (r.edit_label != EditLabel::none && (!best || r.index < best->index)) best = &r;
  if (best) return best->index;

  best = &regions.front();
  for (const Region& r : regions)
    if (r.index < best->index) best = &r;
  return best->index;
}

// First matching rule in priority order, nullopt when none matches.
inline std::optional<EdgeRule> notationally_similar(const Region& u, const Region& v,
                                                    const OverlapConfig& cfg) {
  if (u.is_subject && v.is_subject) return EdgeRule::both_subjects;
  if (u.edit_label != EditLabel::none && u.edit_label == v.edit_label) return EdgeRule::same_label;
  if (overlaps(u.box, v.box, cfg)) return EdgeRule::overlap;
  return std::nullopt;
}

// Breadth-first construction from the seed. Each dequeued region considers
// only unvisited regions as targets, ordered by rule priority, then
// descending overlap, then ascending index; at most 3 outgoing edges.
// Targets become visited when their edge is added, so the result is a tree.
inline EditGraph build_graph(const std::vector<Region>& regions, int seed_index,
                             const OverlapConfig& cfg) {
  cfg.validate();
  if (regions.size() > kMaxGraphRegions)
    throw std::invalid_argument("build_graph: more than " + std::to_string(kMaxGraphRegions) +
                                " regions; apply cap_regions first");

  int seed_pos = -1;
  for (size_t i = 0; i < regions.size(); ++i)
    if (regions[i].index == seed_index) seed_pos = static_cast<int>(i);
  if (seed_pos < 0) throw std::invalid_argument("build_graph: seed region not found");

  EditGraph g;
  g.nodes = regions;
  g.seed = seed_index;

  std::vector<bool> visited(regions.size(), false);
  visited[seed_pos] = true;
  std::deque<int> frontier{seed_pos};

  struct Candidate {
    int pos;
    EdgeRule rule;
    double overlap;
  };

  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop_front();

    std::vector<Candidate> cands;
    for (size_t v = 0; v < regions.size(); ++v) {
      if (visited[v]) continue;
      auto rule = notationally_similar(regions[u], regions[v], cfg);
      if (!rule) continue;
      cands.push_back({static_cast<int>(v), *rule, effective_overlap(regions[u].box, regions[v].box, cfg)});
    }
    std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.rule != b.rule) return static_cast<int>(a.rule) < static_cast<int>(b.rule);
      if (a.overlap != b.overlap) return a.overlap > b.overlap;
      return regions[a.pos].index < regions[b.pos].index;
    });

    size_t take = std::min<size_t>(3, cands.size());
    for (size_t i = 0; i < take; ++i) {
      const Candidate& c = cands[i];
      g.edges.push_back({regions[u].index, regions[c.pos].index, c.rule});
      visited[c.pos] = true;
      frontier.push_back(c.pos);
    }
  }
  return g;
}

// Kahn's algorithm restricted to the subgraph reachable from the seed,
// processing edges in insertion order. A cycle indicates a construction bug
// and is reported as an internal invariant failure.
inline std::vector<int> topo_sort(const EditGraph& g) {
  std::map<int, std::vector<int>> out_edges;  // index -> targets, insertion order
  for (const GraphEdge& e : g.edges) out_edges[e.from].push_back(e.to);

  // Reachable set from the seed.
  std::map<int, bool> reachable;
  std::deque<int> work{g.seed};
  reachable[g.seed] = true;
  while (!work.empty()) {
    int u = work.front();
    work.pop_front();
    auto it = out_edges.find(u);
    if (it == out_edges.end()) continue;
    for (int v : it->second) {
      if (!reachable.count(v)) {
        reachable[v] = true;
        work.push_back(v);
      }
    }
  }

  std::map<int, int> in_degree;
  for (auto& [u, _] : reachable) in_degree[u] = 0;
  for (const GraphEdge& e : g.edges)
    if (reachable.count(e.from) && reachable.count(e.to)) ++in_degree[e.to];

  if (in_degree[g.seed] != 0)
    throw std::logic_error("topo_sort: cycle through seed region " + std::to_string(g.seed));

  std::vector<int> order;
  std::deque<int> queue{g.seed};
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    order.push_back(u);
    auto it = out_edges.find(u);
    if (it == out_edges.end()) continue;
    for (int v : it->second) {
      if (!reachable.count(v)) continue;
      if (--in_degree[v] == 0) queue.push_back(v);
    }
  }

  if (order.size() != reachable.size())
    throw std::logic_error("topo_sort: cycle detected among regions reachable from seed");
  return order;
}

inline PriorityAssignment priority_indices(const EditGraph& g) {
  PriorityAssignment pa;
  std::vector<int> order = topo_sort(g);
  for (size_t i = 0; i < order.size(); ++i) pa.reachable[order[i]] = static_cast<int>(i);
  return pa;
}

}  // namespace emu
