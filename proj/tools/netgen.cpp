// Emits the bundled Sioux Falls scenario: the classic 24-node / 76-link
// grid with this repository's own link parameters, six OD pairs into node
// 20, and a frozen 119-path set enumerated by k-shortest free-flow paths
// per OD (20+20+20+20+20+19).

#include <algorithm>
#include <iostream>
#include <limits>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "edue/edue.hpp"

namespace {

struct Arc {
  int from, to;
  double fft_min;  // free-flow time in minutes
};

// undirected arcs of the standard grid; each becomes two directed links
const std::vector<Arc> kArcs = {
    {1, 2, 6},   {1, 3, 4},   {2, 6, 5},   {3, 4, 4},   {3, 12, 4},  {4, 5, 2},
    {4, 11, 6},  {5, 6, 4},   {5, 9, 5},   {6, 8, 2},   {7, 8, 3},   {7, 18, 2},
    {8, 9, 10},  {8, 16, 5},  {9, 10, 3},  {10, 11, 5}, {10, 15, 6}, {10, 16, 4},
    {10, 17, 8}, {11, 12, 6}, {11, 14, 4}, {12, 13, 3}, {13, 24, 4}, {14, 15, 5},
    {14, 23, 4}, {15, 19, 3}, {15, 22, 3}, {16, 17, 2}, {16, 18, 3}, {17, 19, 2},
    {18, 20, 4}, {19, 20, 4}, {20, 21, 6}, {20, 22, 5}, {21, 22, 2}, {21, 24, 3},
    {22, 23, 4}, {23, 24, 2},
};

struct Digraph {
  int n_nodes;
  std::vector<std::vector<std::pair<int, int>>> adj;  // node -> (edge id, head)
  std::vector<double> cost;                           // per edge
  std::vector<std::pair<int, int>> ends;              // per edge (tail, head)
};

std::vector<int> dijkstra(const Digraph& g, int src, int dst, const std::set<int>& banned_edges,
                          const std::vector<bool>& banned_nodes) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(g.n_nodes, inf);
  std::vector<int> via(g.n_nodes, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[src] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == dst) break;
    for (auto [e, v] : g.adj[u]) {
      if (banned_edges.count(e) || banned_nodes[v]) continue;
      const double nd = d + g.cost[e];
      if (nd < dist[v] - 1e-15) {
        dist[v] = nd;
        via[v] = e;
        pq.push({nd, v});
      }
    }
  }
  if (via[dst] < 0 && src != dst) return {};
  std::vector<int> edges;
  for (int u = dst; u != src;) {
    const int e = via[u];
    if (e < 0) return {};
    edges.push_back(e);
    u = g.ends[e].first;
  }
  std::reverse(edges.begin(), edges.end());
  return edges;
}

double path_cost(const Digraph& g, const std::vector<int>& edges) {
  double c = 0.0;
  for (int e : edges) c += g.cost[e];
  return c;
}

// Yen's loopless k-shortest paths by free-flow time.
std::vector<std::vector<int>> k_shortest(const Digraph& g, int src, int dst, int k) {
  std::vector<std::vector<int>> result;
  std::vector<bool> no_nodes(g.n_nodes, false);
  auto first = dijkstra(g, src, dst, {}, no_nodes);
  if (first.empty()) return result;
  result.push_back(first);
  using Cand = std::pair<double, std::vector<int>>;
  auto cmp = [](const Cand& a, const Cand& b) { return a.first > b.first; };
  std::priority_queue<Cand, std::vector<Cand>, decltype(cmp)> candidates(cmp);
  std::set<std::vector<int>> seen{first};

  while (static_cast<int>(result.size()) < k) {
    const auto& prev = result.back();
    for (std::size_t i = 0; i < prev.size(); ++i) {
      // spur node = tail of edge i of the previous path
      const int spur = i == 0 ? src : g.ends[prev[i - 1]].second;
      std::vector<int> root(prev.begin(), prev.begin() + i);
      std::set<int> banned_edges;
      for (const auto& p : result)
        if (p.size() > i && std::equal(root.begin(), root.end(), p.begin()))
          banned_edges.insert(p[i]);
      std::vector<bool> banned_nodes(g.n_nodes, false);
      banned_nodes[src] = i > 0;
      for (std::size_t j = 0; j < i; ++j) banned_nodes[g.ends[root[j]].second] = true;
      banned_nodes[spur] = false;
      auto spur_path = dijkstra(g, spur, dst, banned_edges, banned_nodes);
      if (spur_path.empty()) continue;
      std::vector<int> total = root;
      total.insert(total.end(), spur_path.begin(), spur_path.end());
      if (seen.insert(total).second) candidates.push({path_cost(g, total), total});
    }
    if (candidates.empty()) break;
    result.push_back(candidates.top().second);
    candidates.pop();
  }
  return result;
}

}  // namespace

int main(int argc, char** argv) {
  std::string which = argc > 1 ? argv[1] : "sioux-falls";
  if (which != "sioux-falls") {
    std::cerr << "usage: edue_netgen [sioux-falls]\n";
    return 1;
  }

  const double vf = 60.0;   // km/h -> 1 km per minute of free-flow time
  const double w = 20.0;    // km/h
  const double kjam = 150.0;  // veh/km; capacity apex = kjam*vf*w/(vf+w) = 2250
  const double cap = 2000.0;  // veh/h

  Digraph g;
  g.n_nodes = 25;  // 1-based
  g.adj.resize(25);
  nlohmann::json links = nlohmann::json::array();
  for (const Arc& arc : kArcs) {
    for (int dir = 0; dir < 2; ++dir) {
      const int from = dir == 0 ? arc.from : arc.to;
      const int to = dir == 0 ? arc.to : arc.from;
      const int edge = static_cast<int>(g.cost.size());
      g.adj[from].push_back({edge, to});
      g.cost.push_back(arc.fft_min);
      g.ends.push_back({from, to});
      links.push_back({{"id", "a_" + std::to_string(from) + "_" + std::to_string(to)},
                       {"from", std::to_string(from)},
                       {"to", std::to_string(to)},
                       {"length", arc.fft_min * vf / 60.0},
                       {"free_flow_speed", vf},
                       {"backward_wave_speed", w},
                       {"jam_density", kjam},
                       {"flow_capacity", cap}});
    }
  }

  nlohmann::json nodes = nlohmann::json::array();
  for (int n = 1; n <= 24; ++n) nodes.push_back(std::to_string(n));

  const std::vector<int> origins = {1, 2, 3, 4, 5, 6};
  const int destination = 20;
  const std::vector<int> per_od = {20, 20, 20, 20, 20, 19};

  nlohmann::json od_pairs = nlohmann::json::array();
  nlohmann::json paths = nlohmann::json::array();
  int total_paths = 0;
  for (std::size_t i = 0; i < origins.size(); ++i) {
    const std::string od_id = std::to_string(origins[i]) + "-" + std::to_string(destination);
    od_pairs.push_back({{"id", od_id},
                        {"origin", std::to_string(origins[i])},
                        {"destination", std::to_string(destination)}});
    auto routes = k_shortest(g, origins[i], destination, per_od[i]);
    if (static_cast<int>(routes.size()) != per_od[i]) {
      std::cerr << "expected " << per_od[i] << " paths for OD " << od_id << ", got "
                << routes.size() << "\n";
      return 1;
    }
    for (std::size_t r = 0; r < routes.size(); ++r) {
      nlohmann::json hops = nlohmann::json::array();
      for (int e : routes[r])
        hops.push_back("a_" + std::to_string(g.ends[e].first) + "_" +
                       std::to_string(g.ends[e].second));
      paths.push_back({{"id", od_id + "#" + std::to_string(r + 1)}, {"od", od_id}, {"links", hops}});
      ++total_paths;
    }
  }

  nlohmann::json scenario{
      {"name", "sioux_falls"},
      {"grid", {{"t0", 0.0}, {"tf", 2.0}, {"n_steps", 120}}},
      {"nodes", nodes},
      {"links", links},
      {"od_pairs", od_pairs},
      {"paths", paths},
      {"inverse_demand",
       {{"type", "affine"},
        {"intercept", std::vector<double>(6, 1.6)},
        {"slope", std::vector<double>(6, 1.0 / 500.0)}}},
      {"arrival_penalty", {{"target_arrival", 1.0}, {"early_slope", 0.5}, {"late_slope", 1.5}}},
  };

  // fail fast if the emitted document violates any scenario invariant
  edue::Scenario check = edue::scenario_from_json(scenario);
  if (check.paths.size() != static_cast<std::size_t>(total_paths)) {
    std::cerr << "path count mismatch after validation\n";
    return 1;
  }

  std::cout << scenario.dump(1) << '\n';
  std::cerr << "emitted " << check.links.size() << " links, " << check.paths.size() << " paths\n";
  return 0;
}
