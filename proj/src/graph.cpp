#include "epiflow/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "epiflow/errors.hpp"
#include "epiflow/rng.hpp"

namespace epiflow {

namespace {

constexpr double kOutrateFloor = 1e-6;

void check_spec(const GraphSpec& spec) {
  if (spec.size < 2) throw InvalidSpec("graph size must be at least 2");
  if (const auto* er = std::get_if<ErdosRenyi>(&spec.family)) {
    if (!(er->p > 0.0 && er->p <= 1.0)) throw InvalidSpec("erdos_renyi: p must be in (0, 1]");
  } else if (const auto* wx = std::get_if<Waxman>(&spec.family)) {
    if (!(wx->alpha > 0.0)) throw InvalidSpec("waxman: alpha must be positive");
    if (!(wx->beta > 0.0 && wx->beta <= 1.0)) throw InvalidSpec("waxman: beta must be in (0, 1]");
  } else if (const auto* ba = std::get_if<BarabasiAlbert>(&spec.family)) {
    if (ba->m < 1) throw InvalidSpec("barabasi_albert: m must be >= 1");
    if (ba->m >= spec.size) throw InvalidSpec("barabasi_albert: m must be < size");
  } else if (const auto* rc = std::get_if<RelaxedCaveman>(&spec.family)) {
    if (rc->clique_size < 2) throw InvalidSpec("relaxed_caveman: clique_size must be >= 2");
    if (rc->cliques < 1) throw InvalidSpec("relaxed_caveman: cliques must be >= 1");
    if (!(rc->rewire_p >= 0.0 && rc->rewire_p <= 1.0))
      throw InvalidSpec("relaxed_caveman: rewire_p must be in [0, 1]");
    if (rc->cliques * rc->clique_size != spec.size)
      throw InvalidSpec("relaxed_caveman: size must equal cliques * clique_size");
  }
}

using EdgeSet = std::set<std::pair<int, int>>;

void add_undirected(EdgeSet& edges, int a, int b) {
  if (a == b) return;
  edges.insert({a, b});
  edges.insert({b, a});
}

EdgeSet draw_erdos_renyi(int n, double p, Rng& rng) {
  EdgeSet edges;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (p >= 1.0 || rng.bernoulli(p)) edges.insert({i, j});
    }
  return edges;
}

EdgeSet draw_waxman(int n, double alpha, double beta, Rng& rng) {
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = rng.uniform(0.0, 1.0);
    y[i] = rng.uniform(0.0, 1.0);
  }
  double lmax = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      lmax = std::max(lmax, std::hypot(x[i] - x[j], y[i] - y[j]));
  if (lmax == 0.0) lmax = 1.0;
  EdgeSet edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = std::hypot(x[i] - x[j], y[i] - y[j]);
      if (rng.bernoulli(beta * std::exp(-d / (alpha * lmax)))) add_undirected(edges, i, j);
    }
  return edges;
}

EdgeSet draw_barabasi_albert(int n, int m, Rng& rng) {
  // Preferential attachment via the repeated-endpoints list; the first
  // arriving node connects to all m initial nodes (degrees are still zero).
  EdgeSet edges;
  std::vector<int> repeated;
  for (int v = m; v < n; ++v) {
    std::set<int> targets;
    if (repeated.empty()) {
      for (int t = 0; t < m; ++t) targets.insert(t);
    } else {
      while (static_cast<int>(targets.size()) < m) {
        int t = repeated[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(repeated.size()) - 1))];
        targets.insert(t);
      }
    }
    for (int t : targets) {
      add_undirected(edges, v, t);
      repeated.push_back(v);
      repeated.push_back(t);
    }
  }
  return edges;
}

EdgeSet draw_relaxed_caveman(int cliques, int clique_size, double rewire_p, Rng& rng) {
  const int n = cliques * clique_size;
  std::vector<std::pair<int, int>> undirected;
  for (int c = 0; c < cliques; ++c)
    for (int i = 0; i < clique_size; ++i)
      for (int j = i + 1; j < clique_size; ++j)
        undirected.push_back({c * clique_size + i, c * clique_size + j});
  EdgeSet edges;
  std::set<std::pair<int, int>> taken;
  auto has = [&](int a, int b) {
    return taken.count({std::min(a, b), std::max(a, b)}) > 0;
  };
  for (auto [u, v] : undirected) {
    if (rng.bernoulli(rewire_p)) {
      int w = static_cast<int>(rng.uniform_int(0, n - 1));
      if (w != u && !has(u, w)) v = w;
    }
    if (u == v || has(u, v)) continue;
    taken.insert({std::min(u, v), std::max(u, v)});
    add_undirected(edges, u, v);
  }
  return edges;
}

}  // namespace

Graph::Graph(int node_count, std::vector<std::pair<int, int>> edges)
    : n_(node_count), edges_(std::move(edges)) {
  if (n_ < 1) throw InvariantViolation("graph: node count must be positive");
  std::sort(edges_.begin(), edges_.end());
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    auto [s, d] = edges_[k];
    if (s < 0 || s >= n_ || d < 0 || d >= n_)
      throw InvariantViolation("graph: edge endpoint out of range");
    if (s == d) throw InvariantViolation("graph: self-loops are not allowed");
    if (k > 0 && edges_[k] == edges_[k - 1]) throw InvariantViolation("graph: duplicate edge");
  }
  out_.assign(n_, {});
  in_.assign(n_, {});
  for (auto [s, d] : edges_) {
    out_[s].push_back(d);
    in_[d].push_back(s);
  }
  for (int v = 0; v < n_; ++v)
    if (out_[v].empty()) throw InvariantViolation("graph: node with out-degree 0");
  edge_offset_.assign(n_ + 1, 0);
  for (int v = 0; v < n_; ++v)
    edge_offset_[v + 1] = edge_offset_[v] + static_cast<int>(out_[v].size());
  if (!is_strongly_connected_edges(n_, edges_))
    throw InvariantViolation("graph: not strongly connected");
}

bool is_strongly_connected_edges(int node_count,
                                 const std::vector<std::pair<int, int>>& edges) {
  if (node_count <= 1) return true;
  std::vector<std::vector<int>> out(node_count), in(node_count);
  for (auto [s, d] : edges) {
    out[s].push_back(d);
    in[d].push_back(s);
  }
  auto reaches_all = [&](const std::vector<std::vector<int>>& adj) {
    std::vector<char> seen(node_count, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
    }
    return count == node_count;
  };
  return reaches_all(out) && reaches_all(in);
}

bool is_strongly_connected(const Graph& g) {
  return is_strongly_connected_edges(g.node_count(), g.edges());
}

Graph generate(const GraphSpec& spec, int max_attempts) {
  check_spec(spec);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(Rng::mix(spec.seed, static_cast<std::uint64_t>(attempt)));
    EdgeSet edges = std::visit(
        [&](const auto& fam) -> EdgeSet {
          using T = std::decay_t<decltype(fam)>;
          if constexpr (std::is_same_v<T, ErdosRenyi>)
            return draw_erdos_renyi(spec.size, fam.p, rng);
          else if constexpr (std::is_same_v<T, Waxman>)
            return draw_waxman(spec.size, fam.alpha, fam.beta, rng);
          else if constexpr (std::is_same_v<T, BarabasiAlbert>)
            return draw_barabasi_albert(spec.size, fam.m, rng);
          else
            return draw_relaxed_caveman(fam.cliques, fam.clique_size, fam.rewire_p, rng);
        },
        spec.family);
    std::vector<std::pair<int, int>> edge_list(edges.begin(), edges.end());
    bool covered = true;
    std::vector<char> has_out(spec.size, 0);
    for (auto [s, d] : edge_list) {
      (void)d;
      has_out[s] = 1;
    }
    for (int v = 0; v < spec.size && covered; ++v) covered = has_out[v];
    if (covered && is_strongly_connected_edges(spec.size, edge_list))
      return Graph(spec.size, std::move(edge_list));
  }
  throw ConnectivityFailure("graph generation: no strongly connected draw in " +
                            std::to_string(max_attempts) + " attempts");
}

Outrates sample_outrates(const Graph& g, double lo, double hi, std::uint64_t seed) {
  if (!(lo >= 0.0) || !(hi > lo)) throw InvalidRange("outrates: need 0 <= lo < hi");
  Rng rng(seed);
  const double floor = std::max(lo, kOutrateFloor);
  Outrates out;
  out.f.resize(g.node_count());
  for (double& v : out.f) {
    // uniform on (floor, hi]
    v = hi - rng.uniform(0.0, hi - floor);
  }
  return out;
}

void save_edge_list(const Graph& g, const Outrates& f, std::ostream& out) {
  out << "#nodes " << g.node_count() << "\n";
  for (auto [s, d] : g.edges()) out << s << " " << d << "\n";
  for (int v = 0; v < g.node_count(); ++v) out << "#outrate " << v << " " << f.f[v] << "\n";
}

void save_edge_list(const Graph& g, const Outrates& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.precision(17);
  save_edge_list(g, f, out);
  if (!out) throw IoError("write failed: " + path);
}

std::pair<Graph, Outrates> load_edge_list(std::istream& in) {
  std::string line;
  long lineno = 0;
  int n = -1;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> f;
  std::vector<char> f_seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    if (line[0] == '#') {
      std::string tag;
      ss >> tag;
      if (tag == "#nodes") {
        if (n >= 0) throw ParseError("duplicate #nodes header", lineno);
        if (!(ss >> n) || n < 1) throw ParseError("bad #nodes header", lineno);
        f.assign(n, 0.0);
        f_seen.assign(n, 0);
      } else if (tag == "#outrate") {
        int v;
        double rate;
        if (n < 0) throw ParseError("#outrate before #nodes", lineno);
        if (!(ss >> v >> rate) || v < 0 || v >= n) throw ParseError("bad #outrate line", lineno);
        std::string extra;
        if (ss >> extra) throw ParseError("trailing tokens on #outrate line", lineno);
        if (f_seen[v]) throw ParseError("duplicate #outrate for node", lineno);
        if (!(rate > 0.0)) throw ParseError("outrate must be positive", lineno);
        f[v] = rate;
        f_seen[v] = 1;
      } else {
        throw ParseError("unknown directive: " + tag, lineno);
      }
      continue;
    }
    if (n < 0) throw ParseError("edge before #nodes header", lineno);
    int s, d;
    if (!(ss >> s >> d)) throw ParseError("malformed edge line", lineno);
    std::string extra;
    if (ss >> extra) throw ParseError("trailing tokens on edge line", lineno);
    edges.push_back({s, d});
  }
  if (n < 0) throw ParseError("missing #nodes header", lineno == 0 ? 1 : lineno);
  for (int v = 0; v < n; ++v)
    if (!f_seen[v]) throw ParseError("missing #outrate for node " + std::to_string(v), lineno);
  Graph g(n, std::move(edges));  // throws InvariantViolation on bad structure
  return {std::move(g), Outrates{std::move(f)}};
}

std::pair<Graph, Outrates> load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  return load_edge_list(in);
}

const char* family_name(const GraphFamily& family) {
  if (std::holds_alternative<ErdosRenyi>(family)) return "erdos_renyi";
  if (std::holds_alternative<Waxman>(family)) return "waxman";
  if (std::holds_alternative<BarabasiAlbert>(family)) return "barabasi_albert";
  return "relaxed_caveman";
}

}  // namespace epiflow
