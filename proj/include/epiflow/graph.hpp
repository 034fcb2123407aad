#ifndef EPIFLOW_GRAPH_HPP
#define EPIFLOW_GRAPH_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace epiflow {

/// Directed, strongly connected graph without self-loops. Edges are kept
/// sorted by (src, dst); that order is the canonical indexing used for the
/// per-edge policy parameters theta.
class Graph {
 public:
  /// Validates and builds. Throws InvariantViolation unless the edge set is
  /// duplicate-free, self-loop-free, covers every node with out-degree >= 1,
  /// and is strongly connected.
  Graph(int node_count, std::vector<std::pair<int, int>> edges);

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }

  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& out_neighbors(int node) const { return out_[node]; }
  const std::vector<int>& in_neighbors(int node) const { return in_[node]; }

  /// First edge index of node's out-edge block; edges of a node are
  /// contiguous in the canonical order.
  int edge_offset(int node) const { return edge_offset_[node]; }
  int out_degree(int node) const { return static_cast<int>(out_[node].size()); }

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  std::vector<int> edge_offset_;
};

/// Per-node rate at which individuals leave the node. Strictly positive.
struct Outrates {
  std::vector<double> f;
};

struct ErdosRenyi {
  double p = 0.15;
};
struct Waxman {
  double alpha = 0.4;
  double beta = 0.4;
};
struct BarabasiAlbert {
  int m = 2;
};
struct RelaxedCaveman {
  int cliques = 5;
  int clique_size = 6;
  double rewire_p = 0.2;
};

using GraphFamily = std::variant<ErdosRenyi, Waxman, BarabasiAlbert, RelaxedCaveman>;

struct GraphSpec {
  GraphFamily family;
  int size = 30;
  std::uint64_t seed = 0;
};

bool is_strongly_connected_edges(int node_count, const std::vector<std::pair<int, int>>& edges);
bool is_strongly_connected(const Graph& g);

/// Draws a graph of the requested family; regenerates until strongly
/// connected, up to max_attempts (then ConnectivityFailure). Deterministic
/// in the spec seed. Undirected families emit both directions per edge.
Graph generate(const GraphSpec& spec, int max_attempts = 1000);

/// i.i.d. uniform on (max(lo, 1e-6), hi]; lo < hi required.
Outrates sample_outrates(const Graph& g, double lo, double hi, std::uint64_t seed);

void save_edge_list(const Graph& g, const Outrates& f, const std::string& path);
void save_edge_list(const Graph& g, const Outrates& f, std::ostream& out);
std::pair<Graph, Outrates> load_edge_list(const std::string& path);
std::pair<Graph, Outrates> load_edge_list(std::istream& in);

const char* family_name(const GraphFamily& family);

}  // namespace epiflow

#endif
