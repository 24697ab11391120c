#pragma once
// Reference implementations used by the tests. They work straight off an
// edge list with nested loops and share no code with the library.

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cdindex/graph.hpp"

namespace cdindex::testing {

struct EdgeListGraph {
  std::vector<std::string> ids;
  std::vector<int> years;
  std::vector<std::pair<int, int>> edges;  // (citing, cited), positions into ids

  CitationGraph build() const;
  bool has_edge(int from, int to) const;
};

/// Random dated instance. Edges ignore time order, so later nodes can be cited.
EdgeListGraph random_graph(std::mt19937_64& rng, int max_nodes, int max_edges, int first_year = 1976,
                           int last_year = 2010);

struct OracleResult {
  double disruptiveness = 0.0;
  double radicalness = 0.0;
  std::size_t n = 0;
  std::size_t focal_only = 0;
  std::size_t prior_only = 0;
  std::size_t both = 0;
  std::vector<int> citers;  // positions into ids, ascending
};

struct OracleOptions {
  int horizon = 0;
  bool post_grant_only = true;
  bool fractional = false;
  bool include_focal_citers = false;
  /// Weight per node position; empty means 1 everywhere.
  std::vector<double> weights;
};

/// Triple loop over (candidate citer, class member, edge).
OracleResult oracle_measure(const EdgeListGraph& g, const std::vector<int>& focal,
                            const OracleOptions& options);

/// Same loops over a dense adjacency matrix, for suites that query one
/// graph many times.
class DenseOracle {
 public:
  explicit DenseOracle(const EdgeListGraph& g);
  OracleResult measure(const std::vector<int>& focal, const OracleOptions& options) const;

 private:
  const EdgeListGraph& g_;
  std::vector<char> adj_;
};

/// Ids of nodes citing `node` with year in [from, to], by a full edge scan.
std::vector<std::string> oracle_citers(const EdgeListGraph& g, int node, int from, int to);

}  // namespace cdindex::testing
