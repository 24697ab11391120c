#pragma once

#include <string>
#include <vector>

#include "cdindex/graph.hpp"

namespace cdindex::testing {

/// One row of the illustrative-patents table: citer class counts and the
/// printed two-decimal disruptiveness.
struct PatentRow {
  std::string patent;
  int backward_cites;
  double printed;
  int focal_only;
  int prior_only;
  int both;
  int application_year;
  int grant_year;
  std::string category;
};

const std::vector<PatentRow>& table2_rows();

struct FixtureFiles {
  std::vector<NodeRecord> nodes;
  std::vector<CitationEdge> edges;

  CitationGraph build() const;
  void write(const std::string& nodes_path, const std::string& edges_path) const;
};

/// Graph realizing every table row: each patent gets its own prior art and
/// citers so that the rows do not interact.
FixtureFiles table2_fixture();

/// Citation history of the 1983 cotransformation patent: prior-only citers in
/// the first years, one joint citer, a burst of focal-only citers three years
/// after issue, then a steady trickle up to 338 focal-only citers by 2010.
FixtureFiles axel_history();

/// C -> B -> A chain granted 2000, 2001, 2002.
FixtureFiles three_node_chain();

}  // namespace cdindex::testing
