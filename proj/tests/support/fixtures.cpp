#include "fixtures.hpp"

#include <fstream>
#include <stdexcept>

namespace cdindex::testing {

const std::vector<PatentRow>& table2_rows() {
  static const std::vector<PatentRow> rows = {
      {"4637464", 7, -0.90, 2, 17, 192, 1984, 1987, "Other"},
      {"4573530", 6, -0.89, 1, 21, 191, 1983, 1986, "Other"},
      {"4658215", 4, -0.87, 7, 13, 193, 1986, 1987, "Other"},
      {"4928765", 10, -0.85, 2, 29, 193, 1988, 1990, "Other"},
      {"6958436", 5, -0.85, 0, 26, 150, 2002, 2005, "Drugs"},
      {"5015744", 4, -0.36, 32, 129, 141, 1989, 1991, "Chemical"},
      {"6376284", 19, -0.24, 14, 446, 161, 2000, 2002, "Electrical"},
      {"6063738", 12, -0.14, 65, 161, 113, 1999, 2000, "Chemical"},
      {"4724318", 2, 0.12, 89, 132, 56, 1986, 1988, "Mechanical"},
      {"5016107", 17, 0.14, 126, 482, 37, 1989, 1991, "Computers"},
      {"6285999", 7, 0.37, 178, 248, 15, 1998, 2001, "Computers"},
      {"4356429", 4, 0.66, 358, 358, 51, 1980, 1982, "Electrical"},
      {"4445050", 4, 0.89, 151, 18, 0, 1981, 1984, "Electrical"},
      {"5010405", 2, 0.92, 159, 14, 0, 1989, 1991, "Electrical"},
      {"4237224", 1, 0.94, 277, 8, 5, 1979, 1980, "Drugs"},
      {"4399216", 2, 0.95, 338, 15, 1, 1980, 1983, "Drugs"},
      {"4343993", 0, 1.00, 169, 0, 0, 1980, 1982, "Mechanical"},
      {"4683202", 0, 1.00, 2211, 0, 0, 1985, 1987, "Drugs"},
  };
  return rows;
}

CitationGraph FixtureFiles::build() const { return finalize(nodes, edges); }

void FixtureFiles::write(const std::string& nodes_path, const std::string& edges_path) const {
  std::ofstream n(nodes_path);
  n << "id,grant_year,application_year,category\n";
  for (const auto& r : nodes) {
    n << r.id << ',' << r.grant_year << ',';
    if (r.application_year) n << *r.application_year;
    n << ',' << r.category.value_or("") << '\n';
  }
  std::ofstream e(edges_path);
  e << "citing,cited\n";
  for (const auto& edge : edges) e << edge.citing << ',' << edge.cited << '\n';
  if (!n || !e) throw std::runtime_error("cannot write fixture files");
}

namespace {

NodeRecord node(std::string id, int year, std::optional<std::string> category = {}) {
  NodeRecord r;
  r.id = std::move(id);
  r.grant_year = year;
  r.category = std::move(category);
  return r;
}

}  // namespace

FixtureFiles table2_fixture() {
  FixtureFiles f;
  for (const auto& row : table2_rows()) {
    auto focal = node(row.patent, row.grant_year, row.category);
    focal.application_year = row.application_year;
    f.nodes.push_back(focal);
    for (int k = 0; k < row.backward_cites; ++k) {
      const auto prior = row.patent + "-prior" + std::to_string(k);
      f.nodes.push_back(node(prior, row.grant_year - 4, row.category));
      f.edges.push_back({row.patent, prior});
    }
    const auto prior0 = row.patent + "-prior0";
    const auto add_citer = [&](const std::string& kind, int k, bool cites_focal, bool cites_prior) {
      const auto id = row.patent + "-" + kind + std::to_string(k);
      f.nodes.push_back(node(id, row.grant_year + 1 + k % 10, row.category));
      if (cites_focal) f.edges.push_back({id, row.patent});
      if (cites_prior) f.edges.push_back({id, prior0});
    };
    for (int k = 0; k < row.focal_only; ++k) add_citer("f", k, true, false);
    for (int k = 0; k < row.prior_only; ++k) add_citer("b", k, false, true);
    for (int k = 0; k < row.both; ++k) add_citer("fb", k, true, true);
  }
  return f;
}

FixtureFiles axel_history() {
  FixtureFiles f;
  auto focal = node("4399216", 1983, "Drugs");
  focal.application_year = 1980;
  f.nodes.push_back(focal);
  f.nodes.push_back(node("4190001", 1978, "Drugs"));
  f.nodes.push_back(node("4230002", 1979, "Drugs"));
  f.edges.push_back({"4399216", "4190001"});
  f.edges.push_back({"4399216", "4230002"});

  int serial = 0;
  const auto citer = [&](int year, bool focal_tie, bool prior_tie) {
    const auto id = "c" + std::to_string(year) + "-" + std::to_string(serial++);
    f.nodes.push_back(node(id, year, "Drugs"));
    if (focal_tie) f.edges.push_back({id, "4399216"});
    if (prior_tie) f.edges.push_back({id, serial % 2 == 0 ? "4190001" : "4230002"});
  };
  for (int year = 1983; year <= 1985; ++year) {
    for (int k = 0; k < 5; ++k) citer(year, false, true);
  }
  citer(1985, true, true);
  int focal_only = 0;
  for (int k = 0; k < 40; ++k, ++focal_only) citer(1986, true, false);
  for (int year = 1987; focal_only < 338; ++year) {
    for (int k = 0; k < 13 && focal_only < 338; ++k, ++focal_only) citer(year, true, false);
  }
  return f;
}

FixtureFiles three_node_chain() {
  FixtureFiles f;
  f.nodes = {node("A", 2000), node("B", 2001), node("C", 2002)};
  f.edges = {{"B", "A"}, {"C", "B"}};
  return f;
}

}  // namespace cdindex::testing
