#include "cdindex/cem.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "cdindex/error.hpp"
#include "cdindex/rng.hpp"
#include "cdindex/tabular.hpp"

namespace cdindex {

namespace {

struct Bin {
  int lo;
  int hi;  // inclusive; -1 for open-ended
  std::string_view label;
};

constexpr std::array kSeparationBins{
    Bin{0, 2, "0-2"}, Bin{3, 3, "3"},     Bin{4, 4, "4"},       Bin{5, 5, "5"},
    Bin{6, 6, "6"},   Bin{7, 7, "7"},     Bin{8, 8, "8"},       Bin{9, 10, "9-10"},
    Bin{11, 12, "11-12"}, Bin{13, -1, "13+"},
};

constexpr std::array kRecentCiteBins{
    Bin{1, 1, "1"},     Bin{2, 2, "2"},       Bin{3, 3, "3"},         Bin{4, 4, "4"},
    Bin{5, 5, "5"},     Bin{6, 7, "6-7"},     Bin{8, 10, "8-10"},     Bin{11, 16, "11-16"},
    Bin{17, 45, "17-45"}, Bin{46, -1, "46+"},
};

constexpr std::array kPriorArtCountBins{
    Bin{1, 1, "1"}, Bin{2, 2, "2"},   Bin{3, 3, "3"},     Bin{4, 4, "4"},        Bin{5, 5, "5"},
    Bin{6, 7, "6-7"}, Bin{8, 10, "8-10"}, Bin{11, 14, "11-14"}, Bin{15, -1, "15+"},
};

template <std::size_t N>
std::string_view lookup(const std::array<Bin, N>& bins, int value) {
  for (const auto& b : bins) {
    if (value >= b.lo && (b.hi < 0 || value <= b.hi)) return b.label;
  }
  return {};
}

}  // namespace

std::string_view bin_separation(int years) {
  if (years < 0) {
    throw Error(Errc::invalid_argument, "negative separation " + std::to_string(years));
  }
  return lookup(kSeparationBins, years);
}

std::string_view bin_recent_cites(int count) {
  if (count < 0) throw Error(Errc::invalid_argument, "negative citation count");
  if (count == 0) throw Error(Errc::below_support, "prior art has no recent citations");
  return lookup(kRecentCiteBins, count);
}

std::string_view bin_prior_art_count(int count) {
  if (count < 0) throw Error(Errc::invalid_argument, "negative prior-art count");
  if (count == 0) throw Error(Errc::below_support, "focal node cites no prior art");
  return lookup(kPriorArtCountBins, count);
}

std::string StratumKey::to_string() const {
  return focal_category + '|' + prior_art_category + '|' + std::to_string(focal_grant_year) + '|' +
         separation_bin + '|' + recent_cites_bin + '|' + prior_art_count_bin;
}

StratumKey stratum_key(const PairRecord& pair) {
  StratumKey key;
  key.focal_category = pair.focal_category;
  key.prior_art_category = pair.prior_art_category;
  key.focal_grant_year = pair.focal_grant_year;
  key.separation_bin = bin_separation(pair.separation_years);
  key.recent_cites_bin = bin_recent_cites(pair.prior_art_recent_cites);
  key.prior_art_count_bin = bin_prior_art_count(pair.focal_prior_art_count);
  return key;
}

// ---------------------------------------------------------------------------

TreatmentSelection select_treated(std::span<const ResultRow> results, const CitationGraph& graph,
                                  const TreatmentCriteria& criteria) {
  std::vector<const ResultRow*> rows;
  for (const auto& r : results) {
    // Time-series files: only the final-horizon point describes the node.
    if (r.ok() && (!r.year || *r.year == r.t)) rows.push_back(&r);
  }
  if (rows.empty()) throw Error(Errc::empty_result_set, "no usable result rows");

  TreatmentSelection sel;
  double mean = 0.0;
  double m2 = 0.0;
  for (const auto* r : rows) {
    const double d = r->result.disruptiveness;
    if (criteria.require_positive && !(d > 0.0)) continue;
    ++sel.reference_rows;
    const double delta = d - mean;
    mean += delta / static_cast<double>(sel.reference_rows);
    m2 += delta * (d - mean);
  }
  if (sel.reference_rows == 0) {
    throw Error(Errc::empty_result_set, "no rows with positive disruptiveness");
  }
  sel.mean = mean;
  sel.sd = sel.reference_rows > 1 ? std::sqrt(m2 / static_cast<double>(sel.reference_rows - 1)) : 0.0;
  sel.cutoff = sel.mean + criteria.threshold_sd * sel.sd;

  for (const auto* r : rows) {
    if (!(r->result.disruptiveness > sel.cutoff)) continue;
    const auto v = graph.index_of(r->focal_id);
    if (criteria.require_prior_art && graph.cited(v).empty()) continue;
    if (criteria.require_category && !graph.node(v).category) continue;
    sel.treated.push_back(r->focal_id);
  }
  std::sort(sel.treated.begin(), sel.treated.end());
  sel.treated.erase(std::unique(sel.treated.begin(), sel.treated.end()), sel.treated.end());
  if (sel.treated.empty()) {
    throw Error(Errc::empty_result_set,
                "no focal node exceeds the cutoff " + format_double(sel.cutoff));
  }
  return sel;
}

PairBuild build_pairs(const CitationGraph& graph, std::span<const std::string> focal_ids,
                      const PairOptions& options) {
  if (options.recent_window_years < 1) {
    throw Error(Errc::invalid_argument, "recent citation window must be at least one year");
  }
  std::vector<std::string> ids(focal_ids.begin(), focal_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  PairBuild out;
  for (const auto& id : ids) {
    const auto f = graph.index_of(id);
    const auto& focal = graph.node(f);
    if (focal.stub) continue;
    if (options.max_focal_year && focal.grant_year > *options.max_focal_year) {
      ++out.after_max_focal_year;
      continue;
    }
    const auto prior = graph.cited(f);
    const int window_start = focal.grant_year - options.recent_window_years + 1;
    for (const auto p : prior) {
      const auto& art = graph.node(p);
      if (!focal.category || !art.category) {
        ++out.missing_category;
        continue;
      }
      if (art.stub || (options.min_prior_art_year && art.grant_year < *options.min_prior_art_year)) {
        ++out.before_min_year;
        continue;
      }
      PairRecord rec;
      rec.focal_id = focal.id;
      rec.prior_art_id = art.id;
      rec.focal_category = *focal.category;
      rec.prior_art_category = *art.category;
      rec.focal_grant_year = focal.grant_year;
      rec.prior_art_grant_year = art.grant_year;
      rec.separation_years = focal.grant_year - art.grant_year;
      if (rec.separation_years < 0) {
        ++out.negative_separation;
        continue;
      }
      int recent = 0;
      for (const auto c : graph.citers(p)) {
        const int y = graph.grant_year(c);
        if (!graph.node(c).stub && y >= window_start && y <= focal.grant_year) ++recent;
      }
      rec.prior_art_recent_cites = recent;
      rec.focal_prior_art_count = static_cast<int>(prior.size());
      if (recent == 0) {
        out.below_support.push_back(std::move(rec));
      } else {
        out.pairs.push_back(std::move(rec));
      }
    }
  }
  return out;
}

MatchResult match(std::span<const PairRecord> treated, std::span<const PairRecord> control,
                  std::uint64_t seed, bool with_replacement) {
  using PairId = std::pair<std::string_view, std::string_view>;
  std::set<PairId> treated_ids;
  for (const auto& t : treated) treated_ids.emplace(t.focal_id, t.prior_art_id);
  for (const auto& c : control) {
    if (treated_ids.contains({c.focal_id, c.prior_art_id})) {
      throw Error(Errc::overlapping_pools,
                  "pair " + c.focal_id + " -> " + c.prior_art_id + " is in both pools");
    }
  }

  const auto by_id = [](const PairRecord* a, const PairRecord* b) {
    return std::tie(a->focal_id, a->prior_art_id) < std::tie(b->focal_id, b->prior_art_id);
  };
  std::map<StratumKey, std::vector<const PairRecord*>> treated_strata;
  std::map<StratumKey, std::vector<const PairRecord*>> control_strata;
  for (const auto& t : treated) treated_strata[stratum_key(t)].push_back(&t);
  for (const auto& c : control) control_strata[stratum_key(c)].push_back(&c);

  MatchResult result;
  result.strata = treated_strata.size();
  std::mt19937_64 rng(seed);
  for (auto& [key, members] : treated_strata) {
    std::sort(members.begin(), members.end(), by_id);
    const auto it = control_strata.find(key);
    if (it == control_strata.end()) {
      for (const auto* t : members) result.unmatched.push_back(*t);
      continue;
    }
    auto& pool = it->second;
    std::sort(pool.begin(), pool.end(), by_id);
    if (with_replacement) {
      for (const auto* t : members) {
        const auto* c = pool[uniform_index(rng, pool.size())];
        result.matched.push_back({*t, *c, key});
      }
      continue;
    }
    // Partial Fisher-Yates: the first `take` slots become a uniform sample.
    const auto take = std::min(members.size(), pool.size());
    if (members.size() > pool.size()) {
      for (std::size_t i = 0; i < take; ++i) {
        std::swap(members[i], members[i + uniform_index(rng, members.size() - i)]);
      }
    }
    for (std::size_t i = 0; i < take; ++i) {
      const auto j = i + uniform_index(rng, pool.size() - i);
      std::swap(pool[i], pool[j]);
      result.matched.push_back({*members[i], *pool[i], key});
    }
    std::sort(members.begin() + static_cast<std::ptrdiff_t>(take), members.end(), by_id);
    for (std::size_t i = take; i < members.size(); ++i) result.unmatched.push_back(*members[i]);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Files

void write_pairs(std::ostream& out, std::span<const PairRecord> pairs) {
  out << "focal_id,prior_art_id,focal_category,prior_art_category,focal_grant_year,"
         "prior_art_grant_year,separation_years,prior_art_recent_cites,focal_prior_art_count\n";
  for (const auto& p : pairs) {
    write_field(out, p.focal_id, ',');
    out << ',';
    write_field(out, p.prior_art_id, ',');
    out << ',';
    write_field(out, p.focal_category, ',');
    out << ',';
    write_field(out, p.prior_art_category, ',');
    out << ',' << p.focal_grant_year << ',' << p.prior_art_grant_year << ',' << p.separation_years
        << ',' << p.prior_art_recent_cites << ',' << p.focal_prior_art_count << '\n';
  }
  if (!out) throw Error(Errc::io_error, "failed writing pair records");
}

std::vector<PairRecord> read_pairs(std::istream& in) {
  DelimitedReader reader(in);
  std::vector<PairRecord> pairs;
  if (reader.header().empty()) return pairs;
  const auto need = [&](std::string_view name) {
    const auto c = reader.column(name);
    if (!c) throw Error(Errc::missing_required_column, "pair file has no '" + std::string(name) + "' column");
    return *c;
  };
  const auto c_f = need("focal_id");
  const auto c_p = need("prior_art_id");
  const auto c_fc = need("focal_category");
  const auto c_pc = need("prior_art_category");
  const auto c_fy = need("focal_grant_year");
  const auto c_py = reader.column("prior_art_grant_year");
  const auto c_sep = need("separation_years");
  const auto c_rc = need("prior_art_recent_cites");
  const auto c_pa = need("focal_prior_art_count");

  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() < reader.header().size()) {
      throw Error(Errc::malformed_row, "pair file line " + std::to_string(reader.line_number()));
    }
    const auto integer = [&](std::size_t col) {
      const auto v = parse_int(f[col]);
      if (!v) {
        throw Error(Errc::malformed_row, "pair file line " + std::to_string(reader.line_number()) +
                                             ": '" + f[col] + "' is not an integer");
      }
      return static_cast<int>(*v);
    };
    PairRecord p;
    p.focal_id = f[c_f];
    p.prior_art_id = f[c_p];
    p.focal_category = f[c_fc];
    p.prior_art_category = f[c_pc];
    p.focal_grant_year = integer(c_fy);
    p.separation_years = integer(c_sep);
    p.prior_art_grant_year = c_py ? integer(*c_py) : p.focal_grant_year - p.separation_years;
    p.prior_art_recent_cites = integer(c_rc);
    p.focal_prior_art_count = integer(c_pa);
    if (p.separation_years < 0 || p.prior_art_recent_cites < 0 || p.focal_prior_art_count < 0) {
      throw Error(Errc::malformed_row,
                  "pair file line " + std::to_string(reader.line_number()) + ": negative value");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_matched(std::ostream& out, std::span<const MatchedPair> matched) {
  out << "treated_focal,treated_prior,control_focal,control_prior,focal_category,"
         "prior_art_category,focal_grant_year,separation_bin,recent_cites_bin,prior_art_count_bin\n";
  for (const auto& m : matched) {
    for (const auto* field : {&m.treated.focal_id, &m.treated.prior_art_id, &m.control.focal_id,
                              &m.control.prior_art_id, &m.key.focal_category,
                              &m.key.prior_art_category}) {
      write_field(out, *field, ',');
      out << ',';
    }
    out << m.key.focal_grant_year << ',' << m.key.separation_bin << ',' << m.key.recent_cites_bin
        << ',' << m.key.prior_art_count_bin << '\n';
  }
  if (!out) throw Error(Errc::io_error, "failed writing matched pairs");
}

std::vector<PairLink> read_matched(std::istream& in) {
  DelimitedReader reader(in);
  std::vector<PairLink> links;
  if (reader.header().empty()) return links;
  const auto need = [&](std::string_view name) {
    const auto c = reader.column(name);
    if (!c) {
      throw Error(Errc::missing_required_column,
                  "matched-pairs file has no '" + std::string(name) + "' column");
    }
    return *c;
  };
  const auto tf = need("treated_focal");
  const auto tp = need("treated_prior");
  const auto cf = need("control_focal");
  const auto cp = need("control_prior");
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() < reader.header().size()) {
      throw Error(Errc::malformed_row,
                  "matched-pairs line " + std::to_string(reader.line_number()));
    }
    links.push_back({f[tf], f[tp], f[cf], f[cp]});
  }
  return links;
}

}  // namespace cdindex
