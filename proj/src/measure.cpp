#include "cdindex/measure.hpp"

#include <algorithm>
#include <cmath>

#include "cdindex/error.hpp"
#include "cdindex/summation.hpp"
#include "cdindex/tabular.hpp"

namespace cdindex {

namespace {

enum : std::uint8_t { kFocal = 1, kPrior = 2 };

Incidence resolve(Incidence requested, std::size_t m) {
  if (requested != Incidence::automatic) return requested;
  return m == 1 ? Incidence::indicator : Incidence::fractional;
}

double indicator_term(const CiterRow& row) {
  const double f = row.focal_hits > 0 ? 1.0 : 0.0;
  const double b = row.prior_hits > 0 ? 1.0 : 0.0;
  return -2.0 * f * b + f;
}

}  // namespace

std::string_view to_string(CiterWindow w) noexcept {
  return w == CiterWindow::post_grant ? "post" : "all";
}

std::string_view to_string(Incidence i) noexcept {
  switch (i) {
    case Incidence::automatic: return "auto";
    case Incidence::indicator: return "indicator";
    case Incidence::fractional: return "fractional";
  }
  return "auto";
}

// ---------------------------------------------------------------------------
// FocalContext

FocalContext::FocalContext(std::vector<NodeIndex> focal_set, std::vector<NodeIndex> prior_art,
                           int horizon_year, std::vector<CiterRow> citers, Incidence incidence)
    : focal_(std::move(focal_set)),
      prior_(std::move(prior_art)),
      citers_(std::move(citers)),
      horizon_(horizon_year),
      m_(focal_.size()),
      q_(prior_.size()) {
  if (focal_.empty()) throw Error(Errc::empty_focal_set, "focal set is empty");
  for (const auto& row : citers_) {
    if (row.focal_hits == 0 && row.prior_hits == 0) {
      throw Error(Errc::invalid_argument,
                  "citer row " + std::to_string(row.citer) + " cites neither class");
    }
    if (row.focal_hits > m_ || row.prior_hits > q_) {
      throw Error(Errc::invalid_argument,
                  "citer row " + std::to_string(row.citer) + " has more ties than class members");
    }
  }
  incidence_ = resolve(incidence, m_);
}

double FocalContext::f(const CiterRow& row) const noexcept {
  if (incidence_ == Incidence::indicator) return row.focal_hits > 0 ? 1.0 : 0.0;
  return static_cast<double>(row.focal_hits) / static_cast<double>(m_);
}

double FocalContext::b(const CiterRow& row) const noexcept {
  if (incidence_ == Incidence::indicator) return row.prior_hits > 0 ? 1.0 : 0.0;
  if (q_ == 0) return 0.0;
  return static_cast<double>(row.prior_hits) / static_cast<double>(q_);
}

ClassCounts FocalContext::counts() const noexcept {
  ClassCounts c;
  for (const auto& row : citers_) {
    if (row.focal_hits > 0 && row.prior_hits > 0) {
      ++c.both;
    } else if (row.focal_hits > 0) {
      ++c.focal_only;
    } else {
      ++c.prior_only;
    }
  }
  return c;
}

FocalContext FocalContext::at_horizon(int year) const {
  FocalContext out = *this;
  out.horizon_ = year;
  std::erase_if(out.citers_, [year](const CiterRow& r) { return r.grant_year > year; });
  return out;
}

FocalContext FocalContext::collapsed() const {
  FocalContext out = *this;
  out.m_ = 1;
  out.q_ = q_ > 0 ? 1 : 0;
  for (auto& row : out.citers_) {
    row.focal_hits = row.focal_hits > 0 ? 1 : 0;
    row.prior_hits = row.prior_hits > 0 ? 1 : 0;
  }
  return out;
}

FocalContext FocalContext::with_incidence(Incidence incidence) const {
  FocalContext out = *this;
  out.incidence_ = resolve(incidence, m_);
  return out;
}

// ---------------------------------------------------------------------------
// ContextBuilder

ContextBuilder::ContextBuilder(const CitationGraph& graph)
    : graph_(graph),
      slots_(graph.node_count()) {}

void ContextBuilder::next_epoch() {
  if (++epoch_ == 0) {
    std::fill(slots_.begin(), slots_.end(), Slot{});
    epoch_ = 1;
  }
}

FocalContext ContextBuilder::build(std::span<const NodeIndex> focal_set, int horizon_year,
                                   const ContextOptions& options) {
  if (focal_set.empty()) throw Error(Errc::empty_focal_set, "focal set is empty");
  next_epoch();

  std::vector<NodeIndex> focal;
  focal.reserve(focal_set.size());
  int latest_grant = kUnknownYear;
  for (const auto v : focal_set) {
    if (v >= graph_.node_count()) throw Error(Errc::unknown_node, "index " + std::to_string(v));
    if (slots_[v].member_epoch == epoch_) continue;
    slots_[v].member_epoch = epoch_;
    slots_[v].member_kind = kFocal;
    focal.push_back(v);
    latest_grant = std::max(latest_grant, graph_.grant_year(v));
  }
  std::sort(focal.begin(), focal.end());

  std::vector<NodeIndex> prior;
  for (const auto v : focal) {
    for (const auto p : graph_.cited(v)) {
      if (slots_[p].member_epoch == epoch_) continue;
      slots_[p].member_epoch = epoch_;
      slots_[p].member_kind = kPrior;
      prior.push_back(p);
    }
  }
  std::sort(prior.begin(), prior.end());

  const int earliest = options.window == CiterWindow::post_grant ? latest_grant : kUnknownYear;
  // Year window and stub exclusion come from citers_granted.
  const auto eligible = [&](const Slot& slot) {
    return options.include_focal_citers || slot.member_epoch != epoch_ || slot.member_kind != kFocal;
  };
  const auto touch = [&](NodeIndex c, Slot& slot) {
    if (slot.touched_epoch != epoch_) {
      slot.touched_epoch = epoch_;
      slot.focal_hits = 0;
      slot.prior_hits = 0;
      touched_.push_back(c);
    }
  };

  touched_.clear();
  for (const auto v : focal) {
    for (const auto c : graph_.citers_granted(v, earliest, horizon_year)) {
      auto& slot = slots_[c];
      if (!eligible(slot)) continue;
      touch(c, slot);
      ++slot.focal_hits;
    }
  }
  // A focal member always cites its own prior art; it only joins the citers
  // through a tie to another focal member.
  for (const auto p : prior) {
    for (const auto c : graph_.citers_granted(p, earliest, horizon_year)) {
      auto& slot = slots_[c];
      if (!eligible(slot)) continue;
      const bool focal_member = slot.member_epoch == epoch_ && slot.member_kind == kFocal;
      if (focal_member && slot.touched_epoch != epoch_) continue;
      touch(c, slot);
      ++slot.prior_hits;
    }
  }
  std::sort(touched_.begin(), touched_.end());

  std::vector<CiterRow> rows;
  rows.reserve(touched_.size());
  for (const auto c : touched_) {
    rows.push_back({c, graph_.grant_year(c), slots_[c].focal_hits, slots_[c].prior_hits});
  }
  return FocalContext(std::move(focal), std::move(prior), horizon_year, std::move(rows),
                      options.incidence);
}

FocalContext build_context(const CitationGraph& graph, std::span<const std::string> focal_ids,
                           int horizon_year, const ContextOptions& options) {
  if (focal_ids.empty()) throw Error(Errc::empty_focal_set, "focal set is empty");
  std::vector<NodeIndex> focal;
  focal.reserve(focal_ids.size());
  for (const auto& id : focal_ids) focal.push_back(graph.index_of(id));
  ContextBuilder builder(graph);
  return builder.build(focal, horizon_year, options);
}

// ---------------------------------------------------------------------------
// Weights

WeightScheme WeightScheme::uniform(double value) {
  WeightScheme s;
  s.kind = Kind::uniform;
  s.constant = value;
  return s;
}

WeightScheme WeightScheme::age_decay(double half_life_years) {
  WeightScheme s;
  s.kind = Kind::age_decay;
  s.half_life = half_life_years;
  return s;
}

WeightScheme WeightScheme::custom(std::unordered_map<std::string, double> weights,
                                  double fallback) {
  WeightScheme s;
  s.kind = Kind::custom_table;
  s.table = std::make_shared<const std::unordered_map<std::string, double>>(std::move(weights));
  s.table_default = fallback;
  return s;
}

std::string describe(const WeightScheme& scheme) {
  switch (scheme.kind) {
    case WeightScheme::Kind::uniform: return "uniform(" + format_double(scheme.constant) + ")";
    case WeightScheme::Kind::age_decay:
      return "age-decay(half_life=" + format_double(scheme.half_life) + ")";
    case WeightScheme::Kind::custom_table:
      return "table(" + std::to_string(scheme.table ? scheme.table->size() : 0) +
             " entries, default=" + format_double(scheme.table_default) + ")";
  }
  return "uniform";
}

std::vector<double> resolve_weights(const WeightScheme& scheme, const CitationGraph& graph,
                                    const FocalContext& ctx) {
  std::vector<double> w;
  w.reserve(ctx.n());
  if (scheme.kind == WeightScheme::Kind::age_decay && !(scheme.half_life > 0.0)) {
    throw Error(Errc::non_positive_weight, "age-decay half-life must be positive");
  }
  for (const auto& row : ctx.citers()) {
    double value = 1.0;
    switch (scheme.kind) {
      case WeightScheme::Kind::uniform: value = scheme.constant; break;
      case WeightScheme::Kind::age_decay:
        value = std::exp2(static_cast<double>(ctx.horizon_year() - row.grant_year) / scheme.half_life);
        break;
      case WeightScheme::Kind::custom_table: {
        value = scheme.table_default;
        if (scheme.table) {
          const auto it = scheme.table->find(graph.id(row.citer));
          if (it != scheme.table->end()) value = it->second;
        }
        break;
      }
    }
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw Error(Errc::non_positive_weight,
                  "citer " + graph.id(row.citer) + " has weight " + format_double(value));
    }
    w.push_back(value);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Measures

double disruptiveness_indicator(const FocalContext& ctx) {
  if (ctx.is_isolate()) return 0.0;
  const auto c = ctx.counts();
  // Per-citer terms are +1 (focal only), -1 (both) and 0 (prior only).
  return (static_cast<double>(c.focal_only) - static_cast<double>(c.both)) /
         static_cast<double>(ctx.n());
}

double disruptiveness_generalized(const FocalContext& ctx) {
  if (ctx.is_isolate()) return 0.0;
  const double m = static_cast<double>(ctx.m());
  const double q = static_cast<double>(ctx.q());
  std::vector<double> terms;
  terms.reserve(ctx.n());
  for (const auto& row : ctx.citers()) {
    const double f = static_cast<double>(row.focal_hits) / m;
    const double b = ctx.q() == 0 ? 0.0 : static_cast<double>(row.prior_hits) / q;
    terms.push_back(-2.0 * f * b + f);
  }
  return pairwise_sum(terms) / static_cast<double>(ctx.n());
}

double disruptiveness(const FocalContext& ctx) {
  return ctx.incidence() == Incidence::indicator ? disruptiveness_indicator(ctx)
                                                 : disruptiveness_generalized(ctx);
}

double radicalness(const FocalContext& ctx, std::span<const double> weights) {
  if (weights.size() != ctx.n()) {
    throw Error(Errc::invalid_argument, "expected " + std::to_string(ctx.n()) + " weights, got " +
                                            std::to_string(weights.size()));
  }
  std::vector<double> terms;
  terms.reserve(ctx.n());
  const auto rows = ctx.citers();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double w = weights[k];
    if (!(w > 0.0)) {
      throw Error(Errc::non_positive_weight, "citer node index " + std::to_string(rows[k].citer) +
                                                 " has weight " + format_double(w));
    }
    double term = 0.0;
    if (ctx.incidence() == Incidence::indicator) {
      term = indicator_term(rows[k]);
    } else {
      // Raw tie counts, no class-size normalization.
      const double f = static_cast<double>(rows[k].focal_hits);
      const double b = static_cast<double>(rows[k].prior_hits);
      term = -2.0 * f * b + f;
    }
    terms.push_back(term / w);
  }
  return pairwise_sum(terms);
}

double radicalness(const FocalContext& ctx, const WeightScheme& scheme, const CitationGraph& graph) {
  const auto w = resolve_weights(scheme, graph, ctx);
  return radicalness(ctx, w);
}

MeasureResult measure(const FocalContext& ctx, std::span<const double> weights) {
  MeasureResult r;
  const auto c = ctx.counts();
  r.disruptiveness = disruptiveness(ctx);
  r.radicalness = radicalness(ctx, weights);
  r.n_citers = ctx.n();
  r.count_focal_only = c.focal_only;
  r.count_prior_only = c.prior_only;
  r.count_both = c.both;
  r.is_isolate = ctx.is_isolate();
  r.horizon_year = ctx.horizon_year();
  r.focal_size = ctx.m();
  r.prior_art_size = ctx.q();
  return r;
}

MeasureResult measure(const FocalContext& ctx, const WeightScheme& scheme,
                      const CitationGraph& graph) {
  const auto w = resolve_weights(scheme, graph, ctx);
  return measure(ctx, w);
}

std::vector<TimePoint> disruptiveness_timeseries(const CitationGraph& graph,
                                                 std::span<const NodeIndex> focal_set,
                                                 int from_year, int to_year,
                                                 const ContextOptions& options,
                                                 const WeightScheme& scheme) {
  if (from_year > to_year) {
    throw Error(Errc::invalid_year_range,
                std::to_string(from_year) + " > " + std::to_string(to_year));
  }
  ContextBuilder builder(graph);
  const auto full = builder.build(focal_set, to_year, options);
  std::vector<TimePoint> series;
  series.reserve(static_cast<std::size_t>(to_year - from_year + 1));
  for (int year = from_year; year <= to_year; ++year) {
    const auto ctx = year == to_year ? full : full.at_horizon(year);
    series.push_back({year, measure(ctx, scheme, graph)});
  }
  return series;
}

std::vector<TimePoint> disruptiveness_timeseries(const CitationGraph& graph,
                                                 std::span<const std::string> focal_ids,
                                                 int from_year, int to_year,
                                                 const ContextOptions& options,
                                                 const WeightScheme& scheme) {
  if (focal_ids.empty()) throw Error(Errc::empty_focal_set, "focal set is empty");
  std::vector<NodeIndex> focal;
  for (const auto& id : focal_ids) focal.push_back(graph.index_of(id));
  return disruptiveness_timeseries(graph, focal, from_year, to_year, options, scheme);
}

}  // namespace cdindex
