#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cdindex/batch.hpp"
#include "cdindex/error.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace cdindex;
namespace t = cdindex::testing;

namespace {

std::string run_to_csv(const CitationGraph& g, BatchJob job) {
  std::ostringstream out;
  CsvResultWriter w(out);
  run_batch(g, job, w);
  return out.str();
}

}  // namespace

TEST(Batch, ThreeNodeChain) {
  const auto g = t::three_node_chain().build();
  BatchJob job;
  VectorSink sink;
  const auto summary = run_batch(g, job, sink);
  ASSERT_EQ(sink.rows.size(), 3u);
  EXPECT_EQ(sink.rows[0].focal_id, "A");
  EXPECT_EQ(sink.rows[0].result.disruptiveness, 1.0);
  EXPECT_EQ(sink.rows[0].result.n_citers, 1u);
  EXPECT_EQ(sink.rows[1].result.disruptiveness, 1.0);
  EXPECT_EQ(sink.rows[1].result.count_focal_only, 1u);
  EXPECT_EQ(sink.rows[2].result.disruptiveness, 0.0);
  EXPECT_TRUE(sink.rows[2].result.is_isolate);
  EXPECT_EQ(summary.isolates, 1u);
  EXPECT_EQ(summary.horizon_year, 2002);
}

TEST(Batch, EmptySelection) {
  const auto g = t::three_node_chain().build();
  BatchJob job;
  job.selection = Selection::granted_between(1900, 1910);
  VectorSink sink;
  try {
    run_batch(g, job, sink);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_selection);
  }
}

TEST(Batch, Selections) {
  const auto g = t::table2_fixture().build();
  EXPECT_EQ(resolve_selection(g, Selection::most_cited(1)), std::vector<std::string>{"4683202"});
  const auto range = resolve_selection(g, Selection::granted_between(1983, 1983));
  EXPECT_NE(std::find(range.begin(), range.end(), "4399216"), range.end());
  EXPECT_EQ(resolve_selection(g, Selection::of_ids({"b", "a", "b"})),
            (std::vector<std::string>{"a", "b"}));
}

TEST(Batch, UnknownIdBecomesErrorRow) {
  const auto g = t::three_node_chain().build();
  BatchJob job;
  job.selection = Selection::of_ids({"A", "missing"});
  VectorSink sink;
  const auto s = run_batch(g, job, sink);
  ASSERT_EQ(sink.rows.size(), 2u);
  EXPECT_TRUE(sink.rows[0].ok());
  EXPECT_FALSE(sink.rows[1].ok());
  EXPECT_NE(sink.rows[1].error.find("UnknownNode"), std::string::npos);
  EXPECT_EQ(s.error_rows, 1u);
}

TEST(Batch, MatchesOracleForEveryNode) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto el = t::random_graph(rng, 150, 1200);
    const auto g = el.build();
    BatchJob job;
    job.horizon_year = 2005;
    job.worker_count = 3;
    job.shard_size = 17;
    VectorSink sink;
    run_batch(g, job, sink);
    ASSERT_EQ(sink.rows.size(), el.ids.size());
    for (const auto& row : sink.rows) {
      const int v = static_cast<int>(std::find(el.ids.begin(), el.ids.end(), row.focal_id) - el.ids.begin());
      t::OracleOptions o;
      o.horizon = 2005;
      const auto want = t::oracle_measure(el, {v}, o);
      EXPECT_NEAR(row.result.disruptiveness, want.disruptiveness, 1e-12);
      EXPECT_NEAR(row.result.radicalness, want.radicalness, 1e-12);
    }
  }
}

TEST(Batch, WorkerCountDoesNotChangeBytes) {
  std::mt19937_64 rng(4);
  const auto g = t::random_graph(rng, 200, 2000).build();
  BatchJob job;
  job.shard_size = 50;
  job.worker_count = 1;
  const auto one = run_to_csv(g, job);
  job.worker_count = 8;
  EXPECT_EQ(run_to_csv(g, job), one);
  job.emit_timeseries = true;
  job.worker_count = 1;
  const auto series_one = run_to_csv(g, job);
  job.worker_count = 5;
  EXPECT_EQ(run_to_csv(g, job), series_one);
}

TEST(Batch, CsvAndJsonlRoundTrip) {
  const auto g = t::table2_fixture().build();
  BatchJob job;
  job.selection = Selection::of_ids({"4399216", "6958436", "missing"});
  job.horizon_year = 2010;
  for (const bool series : {false, true}) {
    job.emit_timeseries = series;
    VectorSink direct;
    run_batch(g, job, direct);
    for (const bool jsonl : {false, true}) {
      std::stringstream buf;
      if (jsonl) {
        JsonlResultWriter w(buf);
        run_batch(g, job, w);
      } else {
        CsvResultWriter w(buf);
        run_batch(g, job, w);
      }
      const auto back = read_results(buf);
      ASSERT_EQ(back.size(), direct.rows.size());
      for (std::size_t k = 0; k < back.size(); ++k) {
        EXPECT_EQ(back[k].focal_id, direct.rows[k].focal_id);
        EXPECT_EQ(back[k].year, direct.rows[k].year);
        EXPECT_EQ(back[k].ok(), direct.rows[k].ok());
        EXPECT_EQ(back[k].result.disruptiveness, direct.rows[k].result.disruptiveness);
        EXPECT_EQ(back[k].result.radicalness, direct.rows[k].result.radicalness);
        EXPECT_EQ(back[k].result.count_both, direct.rows[k].result.count_both);
      }
    }
  }
}

TEST(Batch, CsvHeader) {
  const auto g = t::three_node_chain().build();
  BatchJob job;
  const auto csv = run_to_csv(g, job);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "focal_id,t,n,f_only,b_only,both,disruptiveness,radicalness,is_isolate,error");
  EXPECT_NE(csv.find("\nA,2002,1,1,0,0,1,1,0,\n"), std::string::npos);
}

TEST(Batch, SeriesStartsAtGrantYear) {
  const auto g = t::three_node_chain().build();
  BatchJob job;
  job.selection = Selection::of_ids({"A"});
  job.emit_timeseries = true;
  VectorSink sink;
  run_batch(g, job, sink);
  ASSERT_EQ(sink.rows.size(), 3u);
  EXPECT_EQ(sink.rows.front().year, 2000);
  EXPECT_EQ(sink.rows.back().year, 2002);
  EXPECT_EQ(sink.rows[0].result.disruptiveness, 0.0);
  EXPECT_EQ(sink.rows[1].result.disruptiveness, 1.0);
}

TEST(Batch, BrokenSinkIsReported) {
  const auto g = t::three_node_chain().build();
  std::ostringstream out;
  out.setstate(std::ios::badbit);
  CsvResultWriter w(out);
  try {
    run_batch(g, BatchJob{}, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::sink_write_failure);
  }
}
