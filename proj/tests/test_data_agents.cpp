#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ranassure/data_agents.hpp"
#include "ranassure/sim.hpp"

using namespace ranassure;

namespace {

KpiSample mk(Minute t, const std::string& cell, int rrc, double thr, double prb, double sinr) {
  KpiSample s;
  s.t_min = t;
  s.cell_id = cell;
  s.rrc_users = rrc;
  s.thr_mbps = thr;
  s.prb_util = prb;
  s.sinr_db = sinr;
  return s;
}

std::vector<RawRow> rows_for(Minute t, const std::string& cell, double rrc, double thr_mbps,
                             double prb, double sinr) {
  return {{static_cast<double>(t), cell, "rrc", rrc},
          {static_cast<double>(t), cell, "thr_mbps", thr_mbps},
          {static_cast<double>(t), cell, "prb", prb},
          {static_cast<double>(t), cell, "sinr_db", sinr}};
}

}  // namespace

TEST_CASE("ingest maps vendor aliases and units") {
  std::vector<RawRow> rows = {{10, "cellA", "RRC_CONN_USERS", 120},
                              {10, "cellA", "THROUGHPUT_KBPS", 59900},
                              {10, "cellA", "DL_PRB_UTIL", 67.1},
                              {10, "cellA", "SINR_DB", 14.9}};
  auto res = ingest_telemetry(rows);
  REQUIRE(res.samples.size() == 1);
  const auto& s = res.samples[0];
  CHECK(s.rrc_users == 120);
  CHECK(s.thr_mbps == doctest::Approx(59.9));
  CHECK(s.prb_util == doctest::Approx(0.671));
  CHECK(s.sinr_db == doctest::Approx(14.9));
  CHECK(res.records.empty());
}

TEST_CASE("ingest is the identity on canonical clean data") {
  auto rows = rows_for(5, "cellB", 80, 44.0, 0.39, 19.0);
  auto res = ingest_telemetry(rows);
  REQUIRE(res.samples.size() == 1);
  CHECK(res.samples[0].rrc_users == 80);
  CHECK(res.samples[0].prb_util == doctest::Approx(0.39));
  // run it through again
  std::vector<RawRow> again = rows_for(5, "cellB", res.samples[0].rrc_users,
                                       res.samples[0].thr_mbps, res.samples[0].prb_util,
                                       res.samples[0].sinr_db);
  auto res2 = ingest_telemetry(again);
  CHECK(res2.samples[0].prb_util == res.samples[0].prb_util);
  CHECK(res2.samples[0].thr_mbps == res.samples[0].thr_mbps);
}

TEST_CASE("ingest rejects out-of-range prb with a record") {
  std::vector<RawRow> rows = {{3, "cellA", "rrc", 100}, {3, "cellA", "prb", 1.3}};
  auto res = ingest_telemetry(rows);
  REQUIRE(res.samples.size() == 1);
  CHECK(res.samples[0].prb_util == doctest::Approx(0.0));  // rejected value never lands
  REQUIRE(res.records.size() == 1);
  CHECK(res.records[0].issue == IngestIssue::OutOfRange);
}

TEST_CASE("ingest flags gaps and duplicates") {
  std::vector<RawRow> rows;
  auto r1 = rows_for(1, "cellA", 100, 50, 0.4, 15);
  auto r3 = rows_for(3, "cellA", 102, 51, 0.41, 15);
  rows.insert(rows.end(), r1.begin(), r1.end());
  rows.insert(rows.end(), r3.begin(), r3.end());
  rows.push_back({3, "cellA", "prb", 0.42});  // duplicate, last wins
  auto res = ingest_telemetry(rows);
  bool saw_gap = false, saw_dup = false;
  for (const auto& r : res.records) {
    if (r.issue == IngestIssue::Gap && r.t_min == 2) saw_gap = true;
    if (r.issue == IngestIssue::Duplicate) saw_dup = true;
  }
  CHECK(saw_gap);
  CHECK(saw_dup);
  CHECK(res.samples[1].prb_util == doctest::Approx(0.42));
}

TEST_CASE("clean_and_impute fills single gaps by midpoint") {
  std::vector<KpiSample> s = {mk(56, "cellA", 100, 50, 0.50, 15),
                              mk(58, "cellA", 102, 52, 0.54, 15)};
  auto res = clean_and_impute(s);
  REQUIRE(res.series.size() == 3);
  CHECK(res.series[1].t_min == 57);
  CHECK(res.series[1].prb_util == doctest::Approx(0.52));
  CHECK(res.series[1].rrc_users == 101);
}

TEST_CASE("clean_and_impute is identity on gap-free data") {
  std::vector<KpiSample> s;
  for (Minute t = 0; t < 40; ++t) s.push_back(mk(t, "cellA", 100, 50, 0.4, 15));
  auto res = clean_and_impute(s);
  CHECK(res.series.size() == s.size());
  CHECK(res.tags.empty());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(res.series[i].prb_util == s[i].prb_util);
}

TEST_CASE("long gaps use locf and are tagged") {
  std::vector<KpiSample> s = {mk(10, "cellA", 100, 50, 0.50, 15),
                              mk(14, "cellA", 104, 52, 0.58, 15)};
  auto res = clean_and_impute(s);
  REQUIRE(res.series.size() == 5);
  CHECK(res.series[1].prb_util == doctest::Approx(0.50));
  CHECK(res.series[2].prb_util == doctest::Approx(0.50));
  bool tagged = false;
  for (const auto& t : res.tags)
    if (t.reason == AnomalyReason::MissingFilled && t.t_min == 12) tagged = true;
  CHECK(tagged);
}

TEST_CASE("outlier spike is tagged but preserved") {
  std::vector<KpiSample> s;
  DetRng rng(8);
  for (Minute t = 0; t < 60; ++t) {
    double prb = 0.40 + 0.005 * rng.next_gaussian();
    if (t == 50) prb = 0.99;
    s.push_back(mk(t, "cellA", 100, 50, prb, 15));
  }
  auto res = clean_and_impute(s);
  bool tagged = false;
  for (const auto& t : res.tags)
    if (t.reason == AnomalyReason::Outlier && t.t_min == 50 && t.kpi == Kpi::Prb) tagged = true;
  CHECK(tagged);
  CHECK(res.series[50].prb_util == doctest::Approx(0.99));
}

TEST_CASE("all-empty series is unprocessable") {
  CHECK_THROWS_AS(clean_and_impute({}), std::invalid_argument);
}

TEST_CASE("min-max normalization edges") {
  std::vector<KpiSample> train;
  for (Minute t = 0; t < 30; ++t)
    train.push_back(mk(t, "cellA", 100 + t, 40.0 + t, 0.30 + 0.01 * t, 10.0 + 0.2 * t));
  auto stats = make_norm_stats(train);

  // constant series pinned at the training minimum -> all zeros
  std::vector<KpiSample> at_min;
  for (Minute t = 0; t < 12; ++t) at_min.push_back(mk(t, "cellA", 100, 40.0, 0.30, 10.0));
  auto w_min = build_window(at_min, 11, stats);
  for (double v : w_min.values) CHECK(v == doctest::Approx(0.0));

  // constant series pinned at the training maximum -> all ones
  std::vector<KpiSample> at_max;
  for (Minute t = 0; t < 12; ++t) at_max.push_back(mk(t, "cellA", 129, 69.0, 0.59, 15.8));
  auto w_max = build_window(at_max, 11, stats);
  for (double v : w_max.values) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("window shape, order and count") {
  std::vector<KpiSample> series;
  for (Minute t = 0; t < 100; ++t)
    series.push_back(mk(t, "cellA", 100 + t % 7, 40, 0.3 + 0.001 * t, 12));
  auto stats = make_norm_stats(series);

  auto w = build_window(series, 99, stats);
  CHECK(w.t_end == 99);
  CHECK(w.values.size() == kWindowInputs);
  // row-major: row 0 is minute 90
  CHECK(w.at(0, 0) == doctest::Approx(stats.normalize(0, series[90].rrc_users)));
  CHECK(w.at(9, 2) == doctest::Approx(stats.normalize(2, series[99].prb_util)));

  auto all = build_windows(series, stats);
  CHECK(all.size() == series.size() - 9);

  CHECK_THROWS_AS(build_window(series, 5, stats), std::invalid_argument);
}

TEST_CASE("normalized training data lies in [0,1], post-drift data may exceed it") {
  auto cfg = make_reference_scenario();
  auto out = run_scenario(cfg);
  auto neighbor = out.log.cell_series("cellB");
  std::vector<KpiSample> train(neighbor.begin(), neighbor.begin() + 100);
  auto stats = make_norm_stats(train);
  for (const auto& s : train) {
    for (int k = 0; k < kKpiCount; ++k) {
      const double v = stats.normalize(k, s.kpi(static_cast<Kpi>(k)));
      CHECK(v >= -1e-12);
      CHECK(v <= 1.0 + 1e-12);
    }
  }
  // drifted neighbor PRB exceeds its training range
  CHECK(stats.normalize(2, neighbor[150].prb_util) > 1.0);
}
