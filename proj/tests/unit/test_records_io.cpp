#include "enfp/error.hpp"
#include "enfp/records_io.hpp"
#include "enfp/rng.hpp"
#include "enfp/synth.hpp"

#include "doctest.h"

#include <sstream>

using namespace enfp;

namespace {

std::vector<TrialRecord> varied_records()
{
  std::vector<TrialRecord> out;
  Rng rng(21);
  for (int i = 0; i < 60; ++i) {
    TrialRecord r;
    r.trial_id = "NCT" + std::to_string(1000 + i) + (i % 7 == 0 ? ",x \"q\"" : "");
    r.m = 1 + i % 3;
    r.failure_type = i % 2 ? FailureType::A : FailureType::B;
    for (int j = 0; j < r.m; ++j) {
      EfficacyMeasure e;
      e.endpoint_index = j + 1;
      switch ((i + j) % 4) {
        case 0:
          e.z = -2.0 + 7.0 * rng.uniform();
          break;
        case 1:
          e.p_value = rng.uniform();
          e.direction_favorable = rng.uniform() < 0.8;
          e.z = p_to_z(*e.p_value, e.direction_favorable);
          break;
        case 2:
          e.censor_interval = censored_interval(0.05);
          e.p_value = 0.05;
          break;
        default:
          e.censor_interval = Interval{ -1.25, 0.5 };
          break;
      }
      r.measures.push_back(e);
    }
    RejectionPolicy p;
    if (i % 3 == 0) {
      p.mode = PolicyMode::h_threshold;
      p.h_floor = 0.9;
    } else {
      p.nominal_alpha = 0.025;
      p.critical_z = critical_values(0.025, r.m, r.failure_type);
    }
    if (i % 5 != 4)
      r.policy = p;
    if (i % 4 == 1)
      r.stratum = "oncology";
    if (i % 6 == 0)
      r.outcome = Outcome::negative;
    out.push_back(r);
  }
  return out;
}

} // namespace

TEST_SUITE("records_io")
{
  TEST_CASE("CSV round trip is lossless")
  {
    const auto records = varied_records();
    std::stringstream ss;
    write_records_csv(ss, records);
    const auto back = read_records_csv(ss);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      CAPTURE(i);
      CHECK(back[i] == records[i]);
    }
  }

  TEST_CASE("JSON round trip is lossless")
  {
    const auto records = varied_records();
    const auto doc = records_to_json(records);
    CHECK(doc.at("format") == records_json_format);
    CHECK(records_from_json(nlohmann::json::parse(doc.dump())) == records);
  }

  TEST_CASE("synthetic corpus survives both formats")
  {
    SynthConfig cfg;
    cfg.exact = 200;
    cfg.censored = 30;
    const auto corpus = make_synthetic_corpus(cfg);
    std::stringstream ss;
    write_records_csv(ss, corpus.records);
    CHECK(read_records_csv(ss) == corpus.records);
    CHECK(records_from_json(records_to_json(corpus.records)) == corpus.records);
  }

  TEST_CASE("p-values are converted to z on read")
  {
    std::istringstream in("trial_id,endpoint_index,m,failure_type,p_value,direction\n"
                          "T1,1,1,B,0.05,+\n"
                          "T2,1,1,B,0.1,-\n");
    const auto r = read_records_csv(in);
    REQUIRE(r.size() == 2);
    CHECK(*r[0].measures[0].z == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(*r[1].measures[0].z == doctest::Approx(-1.644854).epsilon(1e-6));
  }

  TEST_CASE("malformed rows name their line")
  {
    std::istringstream in("trial_id,endpoint_index,m,failure_type,z\n"
                          "T1,1,1,B,1.0\n"
                          "T2,1,1,B,oops\n");
    try {
      read_records_csv(in);
      FAIL("expected a data error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::data);
      CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
  }

  TEST_CASE("rejects z and p together, missing endpoints and empty input")
  {
    std::istringstream both("trial_id,endpoint_index,m,failure_type,z,p_value\n"
                            "T1,1,1,B,1.0,0.3\n");
    CHECK_THROWS_AS(read_records_csv(both), Error);
    std::istringstream gap("trial_id,endpoint_index,m,failure_type,z\n"
                           "T1,1,2,B,1.0\n");
    CHECK_THROWS_AS(read_records_csv(gap), Error);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_records_csv(empty), Error);
  }

  TEST_CASE("quoted CSV fields")
  {
    const auto f = split_csv_line("a,\"b,c\",\"d \"\"e\"\"\",");
    REQUIRE(f.size() == 4);
    CHECK(f[1] == "b,c");
    CHECK(f[2] == "d \"e\"");
    CHECK(f[3].empty());
  }
}
