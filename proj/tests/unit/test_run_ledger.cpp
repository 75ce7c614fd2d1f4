#include <algorithm>
#include <functional>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "doctest.h"
#include "lawlab/error.hpp"
#include "support.hpp"

using namespace lawlab;
using test_support::csv;
using test_support::kHeader;

namespace {

// one run with ten checkpoints at 10%, 20%, ... of training
std::string ten_checkpoints(const std::string& id, const char* lr = "1e-3") {
  std::string out;
  for (int s = 1; s <= 10; ++s)
    out += id + ",1000,900," + std::to_string(100 * s) + "," + std::to_string(s) + ",10," + lr + "," +
           std::to_string(4.0 - 0.1 * s) + ",t\n";
  return out;
}

std::vector<std::string> keys(const Dataset& ds) {
  std::vector<std::string> out;
  for (const auto& r : ds.records) out.push_back(r.key());
  return out;
}

}  // namespace

TEST_CASE("ingest maps one CSV row to one record") {
  Dataset ds = csv(std::string(kHeader) + "r1,12582912,12000000,104857600,1000,1000,0.004,3.21,ours\n");
  REQUIRE(ds.size() == 1);
  const RunRecord& r = ds.records[0];
  CHECK(r.run_id == "r1");
  CHECK(r.n_total == 12582912);
  CHECK(r.n_nonembed == 12000000);
  CHECK(r.tokens_seen == 104857600);
  CHECK(r.step == 1000);
  CHECK(r.total_steps == 1000);
  CHECK(r.is_final());
  CHECK(r.peak_lr->text() == "0.004");
  CHECK(r.loss.value() == doctest::Approx(3.21));
  CHECK(r.source == "ours");
  CHECK_FALSE(r.arch_id.has_value());
}

TEST_CASE("ingest rejects invalid rows with their row number") {
  try {
    csv(std::string(kHeader) + "r1,10,5,100,1,1,1e-3,3.0,x\nr2,10,5,100,1,1,1e-3,-1,x\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(e.reason() == "loss must be positive");
  }
  CHECK_THROWS_AS(csv(std::string(kHeader) + "r1,10,5,0,1,1,1e-3,3.0,x\n"), ParseError);
  CHECK_THROWS_AS(csv(std::string(kHeader) + "r1,10,11,10,1,1,1e-3,3.0,x\n"), ParseError);
  CHECK_THROWS_AS(csv(std::string(kHeader) + "r1,10,5,10,3,2,1e-3,3.0,x\n"), ParseError);
  CHECK_THROWS_AS(csv(std::string(kHeader) + "r1,10,5,10,1,2,1e-3,3.0,x\nr1,10,5,20,1,2,1e-3,2.9,x\n"),
                  ParseError);
  CHECK_THROWS_AS(csv("run_id,n_total,tokens_seen,step,loss\n"), SchemaError);
}

TEST_CASE("empty input and optional fields") {
  CHECK(csv(kHeader).empty());
  Dataset ds = csv(std::string(kHeader) + "r1,10,,100,3,,,2.5,x\n");
  REQUIRE(ds.size() == 1);
  CHECK_FALSE(ds.records[0].n_nonembed);
  CHECK_FALSE(ds.records[0].total_steps);
  CHECK_FALSE(ds.records[0].peak_lr);
  CHECK_THROWS_AS(ds.records[0].n(NConvention::nonembed), MissingField);
  CHECK(ds.records[0].n(NConvention::total) == 10);
}

TEST_CASE("JSON input matches CSV input") {
  const std::string json_text =
      R"([{"run_id":"a","n_total":100,"n_nonembed":80,"tokens_seen":2000,"step":5,"total_steps":5,)"
      R"("peak_lr":"4e-3","loss":"3.1","source":"ours","arch_id":"12M"},)"
      R"({"run_id":"b","n_total":100,"tokens_seen":1000,"step":1,"loss":3.5,"source":"lit"}])";
  std::istringstream in(json_text);
  Dataset j = ingest(in, DataFormat::json);
  Dataset c = csv("run_id,n_total,n_nonembed,tokens_seen,step,total_steps,peak_lr,loss,source,arch_id\n"
                  "a,100,80,2000,5,5,4e-3,3.1,ours,12M\nb,100,,1000,1,,,3.5,lit,\n");
  REQUIRE(j.size() == 2);
  CHECK(j.records == c.records);
}

TEST_CASE("CSV round trip is byte exact") {
  const std::string text = std::string(kHeader) + ten_checkpoints("a") + "b,20,,40,1,,,3.250,lit\n";
  Dataset ds = csv(text);
  const std::string once = to_csv(ds);
  CHECK(to_csv(csv(once)) == once);
  CHECK(once.find("3.250") != std::string::npos);
}

TEST_CASE("checkpoint policies keep the expected fractions") {
  Dataset ds = csv(std::string(kHeader) + ten_checkpoints("a"));
  CHECK(filter_checkpoints(ds, CheckpointPolicy::min_fraction(0.5)).size() == 6);
  CHECK(filter_checkpoints(ds, CheckpointPolicy::min_fraction(0.2)).size() == 9);
  CHECK(filter_checkpoints(ds, CheckpointPolicy::min_fraction(0.1)).size() == 10);
  CHECK(filter_checkpoints(ds, CheckpointPolicy::all()).size() == 10);
  Dataset fin = filter_checkpoints(ds, CheckpointPolicy::final_only());
  REQUIRE(fin.size() == 1);
  CHECK(fin.records[0].step == 10);

  Dataset partial = csv(std::string(kHeader) + "x,10,,100,3,,,2.5,x\n" + ten_checkpoints("a"));
  FilterTally tally;
  CHECK(filter_checkpoints(partial, CheckpointPolicy::final_only(), &tally).size() == 1);
  CHECK(tally.missing_total_steps == 1);
}

TEST_CASE("sweep_optimal keeps the best learning rate per (N, D, step)") {
  Dataset ds = csv(std::string(kHeader) +
                   "a,100,,1000,1,1,1e-3,3.2,x\n"
                   "b,100,,1000,1,1,2e-3,3.1,x\n"
                   "c,100,,1000,1,1,4e-3,3.4,x\n");
  Dataset best = filter_lr(ds, LrPolicy::sweep_optimal());
  REQUIRE(best.size() == 1);
  CHECK(best.records[0].run_id == "b");

  Dataset tie = csv(std::string(kHeader) + "b,100,,1000,1,1,2e-3,3.1,x\na,100,,1000,1,1,1e-3,3.10,x\n");
  Dataset kept = filter_lr(tie, LrPolicy::sweep_optimal());
  REQUIRE(kept.size() == 1);
  CHECK(kept.records[0].run_id == "a");
}

TEST_CASE("fixed learning rate compares decimals exactly") {
  Dataset ds = csv(std::string(kHeader) + ten_checkpoints("a", "4e-3") + ten_checkpoints("b", "0.004") +
                   ten_checkpoints("c", "0.0040000001") + ten_checkpoints("d", "1e-3"));
  Dataset kept = filter_lr(ds, LrPolicy::fixed("4e-3"));
  CHECK(kept.size() == 20);
  for (const auto& r : kept.records) CHECK((r.run_id == "a" || r.run_id == "b"));
  CHECK(Decimal::parse("4e-3") == Decimal::parse("0.00400"));
  CHECK_FALSE(Decimal::parse("4e-3") == Decimal::parse("0.0040000001"));
}

TEST_CASE("scale filter bounds are inclusive") {
  Dataset ds = csv(std::string(kHeader) +
                   "a,100000000,,2000000000,1,1,,3,x\n"
                   "b,400000000,,8000000000,1,1,,3,x\n"
                   "c,1000000000,,20000000000,1,1,,3,x\n");
  CHECK(filter_scale(ds, std::nullopt, std::nullopt, 18.0, NConvention::total).empty());
  CHECK(filter_scale(ds, std::nullopt, 22.0, std::nullopt, NConvention::total).empty());
  CHECK(filter_scale(ds, std::nullopt, 20.0, 20.0, NConvention::total).size() == 3);
  Dataset small = filter_scale(ds, 4e8, std::nullopt, std::nullopt, NConvention::total);
  CHECK(keys(small) == std::vector<std::string>{"a@1", "b@1"});
  CHECK_THROWS_AS(filter_scale(ds, 4e8, std::nullopt, std::nullopt, NConvention::nonembed), MissingField);
}

TEST_CASE("filters are idempotent and commute") {
  std::string text = kHeader;
  std::mt19937_64 rng(3);
  const char* lrs[] = {"1e-3", "2e-3", "4e-3"};
  for (int run = 0; run < 30; ++run) {
    const std::uint64_t n = 1000 + 1000 * (rng() % 20);
    const std::uint64_t total = 4 + rng() % 6;
    const char* lr = lrs[rng() % 3];
    for (std::uint64_t s = 1; s <= total; ++s)
      text += "r" + std::to_string(run) + "," + std::to_string(n) + ",," +
              std::to_string(n * (1 + s * (rng() % 40))) + "," + std::to_string(s) + "," + std::to_string(total) +
              "," + lr + ",3." + std::to_string(rng() % 1000) + ",x\n";
  }
  const Dataset ds = csv(text);

  using F = std::function<Dataset(const Dataset&)>;
  const std::vector<F> fs = {
      [](const Dataset& d) { return filter_checkpoints(d, CheckpointPolicy::min_fraction(0.5)); },
      [](const Dataset& d) { return filter_lr(d, LrPolicy::fixed("2e-3")); },
      [](const Dataset& d) { return filter_scale(d, 15000.0, 5.0, 30.0, NConvention::total); },
  };
  for (const auto& f : fs) CHECK(keys(f(f(ds))) == keys(f(ds)));
  CHECK(keys(filter_lr(filter_lr(ds, LrPolicy::sweep_optimal()), LrPolicy::sweep_optimal())) ==
        keys(filter_lr(ds, LrPolicy::sweep_optimal())));

  std::vector<int> order = {0, 1, 2};
  const auto reference = keys(fs[2](fs[1](fs[0](ds))));
  do {
    CHECK(keys(fs[order[2]](fs[order[1]](fs[order[0]](ds)))) == reference);
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST_CASE("sweep_optimal leaves one record per key") {
  std::string text = kHeader;
  const char* lrs[] = {"1e-3", "2e-3", "4e-3", "8e-3"};
  for (int n = 0; n < 4; ++n)
    for (int k = 0; k < 4; ++k)
      for (int s = 1; s <= 3; ++s)
        text += fmt::format("n{}_lr{},{},,{},{},3,{},{},x\n", n, k, 100 * (n + 1), 1000 * s, s, lrs[k],
                            3.0 + 0.01 * ((n * 7 + k * 3 + s) % 5));
  Dataset kept = filter_lr(csv(text), LrPolicy::sweep_optimal());
  CHECK(kept.size() == 12);
  std::set<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>> seen;
  for (const auto& r : kept.records) CHECK(seen.insert({r.n_total, r.tokens_seen, r.step}).second);
}

TEST_CASE("filtering preserves order and records provenance") {
  Dataset ds = csv(std::string(kHeader) + ten_checkpoints("a") + ten_checkpoints("b"));
  FilterSpec spec;
  spec.checkpoints = CheckpointPolicy::min_fraction(0.8);
  FilterProvenance prov;
  Dataset out = apply_filters(ds, spec, &prov);
  CHECK(keys(out) == std::vector<std::string>{"a@8", "a@9", "a@10", "b@8", "b@9", "b@10"});
  CHECK(prov.input == 20);
  CHECK(prov.after_checkpoints == 6);
  CHECK(prov.after_scale == 6);
  CHECK(out.label.find("min_fraction") != std::string::npos);

  FilterSpec bad;
  bad.dn_min = 22.0;
  bad.dn_max = 18.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
