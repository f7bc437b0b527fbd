// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#include "doctest.h"

#include <string>

#include "defend/scenario.hpp"

using namespace defend;
using namespace defend::sim;

namespace {

const std::string kFig1 = R"(defend-scenario v1
# accepted chain -> pending claim -> matched acceptance
agency NL lat=51.95 lon=4.14
agency DE lat=53.55 lon=9.99
operator ALPHA NL lat=51.90 lon=4.48
operator BRAVO DE lat=53.54 lon=9.98
container CSQU3054383 weight=2400
at 0 reset NL CSQU3054383 ALPHA
at 20 transfer ALPHA BRAVO CSQU3054383 to.delay=20
)";

NetworkConfig config(uint64_t seed = 5) {
  NetworkConfig cfg;
  cfg.seed = seed;
  cfg.drain_ticks = 120;
  return cfg;
}

uint64_t committed(const RunReport& report, const std::string& kind) {
  auto it = report.committed.find(kind);
  return it == report.committed.end() ? 0 : it->second;
}

}  // namespace

TEST_CASE("scenario parsing") {
  Scenario s = Scenario::parse_string(kFig1);
  CHECK(s.agencies.size() == 2);
  CHECK(s.operators.size() == 2);
  CHECK(s.containers.size() == 1);
  CHECK(s.events.size() == 2);
  CHECK(s.events[1].option("to.delay") == std::string("20"));

  SUBCASE("undeclared operator") {
    CHECK_THROWS_WITH_AS(
        (void)Scenario::parse_string("defend-scenario v1\nagency NL\n"
                                     "container CSQU3054383\nat 0 reset NL CSQU3054383 GHOST\n"),
        doctest::Contains("undeclared operator"), Error);
  }

  SUBCASE("invalid container id") {
    CHECK_THROWS_AS((void)Scenario::parse_string("defend-scenario v1\nagency NL\n"
                                                 "container CSQU3054384\n"),
                    Error);
  }

  SUBCASE("decreasing ticks") {
    CHECK_THROWS_WITH_AS(
        (void)Scenario::parse_string("defend-scenario v1\nagency NL\noperator A NL\noperator B NL\n"
                                     "container CSQU3054383\n"
                                     "at 5 hole-exit A CSQU3054383\nat 3 hole-enter B CSQU3054383\n"),
        doctest::Contains("must not decrease"), Error);
  }

  SUBCASE("missing header") {
    CHECK_THROWS_AS((void)Scenario::parse_string("agency NL\n"), Error);
  }

  SUBCASE("quoted strings reach package fields") {
    Scenario q = Scenario::parse_string(
        "defend-scenario v1\nagency NL\noperator A NL\ncontainer CSQU3054383\n"
        "at 1 package A CSQU3054383 P-1 INSERT NL contents=\"two words\"\n");
    CHECK(q.events[0].option("contents") == std::string("two words"));
  }
}

TEST_CASE("the pending-then-matched flow commits one transfer") {
  Scenario s = Scenario::parse_string(kFig1);
  ScenarioRunner runner(s, config());

  // probe between the two submissions: the from-claim must be pooled
  bool pending_observed = false;
  runner.net().schedule(35, [&] {
    const auto* pool = runner.customs("NL").pools().find(ContainerId::parse("CSQU3054383"));
    pending_observed = pool != nullptr && pool->size() == 1;
  });

  RunOutput out = runner.run();
  CHECK(pending_observed);
  CHECK(out.report.ok());
  CHECK(out.report.converged);
  CHECK(committed(out.report, "RESET") == 1);
  CHECK(committed(out.report, "TRANSFER") == 1);
  CHECK(out.report.final_holders.at("CSQU3054383") == "BRAVO");
  CHECK(out.report.pool_residue.empty());
  CHECK(out.report.expected_holders.at("CSQU3054383") == "BRAVO");
}

TEST_CASE("hole exit and reentry") {
  std::string text = R"(defend-scenario v1
agency NL
operator A NL
operator B NL
container CSQU3054383
at 0 reset NL CSQU3054383 A
at 20 hole-exit A CSQU3054383
at 40 hole-enter B CSQU3054383
)";
  RunOutput out = run_scenario(Scenario::parse_string(text), config());
  CHECK(out.report.ok());
  CHECK(committed(out.report, "TRANSFER") == 2);
  CHECK(out.report.final_holders.at("CSQU3054383") == "B");

  const Ledger& ledger = out.ledgers.at("NL");
  auto history = ledger.container_history(ContainerId::parse("CSQU3054383"));
  REQUIRE(history.size() == 3);
  CHECK(history[1]->claims.front().to.is_epsilon());
  CHECK(history[2]->claims.front().from.is_epsilon());
}

TEST_CASE("hole reentry without a hole is rejected") {
  std::string text = R"(defend-scenario v1
agency NL
operator A NL
operator B NL
container CSQU3054383
at 0 reset NL CSQU3054383 A
at 20 hole-enter B CSQU3054383
)";
  auto scen = Scenario::parse_string(text);
  auto cfg = config();
  cfg.max_retries = 2;
  RunOutput out = run_scenario(scen, cfg);
  CHECK(committed(out.report, "TRANSFER") == 0);
  bool found = false;
  for (const auto& r : out.report.rejections)
    if (r.code == "NO_TRUSTED_PREDECESSOR" && r.signer == "operator:B") found = true;
  CHECK(found);
  // holder expectation unaffected: B never received the container
  CHECK(out.report.expected_holders.at("CSQU3054383") == "A");
  CHECK(out.report.ok());
}

TEST_CASE("packages reach only their destination agency") {
  std::string text = R"(defend-scenario v1
agency NL
agency DE
operator A NL
operator B DE
container CSQU3054383
at 0 reset NL CSQU3054383 A
at 10 package A CSQU3054383 P-1 INSERT DE weight=12.5 sender="Alpha BV" contents="tulip bulbs"
at 20 package A CSQU3054383 P-2 REMOVE DE
at 30 package A CSQU3054383 P-3 INSERT NL
)";
  Scenario s = Scenario::parse_string(text);
  ScenarioRunner runner(s, config());
  const KeyPair de_keys = runner.bootstrap().agency_seal.at("DE");
  const KeyPair nl_keys = runner.bootstrap().agency_seal.at("NL");
  RunOutput out = runner.run();

  CHECK(out.report.ok());
  CHECK(committed(out.report, "PACKAGE") == 3);

  const Ledger& ledger = out.ledgers.at("DE");
  auto de_route = reconstruct_route(AgencyId::parse("DE"), ContainerId::parse("CSQU3054383"),
                                    ledger, &de_keys);
  size_t readable = 0, opaque = 0;
  for (const auto& p : de_route.packages) (p.readable ? readable : opaque) += 1;
  CHECK(readable == 2);
  CHECK(opaque == 1);
  for (const auto& p : de_route.packages)
    if (p.readable) {
      CHECK(p.plain->container == ContainerId::parse("CSQU3054383"));
      CHECK((p.plain->package_id == "P-1" || p.plain->package_id == "P-2"));
      if (p.plain->package_id == "P-1") {
        CHECK(p.plain->weight_grams == 12'500);
        CHECK(p.plain->sender == "Alpha BV");
        CHECK(p.plain->contents == "tulip bulbs");
      }
    }

  auto nl_route = reconstruct_route(AgencyId::parse("NL"), ContainerId::parse("CSQU3054383"),
                                    out.ledgers.at("NL"), &nl_keys);
  size_t nl_readable = 0;
  for (const auto& p : nl_route.packages) nl_readable += p.readable ? 1 : 0;
  CHECK(nl_readable == 1);
}

TEST_CASE("revocation stops post-revocation traffic") {
  std::string text = R"(defend-scenario v1
agency NL
operator A NL
operator B NL
container CSQU3054383
at 0 reset NL CSQU3054383 A
at 20 transfer A B CSQU3054383
at 60 revoke NL A
at 100 hole-enter A CSQU3054383
at 100 transfer B A CSQU3054383
)";
  RunOutput out = run_scenario(Scenario::parse_string(text), config());

  // the pre-revocation transfer committed; nothing signed by A after the
  // revocation did
  CHECK(committed(out.report, "TRANSFER") == 1);
  CHECK(out.report.final_holders.at("CSQU3054383") == "B");
  CHECK_FALSE(out.report.local_refusals.empty());
  for (const auto& refusal : out.report.local_refusals)
    CHECK(refusal.find("REVOKED_ACTOR") != std::string::npos);
}

TEST_CASE("an equivocating operator commits at most one branch") {
  std::string text = R"(defend-scenario v1
agency NL
operator A NL
operator B NL
operator C NL
container CSQU3054383
at 0 reset NL CSQU3054383 A
at 20 equivocate A B C CSQU3054383
)";
  RunOutput out = run_scenario(Scenario::parse_string(text), config());
  CHECK(committed(out.report, "TRANSFER") == 1);
  const auto& holder = out.report.final_holders.at("CSQU3054383");
  CHECK((holder == "B" || holder == "C"));
  CHECK(out.report.safety_ok);
  CHECK(out.report.converged);
}

TEST_CASE("forged signatures never commit") {
  std::string text = R"(defend-scenario v1
agency NL
operator A NL
operator B NL
container CSQU3054383
at 0 reset NL CSQU3054383 A
at 20 forge A B CSQU3054383
)";
  auto cfg = config();
  cfg.max_retries = 2;
  RunOutput out = run_scenario(Scenario::parse_string(text), cfg);
  CHECK(committed(out.report, "TRANSFER") == 0);
  bool found = false;
  for (const auto& r : out.report.rejections)
    if (r.code == "BAD_SIGNATURE") found = true;
  CHECK(found);
}

TEST_CASE("an unmatched transfer stays pending forever") {
  std::string text = R"(defend-scenario v1
agency NL
operator A NL
operator B NL
container CSQU3054383
at 0 reset NL CSQU3054383 A
at 20 transfer A B CSQU3054383 unmatched
)";
  auto cfg = config();
  cfg.max_retries = 2;
  RunOutput out = run_scenario(Scenario::parse_string(text), cfg);
  CHECK(committed(out.report, "TRANSFER") == 0);
  CHECK(out.report.pool_residue.at("CSQU3054383") == 1);
  CHECK(out.report.ok());  // unmatched containers are excluded from holder checks
}

TEST_CASE("meta divergences between matched claims are surfaced") {
  std::string text = R"(defend-scenario v1
agency NL
operator A NL
operator B NL
container CSQU3054383 weight=2000
at 0 reset NL CSQU3054383 A
at 20 transfer A B CSQU3054383 to.weight=2010.5
)";
  RunOutput out = run_scenario(Scenario::parse_string(text), config());
  CHECK(committed(out.report, "TRANSFER") == 1);
  REQUIRE(out.report.divergences.size() == 1);
  CHECK(out.report.divergences[0].field == "weight_kg");
  CHECK(out.report.divergences[0].from_value == "2000.000");
  CHECK(out.report.divergences[0].to_value == "2010.500");
}

TEST_CASE("runs are deterministic per seed") {
  auto run_digest = [](uint64_t seed) {
    auto cfg = config(seed);
    cfg.drop_rate = 0.1;
    RunOutput out = run_scenario(Scenario::parse_string(kFig1), cfg);
    nlohmann::json j = out.report;
    std::string digest = j.dump();
    for (const auto& [id, ledger] : out.ledgers) digest += ledger.persist_string();
    digest += nlohmann::json(out.trace).dump();
    return digest;
  };
  CHECK(run_digest(77) == run_digest(77));
  CHECK(run_digest(77) != run_digest(78));
}

TEST_CASE("an empty scenario yields genesis-only ledgers and an empty report") {
  std::string text = "defend-scenario v1\nagency NL\n";
  RunOutput out = run_scenario(Scenario::parse_string(text), config());
  CHECK(out.report.ok());
  CHECK(committed(out.report, "TRANSFER") == 0);
  CHECK(out.ledgers.at("NL").height() == 0);
  CHECK(out.report.final_holders.empty());
}
