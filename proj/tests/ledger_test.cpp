// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#include "doctest.h"

#include <sstream>

#include "defend/ledger.hpp"

#include "test_util.hpp"

using namespace defend;

namespace {

Transaction make_transfer(const std::string& from, const std::string& to, int64_t t,
                          const ContainerId& c = testutil::container()) {
  auto a = testutil::transfer_claim(from, to, from, c, t);
  auto b = testutil::transfer_claim(from, to, to, c, t);
  a.signature = Signature{SchemeId::mock_sign, Bytes(64, 1)};
  b.signature = Signature{SchemeId::mock_sign, Bytes(64, 2)};
  return Transaction::transfer_pair(a, b);
}

Transaction make_reset(const std::string& holder, int64_t t,
                       const ContainerId& c = testutil::container()) {
  auto claim = testutil::transfer_claim("eps", holder, holder, c, t);
  claim.signer = SignerId::of(AgencyId::parse("NL"));
  claim.signature = Signature{SchemeId::mock_sign, Bytes(64, 3)};
  return Transaction::reset(claim);
}

Transaction make_package(uint8_t fill) {
  PackageClaimEnvelope env;
  env.destination = AgencyId::parse("NL");
  env.ciphertext = Bytes(80, fill);
  env.signer = OperatorId::parse("ACME");
  env.signature = Signature{SchemeId::mock_sign, Bytes(64, 4)};
  return Transaction::package(env);
}

}  // namespace

TEST_CASE("transaction shapes") {
  CHECK_NOTHROW(make_transfer("ACME", "BOLT", 100).validate_shape());
  CHECK_NOTHROW(make_reset("ACME", 100).validate_shape());
  CHECK_NOTHROW(make_package(1).validate_shape());

  // epsilon transfers are single-signature
  auto eps = testutil::transfer_claim("ACME", "eps", "ACME");
  eps.signature = Signature{SchemeId::mock_sign, Bytes(64, 5)};
  CHECK_NOTHROW(Transaction::single_transfer(eps).validate_shape());

  // a two-party transfer with a single claim is incomplete
  auto half = testutil::transfer_claim("ACME", "BOLT", "ACME");
  CHECK_THROWS_AS(Transaction::single_transfer(half).validate_shape(), Error);

  // paired claims must agree
  auto a = testutil::transfer_claim("ACME", "BOLT", "ACME");
  auto b = testutil::transfer_claim("ACME", "CARL", "CARL");
  Transaction bad = Transaction::transfer_pair(a, b);
  CHECK_THROWS_AS(bad.validate_shape(), Error);

  // resets must be agency-signed
  auto fake = make_reset("ACME", 100);
  fake.claims.front().signer = SignerId::of(OperatorId::parse("MALLORY"));
  CHECK_THROWS_AS(fake.validate_shape(), Error);

  // canonical round trip
  Transaction tx = make_transfer("ACME", "BOLT", 100);
  CHECK(Transaction::from_canonical(tx.canonical_bytes()) == tx);
  CHECK(tx.id() == Transaction::from_canonical(tx.canonical_bytes()).id());
}

TEST_CASE("append_block enforces the chain") {
  Ledger ledger;
  CHECK(ledger.height() == 0);

  Block b1 = Block::make(1, ledger.tip().hash, {make_reset("ACME", 100)});
  ledger.append_block(b1);
  CHECK(ledger.height() == 1);

  // stale prev_hash
  Block stale = Block::make(2, Block::genesis().hash, {make_transfer("ACME", "BOLT", 200)});
  CHECK_THROWS_AS(ledger.append_block(stale), Error);

  // replay of an existing block
  Block replay = b1;
  CHECK_THROWS_AS(ledger.append_block(replay), Error);

  // height skip
  Block skip = Block::make(3, ledger.tip().hash, {});
  CHECK_THROWS_AS(ledger.append_block(skip), Error);
}

TEST_CASE("latest_claim and container_history") {
  Ledger ledger;
  CHECK(ledger.latest_claim(testutil::container()) == nullptr);

  Transaction reset = make_reset("ACME", 100);
  Transaction hop1 = make_transfer("ACME", "BOLT", 200);
  Transaction hop2 = make_transfer("BOLT", "CARL", 300);
  Transaction pkg = make_package(1);

  ledger.append_block(Block::make(1, ledger.tip().hash, {reset, pkg}));
  ledger.append_block(Block::make(2, ledger.tip().hash, {hop1}));
  ledger.append_block(Block::make(3, ledger.tip().hash, {hop2, make_package(2)}));

  const Transaction* latest = ledger.latest_claim(testutil::container());
  REQUIRE(latest != nullptr);
  CHECK(*latest == hop2);
  CHECK(latest->holder() == OperatorId::parse("CARL"));

  auto history = ledger.container_history(testutil::container());
  REQUIRE(history.size() == 3);
  CHECK(*history[0] == reset);
  CHECK(*history[1] == hop1);
  CHECK(*history[2] == hop2);

  CHECK(ledger.container_history(testutil::container("AAAU000000")).empty());
}

TEST_CASE("persistence") {
  Ledger ledger;
  DetRng rng(5);
  std::vector<std::string> ops = {"A1", "B2", "C3", "D4"};
  ledger.append_block(Block::make(1, ledger.tip().hash, {make_reset(ops[0], 1)}));
  for (int h = 2; h <= 100; ++h) {
    std::vector<Transaction> txs;
    int64_t t = h * 10;
    const auto& from = ops[(h - 2) % ops.size()];
    const auto& to = ops[(h - 1) % ops.size()];
    txs.push_back(make_transfer(from, to, t));
    if (rng.chance(0.3)) txs.push_back(make_package(static_cast<uint8_t>(h)));
    ledger.append_block(Block::make(static_cast<uint64_t>(h), ledger.tip().hash, txs));
  }

  std::string text = ledger.persist_string();
  Ledger loaded = Ledger::load_string(text);
  CHECK(loaded == ledger);
  CHECK(loaded.persist_string() == text);  // bit-exact round trip

  // index is rebuilt identically on load
  auto a = ledger.container_history(testutil::container());
  auto b = loaded.container_history(testutil::container());
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);

  SUBCASE("empty input gives a genesis-only ledger") {
    Ledger empty = Ledger::load_string("");
    CHECK(empty.height() == 0);
    CHECK(empty.blocks().size() == 1);
  }

  SUBCASE("a flipped byte is detected") {
    std::string bad = text;
    auto pos = bad.find("\"weight_kg\":\"2400.000\"");
    REQUIRE(pos != std::string::npos);
    bad[pos + 14] = '5';
    CHECK_THROWS_WITH_AS((void)Ledger::load_string(bad), doctest::Contains("hash mismatch"),
                         Error);
  }

  SUBCASE("a truncated final record is detected") {
    std::string cut = text.substr(0, text.size() - 40);
    try {
      (void)Ledger::load_string(cut);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::truncated_file);
    }
  }

  SUBCASE("append-only: committed prefix bytes never change") {
    std::string before = ledger.persist_string();
    ledger.append_block(Block::make(101, ledger.tip().hash, {make_package(9)}));
    std::string after = ledger.persist_string();
    CHECK(after.substr(0, before.size()) == before);
  }
}

TEST_CASE("ledger view overlays uncommitted transactions") {
  Ledger ledger;
  ledger.append_block(Block::make(1, ledger.tip().hash, {make_reset("ACME", 100)}));

  Transaction hop = make_transfer("ACME", "BOLT", 200);
  LedgerView view(ledger);
  CHECK(view.latest_claim(testutil::container())->holder() == OperatorId::parse("ACME"));
  view.push(&hop);
  CHECK(view.latest_claim(testutil::container())->holder() == OperatorId::parse("BOLT"));
  CHECK(view.has_claim(claim_id(hop.claims[0])));
}
