// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "defend/identity.hpp"

#include "test_util.hpp"

using namespace defend;

namespace {

struct Fixture {
  MembershipRegistry members;
  KeyPair nl_sign = generate_keypair(SchemeId::ed25519, testutil::seed(1));
  KeyPair nl_seal = generate_keypair(SchemeId::x25519_sealed, testutil::seed(2));
  KeyPair de_sign = generate_keypair(SchemeId::ed25519, testutil::seed(3));
  KeyPair de_seal = generate_keypair(SchemeId::x25519_sealed, testutil::seed(4));
  KeyPair acme = generate_keypair(SchemeId::ed25519, testutil::seed(5));
  AgencyId nl = AgencyId::parse("NL");
  AgencyId de = AgencyId::parse("DE");

  Fixture() {
    members.members[nl] = {SchemeId::ed25519, nl_sign.public_key, SchemeId::x25519_sealed,
                           nl_seal.public_key};
    members.members[de] = {SchemeId::ed25519, de_sign.public_key, SchemeId::x25519_sealed,
                           de_seal.public_key};
  }
};

PackageClaim sample_package() {
  PackageClaim p;
  p.container = testutil::container();
  p.package_id = "PKG-7";
  p.sender = "Sender BV";
  p.receiver = "Receiver GmbH";
  p.time = Timestamp{1'700'000'000};
  p.location = GeoLocation::from_degrees(51.9, 4.4);
  p.weight_grams = 9'000;
  p.action = PackageAction::insert;
  p.contents = "machine parts";
  return p;
}

}  // namespace

TEST_CASE("keypair generation") {
  KeyPair a = generate_keypair(SchemeId::ed25519);
  KeyPair b = generate_keypair(SchemeId::ed25519);
  CHECK(a.public_key != b.public_key);

  Bytes msg{1, 2, 3};
  CHECK(verify(a.scheme, a.public_key, msg, sign(a, msg)));
  CHECK_FALSE(verify(b.scheme, b.public_key, msg, sign(a, msg)));

  CHECK_THROWS_AS((void)generate_keypair("rsa-4096"), Error);

  // seeded generation is reproducible
  CHECK(generate_keypair(SchemeId::ed25519, testutil::seed(9)) ==
        generate_keypair(SchemeId::ed25519, testutil::seed(9)));

  // the mock scheme behaves like a signature scheme
  KeyPair m = generate_keypair(SchemeId::mock_sign, testutil::seed(1));
  KeyPair m2 = generate_keypair(SchemeId::mock_sign, testutil::seed(2));
  Signature ms = sign(m, msg);
  CHECK(ms.bytes.size() == signature_length(SchemeId::mock_sign));
  CHECK(verify(m.scheme, m.public_key, msg, ms));
  CHECK_FALSE(verify(m2.scheme, m2.public_key, msg, ms));
}

TEST_CASE("certificate issuance") {
  Fixture f;
  CertificateAuthority ca(f.nl, f.nl_sign);
  Certificate cert = ca.issue(f.members, SignerId::of(OperatorId::parse("ACME")),
                              Role::operator_role, SchemeId::ed25519, f.acme.public_key,
                              Timestamp{0});
  CHECK(verify(SchemeId::ed25519, f.nl_sign.public_key, cert.signing_bytes(),
               cert.issuer_signature));

  Certificate second = ca.issue(f.members, SignerId::of(OperatorId::parse("BOLT")),
                                Role::operator_role, SchemeId::ed25519, f.acme.public_key,
                                Timestamp{0});
  CHECK(cert.serial != second.serial);

  // a non-member (e.g. an operator posing as a CA) cannot issue
  CHECK_THROWS_AS((void)issue_certificate(f.members, AgencyId::parse("ACME"), f.acme, 1,
                                          SignerId::of(OperatorId::parse("X")),
                                          Role::operator_role, SchemeId::ed25519,
                                          f.acme.public_key, Timestamp{0}),
                  Error);

  Certificate back = Certificate::from_wire(cert.wire_bytes());
  CHECK(back == cert);
}

TEST_CASE("revocation list semantics") {
  RevocationList crl;
  crl.issuer = AgencyId::parse("NL");
  RevocationList r1 = revoke_certificate(crl, 7);
  CHECK(r1.is_revoked(7));
  CHECK(r1.version == 1);
  RevocationList r2 = revoke_certificate(r1, 7);
  CHECK(r2.is_revoked(7));
  CHECK(r2.version == 2);  // recorded no-op still bumps the version
  RevocationList r3 = revoke_certificate(r2, 9);
  CHECK(r3.version == 3);
  CHECK(r3.revoked_serials.size() == 2);
}

TEST_CASE("verify_claim_signature") {
  Fixture f;
  CertificateAuthority ca(f.nl, f.nl_sign);
  Certificate cert = ca.issue(f.members, SignerId::of(OperatorId::parse("ACME")),
                              Role::operator_role, SchemeId::ed25519, f.acme.public_key,
                              Timestamp{0});
  CrlView crl;

  auto claim = testutil::transfer_claim("ACME", "BOLT", "ACME");
  claim.signature = sign(f.acme, claim.signing_bytes());

  CHECK(verify_claim_signature(claim, cert, f.members, crl) == std::nullopt);

  SUBCASE("revoked certificate is rejected even with a valid signature") {
    ca.revoke(cert.serial);
    crl.apply(ca.crl());
    CHECK(verify_claim_signature(claim, cert, f.members, crl) ==
          RejectReason::revoked_certificate);
  }

  SUBCASE("mutated claim fails") {
    claim.weight_grams += 1;
    CHECK(verify_claim_signature(claim, cert, f.members, crl) == RejectReason::bad_signature);
  }

  SUBCASE("signer must match certificate subject") {
    auto other = testutil::transfer_claim("ACME", "BOLT", "BOLT");
    other.signature = sign(f.acme, other.signing_bytes());
    CHECK(verify_claim_signature(other, cert, f.members, crl) == RejectReason::subject_mismatch);
  }

  SUBCASE("certificates from non-member issuers are rejected") {
    MembershipRegistry no_nl;
    no_nl.members[f.de] = *f.members.find(f.de);
    CHECK(verify_claim_signature(claim, cert, no_nl, crl) == RejectReason::bad_certificate);
  }

  SUBCASE("tampered certificate is rejected") {
    Certificate bad = cert;
    bad.subject_public_key[0] ^= 1;
    CHECK(verify_claim_signature(claim, bad, f.members, crl) == RejectReason::bad_certificate);
  }
}

TEST_CASE("package claim encryption round trip") {
  Fixture f;
  PackageClaim plain = sample_package();
  auto env = encrypt_package_claim(plain, f.nl, SchemeId::x25519_sealed, f.nl_seal.public_key,
                                   testutil::seed(42), OperatorId::parse("ACME"), f.acme);
  CHECK(env.destination == f.nl);  // routing field readable without any key

  PackageClaim out = decrypt_package_claim(env, f.nl_seal);
  CHECK(out == plain);

  CHECK_THROWS_AS((void)decrypt_package_claim(env, f.de_seal), Error);

  auto truncated = env;
  truncated.ciphertext.resize(truncated.ciphertext.size() / 2);
  CHECK_THROWS_AS((void)decrypt_package_claim(truncated, f.nl_seal), Error);

  // deterministic given the ephemeral seed
  auto env2 = encrypt_package_claim(plain, f.nl, SchemeId::x25519_sealed, f.nl_seal.public_key,
                                    testutil::seed(42), OperatorId::parse("ACME"), f.acme);
  CHECK(env2.ciphertext == env.ciphertext);

  // envelope confidentiality: exhaustive over this registry's keys
  for (const auto& kp : {f.de_seal, f.acme}) {
    CHECK_THROWS_AS((void)decrypt_package_claim(env, kp), Error);
  }
}

TEST_CASE("mock seal scheme round trips deterministically") {
  KeyPair dest = generate_keypair(SchemeId::mock_seal, testutil::seed(8));
  KeyPair other = generate_keypair(SchemeId::mock_seal, testutil::seed(9));
  Bytes pt = {10, 20, 30, 40};
  Bytes ct = seal(SchemeId::mock_seal, dest.public_key, pt, testutil::seed(1));
  CHECK(ct == seal(SchemeId::mock_seal, dest.public_key, pt, testutil::seed(1)));
  CHECK(seal_open(dest, ct) == pt);
  CHECK_FALSE(seal_open(other, ct).has_value());
}

TEST_CASE("membership voting") {
  Fixture f;
  MembershipRegistry reg = f.members;  // NL, DE
  AgencyId fr = AgencyId::parse("FR");
  reg.members[fr] = {};  // three members

  MembershipProposal add{MembershipProposal::Action::add, AgencyId::parse("US"), {}};

  SUBCASE("2 of 3 yes is a strict majority") {
    CHECK(vote_membership(reg, add, {{f.nl, true}, {f.de, true}, {fr, false}}) ==
          VoteResult::accepted);
    CHECK(reg.is_member(AgencyId::parse("US")));
  }

  SUBCASE("2 of 4 is a tie, not a majority") {
    reg.members[AgencyId::parse("US")] = {};
    MembershipProposal rm{MembershipProposal::Action::remove, fr, {}};
    CHECK(vote_membership(reg, rm,
                          {{f.nl, true}, {f.de, true}, {fr, false}, {AgencyId::parse("US"), false}}) ==
          VoteResult::rejected);
    CHECK(reg.is_member(fr));  // unchanged on reject
  }

  SUBCASE("non-member ballots are refused") {
    CHECK_THROWS_AS((void)vote_membership(reg, add, {{AgencyId::parse("XX"), true}}), Error);
  }

  SUBCASE("duplicate ballots are refused") {
    CHECK_THROWS_AS((void)vote_membership(reg, add, {{f.nl, true}, {f.nl, true}}), Error);
  }

  SUBCASE("removal is atomic") {
    MembershipProposal rm{MembershipProposal::Action::remove, fr, {}};
    CHECK(vote_membership(reg, rm, {{f.nl, true}, {f.de, true}}) == VoteResult::accepted);
    CHECK_FALSE(reg.is_member(fr));
  }
}

TEST_CASE("key, certificate, and CRL files") {
  Fixture f;
  auto dir = std::filesystem::temp_directory_path() / "defend_identity_test";
  std::filesystem::create_directories(dir);

  auto key_path = (dir / "nl.key").string();
  save_keypair(key_path, f.nl_sign);
  CHECK(load_keypair(key_path) == f.nl_sign);

  CertificateAuthority ca(f.nl, f.nl_sign);
  Certificate cert = ca.issue(f.members, SignerId::of(OperatorId::parse("ACME")),
                              Role::operator_role, SchemeId::ed25519, f.acme.public_key,
                              Timestamp{0});
  auto cert_path = (dir / "acme.cert").string();
  save_certificate(cert_path, cert);
  CHECK(load_certificate(cert_path) == cert);

  CertStore store;
  store.add(cert);
  auto store_path = (dir / "store.bin").string();
  save_cert_store(store_path, f.members, store);
  auto [members2, store2] = load_cert_store(store_path);
  CHECK(members2 == f.members);
  CHECK(store2 == store);

  // corrupt magic
  {
    std::ofstream out(key_path, std::ios::binary | std::ios::trunc);
    out << "XXXX junk";
  }
  CHECK_THROWS_AS((void)load_keypair(key_path), Error);

  // CRL round trip and time-indexed view
  std::stringstream crl_stream;
  append_crl_record(crl_stream, {f.nl, 1, 7, Timestamp{100}});
  append_crl_record(crl_stream, {f.nl, 2, 9, Timestamp{200}});
  auto records = load_crl_records(crl_stream);
  REQUIRE(records.size() == 2);
  CrlView full = crl_view_at(records);
  CHECK(full.is_revoked(f.nl, 7));
  CHECK(full.is_revoked(f.nl, 9));
  CHECK(full.version_of(f.nl) == 2);
  CrlView early = crl_view_at(records, Timestamp{150});
  CHECK(early.is_revoked(f.nl, 7));
  CHECK_FALSE(early.is_revoked(f.nl, 9));

  std::filesystem::remove_all(dir);
}
