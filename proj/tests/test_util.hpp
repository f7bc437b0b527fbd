// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "defend/crypto.hpp"
#include "defend/identity.hpp"
#include "defend/ids.hpp"
#include "defend/model.hpp"
#include "defend/validation.hpp"

namespace testutil {

inline defend::Seed32 seed(uint8_t fill) {
  defend::Seed32 s;
  s.fill(fill);
  return s;
}

inline defend::ContainerId container(std::string_view prefix = "CSQU305438") {
  return defend::ContainerId::from_prefix(prefix);
}

inline defend::ShipmentId shipment() { return defend::ShipmentId::parse("9074729-2024-03-01"); }

// A well-formed transfer claim; signature left empty unless a key is supplied.
inline defend::ContainerClaim transfer_claim(const std::string& from, const std::string& to,
                                             const std::string& signed_by,
                                             const defend::ContainerId& c = container(),
                                             int64_t time_seconds = 1'700'000'000) {
  defend::ContainerClaim claim;
  claim.container = c;
  claim.shipment = shipment();
  claim.from = from == "eps" ? defend::OperatorId::epsilon() : defend::OperatorId::parse(from);
  claim.to = to == "eps" ? defend::OperatorId::epsilon() : defend::OperatorId::parse(to);
  claim.time = defend::Timestamp{time_seconds};
  claim.location = defend::GeoLocation::from_degrees(51.95, 4.15);
  claim.weight_grams = 2'400'000;
  claim.signer = defend::SignerId::of(defend::OperatorId::parse(signed_by));
  return claim;
}

// A ready-made set of agencies and certified operators for validation and
// consensus tests.
struct World {
  defend::MembershipRegistry members;
  defend::CertStore certs;
  defend::CrlView crl;
  std::map<std::string, defend::KeyPair> operator_keys;
  std::map<std::string, defend::KeyPair> agency_sign_keys;
  std::map<std::string, defend::KeyPair> agency_seal_keys;
  std::map<std::string, defend::Certificate> certificates;  // by SignerId text

  World(const std::vector<std::string>& agencies,
        const std::vector<std::pair<std::string, std::string>>& operators_with_country,
        defend::SchemeId sign_scheme = defend::SchemeId::ed25519) {
    defend::DetRng rng(0xdef0);
    for (const auto& name : agencies) {
      auto id = defend::AgencyId::parse(name);
      agency_sign_keys[name] = defend::generate_keypair(sign_scheme, rng.seed32());
      agency_seal_keys[name] =
          defend::generate_keypair(defend::SchemeId::x25519_sealed, rng.seed32());
      members.members[id] = {sign_scheme, agency_sign_keys[name].public_key,
                             defend::SchemeId::x25519_sealed,
                             agency_seal_keys[name].public_key};
    }
    uint64_t serial = 1;
    for (const auto& name : agencies) {
      auto id = defend::AgencyId::parse(name);
      auto subject = defend::SignerId::of(id);
      auto cert = defend::issue_certificate(members, id, agency_sign_keys[name], serial++,
                                            subject, defend::Role::customs, sign_scheme,
                                            agency_sign_keys[name].public_key,
                                            defend::Timestamp{0});
      certs.add(cert);
      certificates[subject.to_string()] = cert;
    }
    for (const auto& [op, country] : operators_with_country) {
      operator_keys[op] = defend::generate_keypair(sign_scheme, rng.seed32());
      auto subject = defend::SignerId::of(defend::OperatorId::parse(op));
      auto cert = defend::issue_certificate(members, defend::AgencyId::parse(country),
                                            agency_sign_keys[country], serial++, subject,
                                            defend::Role::operator_role, sign_scheme,
                                            operator_keys[op].public_key, defend::Timestamp{0});
      certs.add(cert);
      certificates[subject.to_string()] = cert;
    }
  }

  void sign_claim(defend::ContainerClaim& claim) const {
    if (claim.signer.is_agency())
      claim.signature = sign(agency_sign_keys.at(claim.signer.id), claim.signing_bytes());
    else
      claim.signature = sign(operator_keys.at(claim.signer.id), claim.signing_bytes());
  }

  defend::ValidationContext context(std::optional<defend::Timestamp> now = std::nullopt) const {
    defend::ValidationContext ctx;
    ctx.members = &members;
    ctx.certs = &certs;
    ctx.crl = &crl;
    ctx.now = now;
    return ctx;
  }

  const defend::Certificate& cert_of(const defend::SignerId& subject) const {
    return certificates.at(subject.to_string());
  }
};

}  // namespace testutil
