// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

// A deliberately straight-line transcription of the container-claim
// validation rule, used as an equivalence oracle for the production
// validator. It shares only crypto primitives and data types with the
// library; chain lookups, pools, and control flow are written out here
// from scratch.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "defend/identity.hpp"
#include "defend/ledger.hpp"
#include "defend/model.hpp"

namespace oracle {

class ReferenceValidator {
 public:
  enum class Verdict { accepted, pending, rejected };

  ReferenceValidator(const defend::MembershipRegistry& members, const defend::CertStore& certs,
                     const defend::CrlView& crl,
                     std::optional<defend::Timestamp> now = std::nullopt)
      : members_(members), certs_(certs), crl_(crl), now_(now) {}

  const std::vector<defend::Transaction>& accepted() const { return accepted_; }

  Verdict submit(const defend::ContainerClaim& claim) {
    // structural sanity
    try {
      claim.validate();
    } catch (const defend::Error&) {
      return Verdict::rejected;
    }

    // signature and certificate, written out step by step
    const defend::Certificate* cert = certs_.find(claim.signer);
    if (cert == nullptr) return Verdict::rejected;
    if (claim.signer.is_agency() && cert->role != defend::Role::customs) return Verdict::rejected;
    const auto* issuer = members_.find(cert->issuer);
    if (issuer == nullptr) return Verdict::rejected;
    if (!defend::verify(issuer->sign_scheme, issuer->sign_public_key, cert->signing_bytes(),
                        cert->issuer_signature))
      return Verdict::rejected;
    if (crl_.is_revoked(cert->issuer, cert->serial)) return Verdict::rejected;
    if (claim.signer != cert->subject) return Verdict::rejected;
    if (!defend::verify(cert->subject_scheme, cert->subject_public_key, claim.signing_bytes(),
                        claim.signature))
      return Verdict::rejected;

    // impossible data
    const defend::Transaction* latest = find_latest(claim.container);
    if (!claim.location.valid()) return Verdict::rejected;
    if (!claim.signer.is_agency() && claim.weight_grams == 0) return Verdict::rejected;
    if (latest != nullptr && claim.time < latest_time(*latest)) return Verdict::rejected;
    if (now_ && claim.time.seconds > now_->seconds + 24 * 3600) return Verdict::rejected;

    // customs agencies start a new trusted chain
    if (claim.signer.is_agency()) {
      accepted_.push_back(defend::Transaction::reset(claim));
      pool_[claim.container.to_string()].clear();
      return Verdict::accepted;
    }

    // possession check against the latest accepted transaction
    if (latest == nullptr || latest->claims.front().to != claim.from) return Verdict::rejected;

    // match against the pool: same container/from/to, opposite signing side,
    // smallest claim id wins when several match
    auto& entries = pool_[claim.container.to_string()];
    bool mine_by_from = claim.signer.matches(claim.from);
    const defend::ContainerClaim* best = nullptr;
    defend::ClaimId best_id;
    for (const auto& entry : entries) {
      if (entry.container != claim.container || entry.from != claim.from || entry.to != claim.to)
        continue;
      bool entry_by_from = entry.signer.matches(entry.from);
      if (entry_by_from == mine_by_from) continue;
      defend::ClaimId id = defend::claim_id(entry);
      if (best == nullptr || id < best_id) {
        best = &entry;
        best_id = id;
      }
    }
    if (best != nullptr) {
      accepted_.push_back(defend::Transaction::transfer_pair(*best, claim));
      entries.clear();
      return Verdict::accepted;
    }

    // epsilon transfers cannot have a counterpart signer
    if (claim.from.is_epsilon() || claim.to.is_epsilon()) {
      accepted_.push_back(defend::Transaction::single_transfer(claim));
      entries.clear();
      return Verdict::accepted;
    }

    // pend, dropping exact duplicates
    defend::ClaimId mine = defend::claim_id(claim);
    for (const auto& entry : entries)
      if (defend::claim_id(entry) == mine) return Verdict::pending;
    entries.push_back(claim);
    return Verdict::pending;
  }

 private:
  const defend::Transaction* find_latest(const defend::ContainerId& container) const {
    for (auto it = accepted_.rbegin(); it != accepted_.rend(); ++it) {
      if (it->kind == defend::TxKind::package) continue;
      if (it->claims.front().container == container) return &*it;
    }
    return nullptr;
  }

  static defend::Timestamp latest_time(const defend::Transaction& tx) {
    defend::Timestamp t = tx.claims.front().time;
    for (const auto& c : tx.claims)
      if (c.time > t) t = c.time;
    return t;
  }

  const defend::MembershipRegistry& members_;
  const defend::CertStore& certs_;
  const defend::CrlView& crl_;
  std::optional<defend::Timestamp> now_;
  std::vector<defend::Transaction> accepted_;
  std::map<std::string, std::vector<defend::ContainerClaim>> pool_;
};

}  // namespace oracle
