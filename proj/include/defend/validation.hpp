// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "defend/errors.hpp"
#include "defend/identity.hpp"
#include "defend/ledger.hpp"
#include "defend/model.hpp"

namespace defend {

// Per-container set of pending, unmatched container claims.
struct ValidationPool {
  ContainerId container;
  std::map<ClaimId, ContainerClaim> pending;

  bool empty() const { return pending.empty(); }
  size_t size() const { return pending.size(); }
  void clear() { pending.clear(); }
  bool contains(const ClaimId& id) const { return pending.count(id) != 0; }
};

struct PoolSet {
  std::map<ContainerId, ValidationPool> pools;

  ValidationPool& for_container(const ContainerId& c) {
    auto& pool = pools[c];
    pool.container = c;
    return pool;
  }

  const ValidationPool* find(const ContainerId& c) const {
    auto it = pools.find(c);
    return it == pools.end() ? nullptr : &it->second;
  }

  size_t total_pending() const {
    size_t n = 0;
    for (const auto& [c, pool] : pools) n += pool.size();
    return n;
  }
};

// What a validating node knows: membership, certificates, its current CRL
// view, and (when admitting live traffic) the current clock. Without a clock
// the future-skew check is skipped, which is what replay audits want.
struct ValidationContext {
  const MembershipRegistry* members = nullptr;
  const CertStore* certs = nullptr;
  const CrlView* crl = nullptr;
  std::optional<Timestamp> now;
  int64_t future_skew_seconds = 24 * 3600;
};

// Sub-codes carried in ValidationOutcome::detail for IMPOSSIBLE_DATA.
inline constexpr const char* kDetailTimeRegression = "TIME_REGRESSION";
inline constexpr const char* kDetailFutureTime = "FUTURE_TIME";
inline constexpr const char* kDetailZeroWeight = "ZERO_WEIGHT";
inline constexpr const char* kDetailBadLocation = "BAD_LOCATION";
inline constexpr const char* kDetailMalformedClaim = "MALFORMED_CLAIM";
inline constexpr const char* kDetailDuplicateClaim = "DUPLICATE_CLAIM";

struct ValidationOutcome {
  enum class Status : uint8_t { accepted, pending, rejected };

  Status status = Status::rejected;
  std::optional<Transaction> transaction;  // set iff accepted
  std::optional<RejectReason> reason;      // set iff rejected
  std::string detail;

  bool accepted() const { return status == Status::accepted; }
  bool pending() const { return status == Status::pending; }
  bool rejected() const { return status == Status::rejected; }

  static ValidationOutcome accept(Transaction tx) {
    ValidationOutcome o;
    o.status = Status::accepted;
    o.transaction = std::move(tx);
    return o;
  }

  static ValidationOutcome pend() {
    ValidationOutcome o;
    o.status = Status::pending;
    return o;
  }

  static ValidationOutcome reject(RejectReason reason, std::string detail = {}) {
    ValidationOutcome o;
    o.status = Status::rejected;
    o.reason = reason;
    o.detail = std::move(detail);
    return o;
  }

  std::string code() const {
    if (accepted()) return "ACCEPTED";
    if (pending()) return "PENDING";
    std::string c = to_code(*reason);
    if (!detail.empty()) c += "/" + detail;
    return c;
  }
};

// ---------------------------------------------------------------------------
// Impossible-data prefilter
// ---------------------------------------------------------------------------

// Returns a detail code, or nullopt when the claim is plausible. `latest` is
// the container's most recent committed transaction, if any.
inline std::optional<const char*> prefilter_impossible(const ContainerClaim& claim,
                                                       const Transaction* latest,
                                                       const ValidationContext& ctx) {
  if (!claim.location.valid()) return kDetailBadLocation;
  if (!claim.signer.is_agency() && claim.weight_grams == 0) return kDetailZeroWeight;
  if (latest != nullptr && claim.time < latest->time()) return kDetailTimeRegression;
  if (ctx.now && claim.time.seconds > ctx.now->seconds + ctx.future_skew_seconds)
    return kDetailFutureTime;
  return std::nullopt;
}

inline std::optional<const char*> prefilter_impossible(const ContainerClaim& claim,
                                                       const Ledger& ledger,
                                                       const ValidationContext& ctx) {
  return prefilter_impossible(claim, ledger.latest_claim(claim.container), ctx);
}

// ---------------------------------------------------------------------------
// Pool matching
// ---------------------------------------------------------------------------

// A counterpart agrees on (container, from, to) and is signed by the other
// party of the transfer. Claims that differ in time, location, or weight still
// match; both versions are committed verbatim.
inline const ContainerClaim* match_in_pool(const ContainerClaim& claim,
                                           const ValidationPool& pool) {
  if (claim.involves_epsilon()) return nullptr;  // no second signer exists
  const bool signed_by_from = claim.signer.matches(claim.from);
  for (const auto& [id, candidate] : pool.pending) {
    if (candidate.container != claim.container || candidate.from != claim.from ||
        candidate.to != claim.to)
      continue;
    const bool candidate_by_from = candidate.signer.matches(candidate.from);
    if (candidate_by_from != signed_by_from) return &candidate;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Signature / certificate gate shared by both claim kinds
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<RejectReason> check_signature(const SignerId& signer, ByteView signing_bytes,
                                                   const Signature& sig,
                                                   const ValidationContext& ctx) {
  const Certificate* cert = ctx.certs ? ctx.certs->find(signer) : nullptr;
  if (cert == nullptr) return RejectReason::bad_certificate;
  if (signer.is_agency() && cert->role != Role::customs) return RejectReason::bad_certificate;
  return verify_claim_signature(signer, signing_bytes, sig, *cert, *ctx.members, *ctx.crl);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Container claim validation (the per-claim admission rule)
// ---------------------------------------------------------------------------

// Decides accept/pend/reject for one container claim against the committed
// chain and the container's validation pool. On any acceptance the pool is
// cleared. The returned transaction is what consensus should commit.
inline ValidationOutcome validate_container_claim(const ContainerClaim& claim,
                                                  ValidationPool& pool, const Ledger& ledger,
                                                  const ValidationContext& ctx) {
  if (!pool.container.empty() && pool.container != claim.container)
    fail(Errc::invalid_claim, "claim does not reference the pool's container");

  try {
    claim.validate();
  } catch (const Error&) {
    return ValidationOutcome::reject(RejectReason::impossible_data, kDetailMalformedClaim);
  }

  if (auto reason = detail::check_signature(claim.signer, claim.signing_bytes(), claim.signature, ctx))
    return ValidationOutcome::reject(*reason);

  if (auto code = prefilter_impossible(claim, ledger, ctx))
    return ValidationOutcome::reject(RejectReason::impossible_data, *code);

  // Customs agencies start a new trusted chain unconditionally.
  if (claim.signer.is_agency()) {
    pool.clear();
    return ValidationOutcome::accept(Transaction::reset(claim));
  }

  const Transaction* latest = ledger.latest_claim(claim.container);
  if (latest == nullptr || latest->holder() != claim.from)
    return ValidationOutcome::reject(RejectReason::no_trusted_predecessor);

  if (const ContainerClaim* counterpart = match_in_pool(claim, pool)) {
    Transaction tx = Transaction::transfer_pair(*counterpart, claim);
    pool.clear();
    return ValidationOutcome::accept(std::move(tx));
  }

  if (claim.involves_epsilon()) {
    pool.clear();
    return ValidationOutcome::accept(Transaction::single_transfer(claim));
  }

  pool.pending[claim_id(claim)] = claim;
  return ValidationOutcome::pend();
}

// ---------------------------------------------------------------------------
// Package claim validation
// ---------------------------------------------------------------------------

// Envelopes are accepted on signature, certificate, and routing checks alone;
// the ciphertext is never inspected.
inline ValidationOutcome validate_package_claim(const PackageClaimEnvelope& envelope,
                                                const ValidationContext& ctx) {
  try {
    envelope.validate();
  } catch (const Error&) {
    return ValidationOutcome::reject(RejectReason::impossible_data, kDetailMalformedClaim);
  }
  if (auto reason = detail::check_signature(SignerId::of(envelope.signer),
                                            envelope.signing_bytes(), envelope.signature, ctx))
    return ValidationOutcome::reject(*reason);
  if (!ctx.members->is_member(envelope.destination))
    return ValidationOutcome::reject(RejectReason::unknown_destination_agency);
  return ValidationOutcome::accept(Transaction::package(envelope));
}

// ---------------------------------------------------------------------------
// Whole-transaction validation (proposal voting and replay audit)
// ---------------------------------------------------------------------------

// Re-checks a committed or proposed transaction against a ledger view:
// structure, signatures, prefilter, chain placement, and claim-level
// deduplication. Pool state is not needed because a transaction already
// carries its matched pair.
inline ValidationOutcome validate_transaction(const Transaction& tx, const LedgerView& view,
                                              const ValidationContext& ctx) {
  try {
    tx.validate_shape();
  } catch (const Error&) {
    return ValidationOutcome::reject(RejectReason::impossible_data, kDetailMalformedClaim);
  }

  for (const auto& cid : tx.claim_ids())
    if (view.has_claim(cid))
      return ValidationOutcome::reject(RejectReason::impossible_data, kDetailDuplicateClaim);

  if (tx.kind == TxKind::package) {
    if (auto reason = detail::check_signature(SignerId::of(tx.envelope->signer),
                                              tx.envelope->signing_bytes(),
                                              tx.envelope->signature, ctx))
      return ValidationOutcome::reject(*reason);
    if (!ctx.members->is_member(tx.envelope->destination))
      return ValidationOutcome::reject(RejectReason::unknown_destination_agency);
    return ValidationOutcome::accept(tx);
  }

  const Transaction* latest = view.latest_claim(tx.container());
  for (const auto& claim : tx.claims) {
    if (auto reason = detail::check_signature(claim.signer, claim.signing_bytes(),
                                              claim.signature, ctx))
      return ValidationOutcome::reject(*reason);
    if (auto code = prefilter_impossible(claim, latest, ctx))
      return ValidationOutcome::reject(RejectReason::impossible_data, *code);
  }

  if (tx.kind == TxKind::transfer) {
    if (latest == nullptr || latest->holder() != tx.claims.front().from)
      return ValidationOutcome::reject(RejectReason::no_trusted_predecessor);
  }
  return ValidationOutcome::accept(tx);
}

}  // namespace defend
