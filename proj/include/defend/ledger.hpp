// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "defend/bytes.hpp"
#include "defend/crypto.hpp"
#include "defend/errors.hpp"
#include "defend/identity.hpp"
#include "defend/model.hpp"

namespace defend {

enum class TxKind : uint8_t { transfer = 1, reset = 2, package = 3 };

inline std::string to_string(TxKind k) {
  switch (k) {
    case TxKind::transfer: return "TRANSFER";
    case TxKind::reset: return "RESET";
    case TxKind::package: return "PACKAGE";
  }
  return "UNKNOWN";
}

inline TxKind parse_tx_kind(std::string_view s) {
  if (s == "TRANSFER") return TxKind::transfer;
  if (s == "RESET") return TxKind::reset;
  if (s == "PACKAGE") return TxKind::package;
  fail(Errc::corrupt_ledger, "bad transaction kind '" + std::string(s) + "'");
}

// One committed unit: a matched pair of transfer claims, a single-signature
// epsilon transfer, a customs reset, or an opaque package envelope.
struct Transaction {
  TxKind kind = TxKind::transfer;
  std::vector<ContainerClaim> claims;           // TRANSFER (1 or 2) and RESET (1)
  std::optional<PackageClaimEnvelope> envelope;  // PACKAGE

  static Transaction transfer_pair(ContainerClaim a, ContainerClaim b) {
    Transaction tx;
    tx.kind = TxKind::transfer;
    // canonical order: the from-signed claim first
    if (a.signer.matches(a.from) || b.signer.matches(b.to))
      tx.claims = {std::move(a), std::move(b)};
    else
      tx.claims = {std::move(b), std::move(a)};
    return tx;
  }

  static Transaction single_transfer(ContainerClaim c) {
    Transaction tx;
    tx.kind = TxKind::transfer;
    tx.claims = {std::move(c)};
    return tx;
  }

  static Transaction reset(ContainerClaim c) {
    Transaction tx;
    tx.kind = TxKind::reset;
    tx.claims = {std::move(c)};
    return tx;
  }

  static Transaction package(PackageClaimEnvelope env) {
    Transaction tx;
    tx.kind = TxKind::package;
    tx.envelope = std::move(env);
    return tx;
  }

  bool is_container_tx() const { return kind != TxKind::package; }

  const ContainerId& container() const { return claims.front().container; }

  // Latest claimed holder after this transaction.
  const OperatorId& holder() const { return claims.front().to; }

  // Time used for monotonicity checks: the latest claim time in the unit.
  Timestamp time() const {
    Timestamp t = claims.front().time;
    for (const auto& c : claims)
      if (c.time > t) t = c.time;
    return t;
  }

  // Structural invariants; chain placement is the validator's job.
  void validate_shape() const {
    switch (kind) {
      case TxKind::transfer: {
        if (claims.empty() || claims.size() > 2 || envelope)
          fail(Errc::invalid_claim, "transfer must hold one or two container claims");
        for (const auto& c : claims) c.validate();
        const auto& first = claims.front();
        if (claims.size() == 2) {
          const auto& second = claims[1];
          if (first.involves_epsilon())
            fail(Errc::invalid_claim, "epsilon transfers are single-signature");
          if (first.container != second.container || first.from != second.from ||
              first.to != second.to)
            fail(Errc::invalid_claim, "paired claims must agree on container, from, and to");
          if (!(first.signer.matches(first.from) && second.signer.matches(second.to)))
            fail(Errc::invalid_claim, "paired claims must be signed by from and to");
        } else {
          if (!first.involves_epsilon())
            fail(Errc::invalid_claim, "a transfer between two real operators needs both claims");
          if (first.signer.is_agency())
            fail(Errc::invalid_claim, "operator transfers cannot be agency-signed");
        }
        break;
      }
      case TxKind::reset: {
        if (claims.size() != 1 || envelope)
          fail(Errc::invalid_claim, "reset must hold exactly one claim");
        claims.front().validate();
        if (!claims.front().signer.is_agency())
          fail(Errc::invalid_claim, "resets are signed by a customs agency");
        break;
      }
      case TxKind::package: {
        if (!claims.empty() || !envelope)
          fail(Errc::invalid_claim, "package transaction holds exactly one envelope");
        envelope->validate();
        break;
      }
    }
  }

  Bytes canonical_bytes() const {
    Encoder enc;
    enc.u8(static_cast<uint8_t>(kind));
    enc.u8(static_cast<uint8_t>(claims.size()));
    for (const auto& c : claims) enc.bytes(c.wire_bytes());
    enc.u8(envelope ? 1 : 0);
    if (envelope) enc.bytes(envelope->wire_bytes());
    return enc.take();
  }

  static Transaction from_canonical(ByteView in) {
    Decoder dec(in);
    Transaction tx;
    uint8_t kind = dec.u8();
    if (kind < 1 || kind > 3) fail(Errc::corrupt_ledger, "bad transaction kind byte");
    tx.kind = static_cast<TxKind>(kind);
    uint8_t n = dec.u8();
    for (uint8_t i = 0; i < n; ++i) tx.claims.push_back(ContainerClaim::from_wire(dec.bytes()));
    if (dec.u8() == 1) tx.envelope = PackageClaimEnvelope::from_wire(dec.bytes());
    if (!dec.done()) fail(Errc::corrupt_ledger, "trailing bytes after transaction");
    return tx;
  }

  // Content digest; also the dedup key and the proposal ordering key.
  ClaimId id() const { return ClaimId{sha256(canonical_bytes())}; }

  std::vector<ClaimId> claim_ids() const {
    std::vector<ClaimId> out;
    for (const auto& c : claims) out.push_back(claim_id(c));
    if (envelope) out.push_back(claim_id(*envelope));
    return out;
  }

  bool operator==(const Transaction&) const = default;
};

inline void to_json(nlohmann::json& j, const Transaction& tx) {
  j = nlohmann::json{{"kind", to_string(tx.kind)}};
  if (!tx.claims.empty()) j["claims"] = tx.claims;
  if (tx.envelope) j["envelope"] = *tx.envelope;
}

inline void from_json(const nlohmann::json& j, Transaction& tx) {
  tx.kind = parse_tx_kind(j.at("kind").get<std::string>());
  tx.claims.clear();
  tx.envelope.reset();
  if (j.contains("claims")) tx.claims = j.at("claims").get<std::vector<ContainerClaim>>();
  if (j.contains("envelope")) tx.envelope = j.at("envelope").get<PackageClaimEnvelope>();
}

// ---------------------------------------------------------------------------
// Blocks and the ledger
// ---------------------------------------------------------------------------

struct Block {
  uint64_t height = 0;
  Digest32 prev_hash{};
  std::vector<Transaction> transactions;
  Digest32 hash{};

  static Digest32 compute_hash(uint64_t height, const Digest32& prev,
                               const std::vector<Transaction>& txs) {
    Encoder enc;
    enc.u64(height);
    enc.raw(ByteView{prev.data(), prev.size()});
    enc.u32(static_cast<uint32_t>(txs.size()));
    for (const auto& tx : txs) enc.bytes(tx.canonical_bytes());
    return sha256(enc.view());
  }

  static Block make(uint64_t height, const Digest32& prev, std::vector<Transaction> txs) {
    Block b;
    b.height = height;
    b.prev_hash = prev;
    b.transactions = std::move(txs);
    b.hash = compute_hash(b.height, b.prev_hash, b.transactions);
    return b;
  }

  static const Block& genesis() {
    static const Block g = make(0, Digest32{}, {});
    return g;
  }

  bool hash_consistent() const { return hash == compute_hash(height, prev_hash, transactions); }

  bool operator==(const Block&) const = default;
};

inline void to_json(nlohmann::json& j, const Block& b) {
  j = nlohmann::json{{"height", b.height},
                     {"prev_hash", to_hex(b.prev_hash)},
                     {"hash", to_hex(b.hash)},
                     {"txs", b.transactions}};
}

inline void from_json(const nlohmann::json& j, Block& b) {
  b.height = j.at("height").get<uint64_t>();
  b.prev_hash = digest_from_hex(j.at("prev_hash").get<std::string>());
  b.hash = digest_from_hex(j.at("hash").get<std::string>());
  b.transactions = j.at("txs").get<std::vector<Transaction>>();
}

// Where a transaction sits in the ledger.
struct TxRef {
  uint64_t height = 0;
  size_t index = 0;
};

// Append-only hash-linked block store with a per-container index over
// TRANSFER/RESET transactions. Single writer, any number of readers.
class Ledger {
 public:
  Ledger() { blocks_.push_back(Block::genesis()); }

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& tip() const { return blocks_.back(); }
  uint64_t height() const { return blocks_.back().height; }

  void append_block(Block block) {
    if (block.prev_hash != tip().hash)
      fail(Errc::hash_chain_mismatch, "block does not chain to the current tip");
    if (block.height != tip().height + 1)
      fail(Errc::height_mismatch, "expected height " + std::to_string(tip().height + 1) +
                                      ", got " + std::to_string(block.height));
    if (!block.hash_consistent()) fail(Errc::corrupt_ledger, "block hash does not match content");
    for (size_t i = 0; i < block.transactions.size(); ++i) {
      const Transaction& tx = block.transactions[i];
      if (tx.is_container_tx())
        index_[tx.container()].push_back(TxRef{block.height, i});
      committed_ids_.insert(tx.id());
      for (const auto& cid : tx.claim_ids()) committed_claim_ids_.insert(cid);
    }
    blocks_.push_back(std::move(block));
  }

  // Most recent committed TRANSFER or RESET for the container, or null.
  const Transaction* latest_claim(const ContainerId& container) const {
    auto it = index_.find(container);
    if (it == index_.end() || it->second.empty()) return nullptr;
    const TxRef& ref = it->second.back();
    return &blocks_[ref.height].transactions[ref.index];
  }

  std::vector<const Transaction*> container_history(const ContainerId& container) const {
    std::vector<const Transaction*> out;
    auto it = index_.find(container);
    if (it == index_.end()) return out;
    out.reserve(it->second.size());
    for (const TxRef& ref : it->second) out.push_back(&blocks_[ref.height].transactions[ref.index]);
    return out;
  }

  bool has_transaction(const ClaimId& tx_id) const { return committed_ids_.count(tx_id) != 0; }
  bool has_claim(const ClaimId& cid) const { return committed_claim_ids_.count(cid) != 0; }

  // Every block, genesis included, one canonical JSON record per line.
  void persist(std::ostream& out) const {
    for (const auto& b : blocks_) out << nlohmann::json(b).dump() << '\n';
  }

  std::string persist_string() const {
    std::ostringstream out;
    persist(out);
    return out.str();
  }

  void persist_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot write '" + path + "'");
    persist(out);
  }

  // Loads and verifies the whole chain. An empty stream yields a genesis-only
  // ledger. Unparseable records are treated as truncation; hash or height
  // breaks as corruption.
  static Ledger load(std::istream& in) {
    Ledger ledger;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      Block block;
      try {
        block = nlohmann::json::parse(line).get<Block>();
      } catch (const nlohmann::json::exception&) {
        fail(Errc::truncated_file, "unparseable ledger record at line " + std::to_string(line_no));
      }
      if (!block.hash_consistent())
        fail(Errc::corrupt_ledger, "hash mismatch at line " + std::to_string(line_no));
      if (line_no == 1) {
        if (block != Block::genesis())
          fail(Errc::corrupt_ledger, "first record is not the genesis block");
        continue;
      }
      ledger.append_block(std::move(block));
    }
    return ledger;
  }

  static Ledger load_string(const std::string& text) {
    std::istringstream in(text);
    return load(in);
  }

  static Ledger load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open '" + path + "'");
    return load(in);
  }

  bool operator==(const Ledger& other) const { return blocks_ == other.blocks_; }

 private:
  std::vector<Block> blocks_;
  std::map<ContainerId, std::vector<TxRef>> index_;
  std::set<ClaimId> committed_ids_;
  std::set<ClaimId> committed_claim_ids_;
};

// A read view of a ledger plus not-yet-committed transactions, used when
// building and voting on proposals.
class LedgerView {
 public:
  explicit LedgerView(const Ledger& base) : base_(&base) {}

  void push(const Transaction* tx) { overlay_.push_back(tx); }

  const Transaction* latest_claim(const ContainerId& container) const {
    for (auto it = overlay_.rbegin(); it != overlay_.rend(); ++it)
      if ((*it)->is_container_tx() && (*it)->container() == container) return *it;
    return base_->latest_claim(container);
  }

  bool has_claim(const ClaimId& cid) const {
    for (const Transaction* tx : overlay_)
      for (const auto& existing : tx->claim_ids())
        if (existing == cid) return true;
    return base_->has_claim(cid);
  }

  const Ledger& base() const { return *base_; }

 private:
  const Ledger* base_;
  std::vector<const Transaction*> overlay_;
};

}  // namespace defend
