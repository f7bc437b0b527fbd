// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "defend/crypto.hpp"
#include "defend/errors.hpp"
#include "defend/identity.hpp"
#include "defend/ledger.hpp"
#include "defend/model.hpp"
#include "defend/validation.hpp"

namespace defend::sim {

using NodeId = std::string;

struct NodeRef {
  NodeId id;
  Role role = Role::operator_role;

  bool is_customs() const { return role == Role::customs; }
  auto operator<=>(const NodeRef&) const = default;
};

// ---------------------------------------------------------------------------
// Network configuration
// ---------------------------------------------------------------------------

struct NetworkConfig {
  uint64_t seed = 0;
  uint64_t latency_min = 1;  // simulated ticks per link
  uint64_t latency_max = 3;
  double drop_rate = 0.0;

  struct Partition {
    uint64_t from_tick = 0;
    uint64_t to_tick = 0;  // inclusive
    std::set<NodeId> isolated;
  };
  std::vector<Partition> partitions;

  // per-link overrides, keyed (from, to)
  std::map<std::pair<NodeId, NodeId>, double> link_drop_rate;

  uint64_t round_ticks = 10;
  uint64_t retry_interval = 10;
  int max_retries = 50;
  uint64_t max_ticks = 60'000;
  uint64_t drain_ticks = 400;  // stop after this much progress-free time

  // simulated wall clock: epoch + tick * tick_seconds
  int64_t epoch_seconds = 1'735'689'600;  // 2025-01-01T00:00:00Z
  int64_t tick_seconds = 60;

  Timestamp time_at(uint64_t tick) const {
    return Timestamp{epoch_seconds + static_cast<int64_t>(tick) * tick_seconds};
  }
};

// ---------------------------------------------------------------------------
// Messages
// ---------------------------------------------------------------------------

struct MsgClaim {
  ContainerClaim claim;
};

struct MsgEnvelope {
  PackageClaimEnvelope envelope;
};

// A proposal is the block the proposer wants committed this round; its hash
// is exactly the block hash, so identical candidate sets propose identically.
struct MsgProposal {
  uint64_t round = 0;
  AgencyId proposer;
  uint64_t height = 0;
  Digest32 prev_hash{};
  std::vector<Transaction> transactions;
  Digest32 proposal_hash{};
};

struct MsgVote {
  uint64_t round = 0;
  AgencyId voter;
  Digest32 proposal_hash{};
  bool yes = false;
};

struct MsgCommit {
  std::shared_ptr<const Block> block;
};

struct MsgStatus {
  uint64_t tip_height = 0;
  Digest32 tip_hash{};
  std::map<AgencyId, uint64_t> crl_versions;
};

struct MsgBlockRequest {
  uint64_t from_height = 0;
};

struct MsgBlocks {
  std::vector<Block> blocks;
};

struct MsgCrlUpdate {
  RevocationList crl;
};

struct MsgCrlRequest {
  AgencyId issuer;
};

using Message = std::variant<MsgClaim, MsgEnvelope, MsgProposal, MsgVote, MsgCommit, MsgStatus,
                             MsgBlockRequest, MsgBlocks, MsgCrlUpdate, MsgCrlRequest>;

inline const char* message_kind(const Message& m) {
  switch (m.index()) {
    case 0: return "claim";
    case 1: return "envelope";
    case 2: return "proposal";
    case 3: return "vote";
    case 4: return "commit";
    case 5: return "status";
    case 6: return "block_request";
    case 7: return "blocks";
    case 8: return "crl_update";
    case 9: return "crl_request";
  }
  return "unknown";
}

inline std::string message_digest(const Message& m) {
  return std::visit(
      [](const auto& msg) -> std::string {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, MsgClaim>) return claim_id(msg.claim).hex();
        else if constexpr (std::is_same_v<T, MsgEnvelope>) return claim_id(msg.envelope).hex();
        else if constexpr (std::is_same_v<T, MsgProposal>) return to_hex(msg.proposal_hash);
        else if constexpr (std::is_same_v<T, MsgVote>)
          return std::string(msg.yes ? "yes:" : "no:") + to_hex(msg.proposal_hash);
        else if constexpr (std::is_same_v<T, MsgCommit>) return to_hex(msg.block->hash);
        else if constexpr (std::is_same_v<T, MsgStatus>) return to_hex(msg.tip_hash);
        else if constexpr (std::is_same_v<T, MsgBlockRequest>)
          return "h" + std::to_string(msg.from_height);
        else if constexpr (std::is_same_v<T, MsgBlocks>)
          return msg.blocks.empty() ? std::string("empty") : to_hex(msg.blocks.back().hash);
        else if constexpr (std::is_same_v<T, MsgCrlUpdate>)
          return msg.crl.issuer.to_string() + ":v" + std::to_string(msg.crl.version);
        else
          return msg.issuer.to_string();
      },
      m);
}

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------

struct TraceRecord {
  uint64_t tick = 0;
  std::string from;
  std::string to;
  std::string kind;  // message kind, "drop:<kind>", or "commit"
  std::string digest;
  uint64_t height = 0;  // commits only
};

inline void to_json(nlohmann::json& j, const TraceRecord& r) {
  j = nlohmann::json{{"tick", r.tick}, {"from", r.from},     {"to", r.to},
                     {"kind", r.kind}, {"digest", r.digest}, {"height", r.height}};
}

// ---------------------------------------------------------------------------
// The deterministic event network
// ---------------------------------------------------------------------------

class Node;

class SimNetwork {
 public:
  explicit SimNetwork(NetworkConfig config)
      : config_(std::move(config)), rng_(config_.seed ^ 0x9e3779b97f4a7c15ULL) {}

  const NetworkConfig& config() const { return config_; }
  uint64_t now() const { return tick_; }
  Timestamp now_time() const { return config_.time_at(tick_); }

  void register_node(NodeRef ref, Node* node);

  const std::vector<NodeRef>& customs_nodes() const { return customs_; }
  const std::vector<NodeRef>& operator_nodes() const { return operators_; }

  void send(const NodeId& from, const NodeId& to, Message message) {
    if (to == from) return;
    if (is_isolated(from, tick_) || is_isolated(to, tick_)) {
      trace_.push_back({tick_, from, to, std::string("drop:") + message_kind(message),
                        message_digest(message), 0});
      return;
    }
    double rate = config_.drop_rate;
    auto it = config_.link_drop_rate.find({from, to});
    if (it != config_.link_drop_rate.end()) rate = it->second;
    if (rate > 0 && rng_.chance(rate)) {
      trace_.push_back({tick_, from, to, std::string("drop:") + message_kind(message),
                        message_digest(message), 0});
      return;
    }
    uint64_t latency = config_.latency_min +
                       rng_.uniform(config_.latency_max - config_.latency_min + 1);
    queue_.push_back(Envelope{tick_ + std::max<uint64_t>(1, latency), next_seq_++, from, to,
                              std::move(message)});
  }

  void broadcast_customs(const NodeId& from, const Message& message) {
    for (const auto& ref : customs_) send(from, ref.id, message);
  }

  void broadcast_all(const NodeId& from, const Message& message) {
    for (const auto& ref : customs_) send(from, ref.id, message);
    for (const auto& ref : operators_) send(from, ref.id, message);
  }

  void schedule(uint64_t tick, std::function<void()> action) {
    scheduled_.emplace(tick, std::move(action));
    last_event_tick_ = std::max(last_event_tick_, tick);
  }

  void note_progress() { last_progress_tick_ = tick_; }

  void record_commit(const NodeId& node, const Block& block) {
    trace_.push_back({tick_, node, "*", "commit", to_hex(block.hash), block.height});
    auto [it, fresh] = committed_at_height_.try_emplace(block.height, block.hash);
    if (!fresh && it->second != block.hash) safety_ok_ = false;
    note_progress();
  }

  struct RunResult {
    uint64_t ticks = 0;
    bool safety_ok = true;
    bool converged = true;
  };

  RunResult run();

  const std::vector<TraceRecord>& trace() const { return trace_; }
  std::vector<TraceRecord> take_trace() { return std::move(trace_); }
  bool safety_ok() const { return safety_ok_; }

  DetRng& rng() { return rng_; }

 private:
  struct Envelope {
    uint64_t deliver_at = 0;
    uint64_t seq = 0;
    NodeId from;
    NodeId to;
    Message message;
  };

  bool is_isolated(const NodeId& id, uint64_t tick) const {
    for (const auto& p : config_.partitions)
      if (tick >= p.from_tick && tick <= p.to_tick && p.isolated.count(id)) return true;
    return false;
  }

  void deliver_due();

  NetworkConfig config_;
  DetRng rng_;
  uint64_t tick_ = 0;
  uint64_t next_seq_ = 0;
  std::deque<Envelope> queue_;  // kept sorted by (deliver_at, seq) via stable insertion
  std::multimap<uint64_t, std::function<void()>> scheduled_;
  std::map<NodeId, Node*> nodes_;
  std::vector<NodeRef> customs_;
  std::vector<NodeRef> operators_;
  std::vector<TraceRecord> trace_;
  std::map<uint64_t, Digest32> committed_at_height_;
  bool safety_ok_ = true;
  uint64_t last_event_tick_ = 0;
  uint64_t last_progress_tick_ = 0;

  friend class Node;
};

class Node {
 public:
  Node(NodeRef ref, SimNetwork* net) : ref_(std::move(ref)), net_(net) {}
  virtual ~Node() = default;

  const NodeRef& ref() const { return ref_; }
  const NodeId& id() const { return ref_.id; }

  virtual void receive(uint64_t tick, const NodeId& from, const Message& message) = 0;
  virtual void on_tick(uint64_t tick) = 0;

 protected:
  SimNetwork* net() const { return net_; }

 private:
  NodeRef ref_;
  SimNetwork* net_;
};

inline void SimNetwork::register_node(NodeRef ref, Node* node) {
  nodes_[ref.id] = node;
  if (ref.is_customs())
    customs_.push_back(ref);
  else
    operators_.push_back(ref);
  std::sort(customs_.begin(), customs_.end());
  std::sort(operators_.begin(), operators_.end());
}

inline void SimNetwork::deliver_due() {
  // queue is append-mostly; collect due envelopes in (deliver_at, seq) order
  std::vector<Envelope> due;
  for (auto it = queue_.begin(); it != queue_.end();) {
    if (it->deliver_at <= tick_) {
      due.push_back(std::move(*it));
      it = queue_.erase(it);
    } else {
      ++it;
    }
  }
  std::sort(due.begin(), due.end(),
            [](const Envelope& a, const Envelope& b) { return a.seq < b.seq; });
  for (auto& env : due) {
    auto it = nodes_.find(env.to);
    if (it == nodes_.end()) continue;
    trace_.push_back(
        {tick_, env.from, env.to, message_kind(env.message), message_digest(env.message), 0});
    it->second->receive(tick_, env.from, env.message);
  }
}

inline SimNetwork::RunResult SimNetwork::run() {
  for (tick_ = 0; tick_ <= config_.max_ticks; ++tick_) {
    deliver_due();
    auto [begin, end] = scheduled_.equal_range(tick_);
    for (auto it = begin; it != end; ++it) {
      it->second();
      note_progress();
    }
    for (const auto& ref : customs_) nodes_[ref.id]->on_tick(tick_);
    for (const auto& ref : operators_) nodes_[ref.id]->on_tick(tick_);
    if (tick_ > last_event_tick_ && tick_ - last_progress_tick_ > config_.drain_ticks) break;
  }
  RunResult result;
  result.ticks = std::min(tick_, config_.max_ticks);
  result.safety_ok = safety_ok_;
  return result;
}

// ---------------------------------------------------------------------------
// Customs node: validates claims, orders them in rounds, replicates the ledger
// ---------------------------------------------------------------------------

struct RejectionRecord {
  ClaimId claim;
  SignerId signer;
  ContainerId container;  // empty for envelopes
  RejectReason reason = RejectReason::bad_signature;
  std::string detail;
  uint64_t tick = 0;
};

class CustomsNode : public Node {
 public:
  CustomsNode(AgencyId agency, SimNetwork* net, MembershipRegistry members, CertStore certs,
              KeyPair sign_keys, KeyPair seal_keys)
      : Node(NodeRef{agency.to_string(), Role::customs}, net),
        agency_(std::move(agency)),
        members_(std::move(members)),
        certs_(std::move(certs)),
        sign_keys_(std::move(sign_keys)),
        seal_keys_(std::move(seal_keys)) {
    member_order_ = members_.member_list();
  }

  const AgencyId& agency() const { return agency_; }
  const Ledger& ledger() const { return ledger_; }
  const PoolSet& pools() const { return pools_; }
  const CrlView& crl() const { return crl_; }
  const KeyPair& seal_keys() const { return seal_keys_; }
  const std::map<ClaimId, RejectionRecord>& rejections() const { return rejections_; }
  size_t candidate_count() const { return candidates_.size(); }

  // CA action: revoke an operator certificate and gossip the new CRL.
  void revoke_operator(const OperatorId& op) {
    const Certificate* cert = certs_.find(SignerId::of(op));
    if (cert == nullptr || cert->issuer != agency_) return;
    RevocationList crl = crl_.by_issuer.count(agency_) ? crl_.by_issuer.at(agency_)
                                                       : RevocationList{agency_, 0, {}};
    crl = revoke_certificate(std::move(crl), cert->serial);
    crl_.apply(crl);
    crl_log_.push_back({agency_, crl.version, cert->serial, net()->now_time()});
    net()->note_progress();
    net()->broadcast_all(id(), MsgCrlUpdate{crl});
  }

  const std::vector<CrlRecord>& crl_log() const { return crl_log_; }

  // Agency-side submission path, used for chain resets: validate locally and
  // broadcast to the other customs nodes.
  void submit_claim(const ContainerClaim& claim) {
    handle(net()->now(), id(), MsgClaim{claim});
    net()->broadcast_customs(id(), MsgClaim{claim});
  }

  AgencyId proposer_of(uint64_t round) const {
    return member_order_[round % member_order_.size()];
  }

  // Assemble this round's proposal from validated candidates, re-checked
  // sequentially against the current chain. Returns nullopt when the node has
  // nothing to propose.
  std::optional<MsgProposal> propose_block(uint64_t round) {
    if (proposer_of(round) != agency_)
      fail(Errc::not_proposer, agency_.to_string() + " does not lead round " +
                                   std::to_string(round));
    // walk candidates in tx-id order, re-validating sequentially so that
    // in-proposal dependencies and duplicates are resolved exactly as a voter
    // will resolve them
    std::vector<Transaction> chosen;
    LedgerView view(ledger_);
    std::vector<ClaimId> dropped;
    for (const auto& [tx_id, tx] : candidates_) {
      auto outcome = validate_transaction(tx, view, context());
      if (outcome.accepted()) {
        chosen.push_back(tx);
        view.push(&tx);
      } else {
        dropped.push_back(tx_id);
        record_rejection(tx, *outcome.reason, outcome.detail);
      }
    }
    for (const auto& tx_id : dropped) drop_candidate(tx_id);
    if (!dropped.empty()) net()->note_progress();
    if (chosen.empty()) return std::nullopt;
    MsgProposal proposal;
    proposal.round = round;
    proposal.proposer = agency_;
    proposal.height = ledger_.height() + 1;
    proposal.prev_hash = ledger_.tip().hash;
    proposal.transactions = std::move(chosen);
    proposal.proposal_hash =
        Block::compute_hash(proposal.height, proposal.prev_hash, proposal.transactions);
    return proposal;
  }

  // The voting rule: a proposal gets a yes vote iff it extends this node's
  // tip and every transaction passes this node's own validation.
  bool evaluate_proposal(const MsgProposal& p) const {
    if (p.height != ledger_.height() + 1 || p.prev_hash != ledger_.tip().hash) return false;
    if (p.transactions.empty()) return false;
    if (p.proposal_hash != Block::compute_hash(p.height, p.prev_hash, p.transactions))
      return false;
    LedgerView view(ledger_);
    for (const auto& tx : p.transactions) {
      auto outcome = validate_transaction(tx, view, context());
      if (!outcome.accepted()) return false;
      view.push(&tx);
    }
    return true;
  }

  void receive(uint64_t tick, const NodeId& from, const Message& message) override {
    std::visit([&](const auto& msg) { handle(tick, from, msg); }, message);
  }

  void on_tick(uint64_t tick) override {
    if (tick % net()->config().round_ticks != 0) return;
    uint64_t round = tick / net()->config().round_ticks;
    current_round_ = round;
    my_proposal_.reset();
    yes_votes_.clear();

    if (proposer_of(round) == agency_ && !candidates_.empty()) {
      auto proposal = propose_block(round);
      if (proposal) {
        my_proposal_ = *proposal;
        yes_votes_.insert(agency_);
        net()->broadcast_customs(id(), *proposal);
        maybe_commit();
      }
    }

    // anti-entropy: one gossip partner per round
    if (member_order_.size() > 1) {
      size_t me = 0;
      while (member_order_[me] != agency_) ++me;
      size_t partner = (me + 1 + round % (member_order_.size() - 1)) % member_order_.size();
      if (member_order_[partner] != agency_) {
        MsgStatus status;
        status.tip_height = ledger_.height();
        status.tip_hash = ledger_.tip().hash;
        for (const auto& [issuer, crl] : crl_.by_issuer)
          status.crl_versions[issuer] = crl.version;
        send_to_agency(member_order_[partner], status);
      }
    }
  }

 private:
  ValidationContext context() const {
    ValidationContext ctx;
    ctx.members = &members_;
    ctx.certs = &certs_;
    ctx.crl = &crl_;
    ctx.now = net()->now_time();
    return ctx;
  }

  void send_to_agency(const AgencyId& to, Message message) {
    net()->send(id(), to.to_string(), std::move(message));
  }

  void record_rejection(const ContainerClaim& claim, RejectReason reason,
                        const std::string& detail) {
    ClaimId cid = claim_id(claim);
    rejections_[cid] = RejectionRecord{cid,    claim.signer, claim.container,
                                       reason, detail,       net()->now()};
  }

  void record_rejection(const PackageClaimEnvelope& env, RejectReason reason,
                        const std::string& detail) {
    ClaimId cid = claim_id(env);
    rejections_[cid] = RejectionRecord{cid,    SignerId::of(env.signer), ContainerId{},
                                       reason, detail,                   net()->now()};
  }

  void record_rejection(const Transaction& tx, RejectReason reason, const std::string& detail) {
    for (const auto& claim : tx.claims) record_rejection(claim, reason, detail);
    if (tx.envelope) record_rejection(*tx.envelope, reason, detail);
  }

  void add_candidate(Transaction tx) {
    ClaimId tx_id = tx.id();
    for (const auto& cid : tx.claim_ids()) {
      candidate_claims_.insert(cid);
      rejections_.erase(cid);
    }
    candidates_.emplace(tx_id, std::move(tx));
    net()->note_progress();
  }

  void drop_candidate(const ClaimId& tx_id) {
    auto it = candidates_.find(tx_id);
    if (it == candidates_.end()) return;
    for (const auto& cid : it->second.claim_ids()) candidate_claims_.erase(cid);
    candidates_.erase(it);
  }

  bool already_known(const ClaimId& cid, const ContainerId& container) const {
    if (ledger_.has_claim(cid)) return true;
    if (candidate_claims_.count(cid)) return true;
    if (!container.empty()) {
      const ValidationPool* pool = pools_.find(container);
      if (pool != nullptr && pool->contains(cid)) return true;
    }
    return false;
  }

  void handle(uint64_t tick, const NodeId&, const MsgClaim& msg) {
    const ContainerClaim& claim = msg.claim;
    ClaimId cid = claim_id(claim);
    if (already_known(cid, claim.container)) return;
    auto outcome =
        validate_container_claim(claim, pools_.for_container(claim.container), ledger_, context());
    if (outcome.accepted()) {
      Transaction tx = std::move(*outcome.transaction);
      if (!ledger_.has_transaction(tx.id())) add_candidate(std::move(tx));
    } else if (outcome.pending()) {
      rejections_.erase(cid);
      net()->note_progress();
    } else {
      record_rejection(claim, *outcome.reason, outcome.detail);
    }
    (void)tick;
  }

  void handle(uint64_t tick, const NodeId&, const MsgEnvelope& msg) {
    ClaimId cid = claim_id(msg.envelope);
    if (already_known(cid, ContainerId{})) return;
    auto outcome = validate_package_claim(msg.envelope, context());
    if (outcome.accepted()) {
      Transaction tx = std::move(*outcome.transaction);
      if (!ledger_.has_transaction(tx.id())) add_candidate(std::move(tx));
    } else {
      record_rejection(msg.envelope, *outcome.reason, outcome.detail);
    }
    (void)tick;
  }

  void handle(uint64_t, const NodeId& from, const MsgProposal& p) {
    if (p.round != current_round_) return;
    if (proposer_of(p.round) != p.proposer || p.proposer.to_string() != from) return;
    MsgVote vote;
    vote.round = p.round;
    vote.voter = agency_;
    vote.proposal_hash = p.proposal_hash;
    vote.yes = evaluate_proposal(p);
    net()->send(id(), from, vote);
  }

  void handle(uint64_t, const NodeId&, const MsgVote& vote) {
    if (!my_proposal_ || vote.round != current_round_) return;
    if (vote.proposal_hash != my_proposal_->proposal_hash) return;
    if (vote.yes) yes_votes_.insert(vote.voter);
    maybe_commit();
  }

  void maybe_commit() {
    if (!my_proposal_) return;
    if (3 * yes_votes_.size() <= 2 * member_order_.size()) return;
    Block block = Block::make(my_proposal_->height, my_proposal_->prev_hash,
                              my_proposal_->transactions);
    my_proposal_.reset();
    yes_votes_.clear();
    adopt_block(block);
    net()->broadcast_all(id(), MsgCommit{std::make_shared<Block>(std::move(block))});
  }

  void handle(uint64_t, const NodeId& from, const MsgCommit& msg) {
    const Block& block = *msg.block;
    if (block.height == ledger_.height() + 1 && block.prev_hash == ledger_.tip().hash) {
      if (block.hash_consistent()) adopt_block(block);
    } else if (block.height > ledger_.height() + 1) {
      net()->send(id(), from, MsgBlockRequest{ledger_.height() + 1});
    }
  }

  void adopt_block(const Block& block) {
    ledger_.append_block(block);
    for (const auto& tx : block.transactions) {
      drop_candidate(tx.id());
      for (const auto& cid : tx.claim_ids()) {
        candidate_claims_.erase(cid);
        rejections_.erase(cid);
      }
      if (tx.is_container_tx()) {
        auto& pool = pools_.for_container(tx.container());
        pool.clear();
      }
    }
    // my in-flight proposal, if any, no longer extends the tip
    if (my_proposal_ && my_proposal_->height <= ledger_.height()) {
      my_proposal_.reset();
      yes_votes_.clear();
    }
    net()->record_commit(id(), block);
  }

  void handle(uint64_t, const NodeId& from, const MsgStatus& status) {
    if (status.tip_height > ledger_.height())
      net()->send(id(), from, MsgBlockRequest{ledger_.height() + 1});
    for (const auto& [issuer, version] : status.crl_versions)
      if (version > crl_.version_of(issuer)) net()->send(id(), from, MsgCrlRequest{issuer});
  }

  void handle(uint64_t, const NodeId& from, const MsgBlockRequest& req) {
    if (req.from_height == 0 || req.from_height > ledger_.height()) return;
    MsgBlocks reply;
    // batched catch-up, capped per request
    constexpr uint64_t kMaxBatch = 64;
    uint64_t to = std::min(ledger_.height(), req.from_height + kMaxBatch - 1);
    for (uint64_t h = req.from_height; h <= to; ++h) reply.blocks.push_back(ledger_.blocks()[h]);
    net()->send(id(), from, std::move(reply));
  }

  void handle(uint64_t, const NodeId&, const MsgBlocks& msg) {
    for (const auto& block : msg.blocks) {
      if (block.height != ledger_.height() + 1 || block.prev_hash != ledger_.tip().hash) continue;
      if (!block.hash_consistent()) continue;
      adopt_block(block);
    }
  }

  void handle(uint64_t, const NodeId&, const MsgCrlUpdate& msg) {
    if (msg.crl.version > crl_.version_of(msg.crl.issuer)) {
      crl_.apply(msg.crl);
      net()->note_progress();
    }
  }

  void handle(uint64_t, const NodeId& from, const MsgCrlRequest& req) {
    auto it = crl_.by_issuer.find(req.issuer);
    if (it != crl_.by_issuer.end() && it->second.version > 0)
      net()->send(id(), from, MsgCrlUpdate{it->second});
  }

  AgencyId agency_;
  MembershipRegistry members_;
  CertStore certs_;
  KeyPair sign_keys_;
  KeyPair seal_keys_;
  std::vector<AgencyId> member_order_;

  Ledger ledger_;
  PoolSet pools_;
  CrlView crl_;
  std::vector<CrlRecord> crl_log_;

  std::map<ClaimId, Transaction> candidates_;
  std::set<ClaimId> candidate_claims_;
  std::map<ClaimId, RejectionRecord> rejections_;

  uint64_t current_round_ = 0;
  std::optional<MsgProposal> my_proposal_;
  std::set<AgencyId> yes_votes_;
};

// ---------------------------------------------------------------------------
// Operator node: signs and broadcasts claims, retries until committed
// ---------------------------------------------------------------------------

class OperatorNode : public Node {
 public:
  OperatorNode(OperatorId op, SimNetwork* net, KeyPair sign_keys, Certificate cert)
      : Node(NodeRef{op.to_string(), Role::operator_role}, net),
        op_(std::move(op)),
        sign_keys_(std::move(sign_keys)),
        cert_(std::move(cert)) {}

  const OperatorId& op() const { return op_; }
  const KeyPair& keys() const { return sign_keys_; }

  bool revoked() const { return crl_.is_revoked(cert_.issuer, cert_.serial); }

  // Local refusal is an error the submitting operator sees immediately;
  // nothing reaches the network.
  void submit_claim(const ContainerClaim& claim) {
    if (revoked())
      fail(Errc::revoked_actor, op_.to_string() + " holds a revoked certificate");
    enqueue(claim_id(claim), MsgClaim{claim});
  }

  void submit_envelope(const PackageClaimEnvelope& envelope) {
    if (revoked())
      fail(Errc::revoked_actor, op_.to_string() + " holds a revoked certificate");
    enqueue(claim_id(envelope), MsgEnvelope{envelope});
  }

  // Claim forgery and equivocation for adversarial scenarios: broadcast
  // whatever the caller built, valid or not.
  void submit_raw(const ClaimId& cid, Message message) { enqueue(cid, std::move(message)); }

  bool saw_committed(const ClaimId& cid) const { return committed_.count(cid) != 0; }
  size_t unconfirmed() const { return pending_.size(); }

  void receive(uint64_t, const NodeId&, const Message& message) override {
    if (const auto* commit = std::get_if<MsgCommit>(&message)) {
      for (const auto& tx : commit->block->transactions)
        for (const auto& cid : tx.claim_ids()) committed_.insert(cid);
      std::erase_if(pending_, [&](const PendingSend& p) { return committed_.count(p.id) != 0; });
    } else if (const auto* crl = std::get_if<MsgCrlUpdate>(&message)) {
      crl_.apply(crl->crl);
    }
  }

  void on_tick(uint64_t tick) override {
    for (auto& p : pending_) {
      if (tick < p.next_retry || p.retries_left <= 0) continue;
      net()->broadcast_customs(id(), p.message);
      p.next_retry = tick + net()->config().retry_interval;
      p.retries_left -= 1;
    }
    std::erase_if(pending_, [](const PendingSend& p) { return p.retries_left <= 0; });
  }

 private:
  struct PendingSend {
    ClaimId id;
    Message message;
    uint64_t next_retry = 0;
    int retries_left = 0;
  };

  void enqueue(const ClaimId& cid, Message message) {
    net()->broadcast_customs(id(), message);
    pending_.push_back(PendingSend{cid, std::move(message), net()->now() + net()->config().retry_interval,
                                   net()->config().max_retries});
  }

  OperatorId op_;
  KeyPair sign_keys_;
  Certificate cert_;
  CrlView crl_;
  std::set<ClaimId> committed_;
  std::vector<PendingSend> pending_;
};

}  // namespace defend::sim
