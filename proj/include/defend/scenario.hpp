// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "defend/consensus.hpp"
#include "defend/crypto.hpp"
#include "defend/errors.hpp"
#include "defend/identity.hpp"
#include "defend/ledger.hpp"
#include "defend/model.hpp"
#include "defend/validation.hpp"

namespace defend::sim {

// ---------------------------------------------------------------------------
// Scenario file model. The textual schema is documented in docs/SCENARIOS.md.
// ---------------------------------------------------------------------------

struct AgencyDecl {
  std::string id;
  GeoLocation location{51'000'000, 4'000'000};
};

struct OperatorDecl {
  std::string id;
  std::string country;
  GeoLocation location{51'000'000, 4'000'000};
};

struct ContainerDecl {
  ContainerId id;
  int64_t weight_grams = 2'000'000;
  ShipmentId shipment;
};

struct Event {
  uint64_t tick = 0;
  std::string kind;
  std::vector<std::string> args;
  std::map<std::string, std::string> options;
  size_t line = 0;

  bool flag(const std::string& name) const { return options.count(name) != 0; }

  std::optional<std::string> option(const std::string& name) const {
    auto it = options.find(name);
    if (it == options.end()) return std::nullopt;
    return it->second;
  }
};

class Scenario {
 public:
  Timestamp epoch{1'735'689'600};  // 2025-01-01T00:00:00Z
  int64_t tick_seconds = 60;
  std::vector<AgencyDecl> agencies;
  std::vector<OperatorDecl> operators;
  std::vector<ContainerDecl> containers;
  std::vector<Event> events;

  static Scenario parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_error, "cannot open '" + path + "'");
    return parse(in);
  }

  static Scenario parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static Scenario parse(std::istream& in);

  void check() const;

  const OperatorDecl* find_operator(const std::string& id) const {
    for (const auto& o : operators)
      if (o.id == id) return &o;
    return nullptr;
  }

  const AgencyDecl* find_agency(const std::string& id) const {
    for (const auto& a : agencies)
      if (a.id == id) return &a;
    return nullptr;
  }

  const ContainerDecl* find_container(const std::string& id) const {
    for (const auto& c : containers)
      if (c.id.to_string() == id) return &c;
    return nullptr;
  }

  Timestamp time_at(uint64_t tick) const {
    return Timestamp{epoch.seconds + static_cast<int64_t>(tick) * tick_seconds};
  }

  uint64_t last_event_tick() const {
    uint64_t last = 0;
    for (const auto& e : events) last = std::max(last, e.tick);
    return last;
  }

  // Expected final holder per container, replayed at event level. Containers
  // touched by adversarial or incomplete events are left out; holder tracking
  // is only asserted for honest traffic.
  std::map<std::string, std::string> expected_final_holders() const;

 private:
  static std::vector<std::string> tokenize(const std::string& line, size_t line_no);
};

namespace detail {

[[noreturn]] inline void scenario_fail(size_t line, const std::string& what) {
  fail(Errc::scenario_error, "line " + std::to_string(line) + ": " + what);
}

inline int64_t parse_option_weight(const Event& e, const std::string& key, int64_t fallback) {
  auto v = e.option(key);
  return v ? parse_weight_kg(*v) : fallback;
}

}  // namespace detail

inline std::vector<std::string> Scenario::tokenize(const std::string& line, size_t line_no) {
  std::vector<std::string> tokens;
  std::string current;
  bool in_quotes = false;
  bool has_token = false;
  for (char c : line) {
    if (c == '"') {
      in_quotes = !in_quotes;
      has_token = true;
      continue;
    }
    if (!in_quotes && c == '#') break;
    if (!in_quotes && (c == ' ' || c == '\t' || c == '\r')) {
      if (has_token) tokens.push_back(current);
      current.clear();
      has_token = false;
      continue;
    }
    current.push_back(c);
    has_token = true;
  }
  if (in_quotes) detail::scenario_fail(line_no, "unterminated quote");
  if (has_token) tokens.push_back(current);
  return tokens;
}

inline Scenario Scenario::parse(std::istream& in) {
  Scenario s;
  std::string line;
  size_t line_no = 0;
  bool saw_header = false;
  uint64_t previous_tick = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = tokenize(line, line_no);
    if (tokens.empty()) continue;
    if (!saw_header) {
      if (tokens.size() != 2 || tokens[0] != "defend-scenario" || tokens[1] != "v1")
        detail::scenario_fail(line_no, "expected header 'defend-scenario v1'");
      saw_header = true;
      continue;
    }
    const std::string& kw = tokens[0];

    auto split_options = [&](size_t first_positional, size_t max_positional, Event& e) {
      for (size_t i = first_positional; i < tokens.size(); ++i) {
        auto eq = tokens[i].find('=');
        if (eq == std::string::npos) {
          if (e.args.size() >= max_positional)
            detail::scenario_fail(line_no, "unexpected token '" + tokens[i] + "'");
          e.args.push_back(tokens[i]);
        } else {
          e.options[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
        }
      }
    };

    try {
      if (kw == "epoch") {
        if (tokens.size() != 2) detail::scenario_fail(line_no, "epoch takes one timestamp");
        s.epoch = Timestamp::parse(tokens[1]);
      } else if (kw == "tick-seconds") {
        if (tokens.size() != 2) detail::scenario_fail(line_no, "tick-seconds takes one integer");
        s.tick_seconds = std::stoll(tokens[1]);
        if (s.tick_seconds <= 0) detail::scenario_fail(line_no, "tick-seconds must be positive");
      } else if (kw == "agency") {
        if (tokens.size() < 2) detail::scenario_fail(line_no, "agency takes an id");
        AgencyDecl a;
        a.id = AgencyId::parse(tokens[1]).to_string();
        Event opts;
        opts.line = line_no;
        split_options(2, 0, opts);
        if (auto lat = opts.option("lat"))
          a.location = GeoLocation::parse(*lat, opts.option("lon").value_or("4.0"));
        s.agencies.push_back(std::move(a));
      } else if (kw == "operator") {
        if (tokens.size() < 3) detail::scenario_fail(line_no, "operator takes an id and a country");
        OperatorDecl o;
        o.id = OperatorId::parse(tokens[1]).to_string();
        o.country = tokens[2];
        Event opts;
        opts.line = line_no;
        split_options(3, 0, opts);
        if (auto lat = opts.option("lat"))
          o.location = GeoLocation::parse(*lat, opts.option("lon").value_or("4.0"));
        s.operators.push_back(std::move(o));
      } else if (kw == "container") {
        if (tokens.size() < 2) detail::scenario_fail(line_no, "container takes an id");
        ContainerDecl c;
        c.id = ContainerId::parse(tokens[1]);
        Event opts;
        opts.line = line_no;
        split_options(2, 0, opts);
        c.weight_grams = detail::parse_option_weight(opts, "weight", c.weight_grams);
        std::string imo = opts.option("imo").value_or("907472");
        std::string departure = opts.option("departure").value_or("2025-01-01");
        c.shipment = ShipmentId::from_imo_body(imo, Date::parse(departure));
        s.containers.push_back(std::move(c));
      } else if (kw == "at") {
        if (tokens.size() < 3) detail::scenario_fail(line_no, "expected 'at <tick> <event> ...'");
        Event e;
        e.line = line_no;
        e.tick = std::stoull(tokens[1]);
        e.kind = tokens[2];
        split_options(3, 8, e);
        if (e.tick < previous_tick) detail::scenario_fail(line_no, "event ticks must not decrease");
        previous_tick = e.tick;
        s.events.push_back(std::move(e));
      } else {
        detail::scenario_fail(line_no, "unknown keyword '" + kw + "'");
      }
    } catch (const Error& err) {
      if (err.code() == Errc::scenario_error) throw;
      detail::scenario_fail(line_no, err.what());
    } catch (const std::exception& err) {
      detail::scenario_fail(line_no, err.what());
    }
  }
  if (!saw_header) fail(Errc::scenario_error, "missing 'defend-scenario v1' header");
  s.check();
  return s;
}

inline void Scenario::check() const {
  if (agencies.empty()) fail(Errc::scenario_error, "a scenario needs at least one agency");
  std::set<std::string> agency_ids, operator_ids, container_ids;
  for (const auto& a : agencies)
    if (!agency_ids.insert(a.id).second)
      fail(Errc::scenario_error, "duplicate agency '" + a.id + "'");
  for (const auto& o : operators) {
    if (!operator_ids.insert(o.id).second)
      fail(Errc::scenario_error, "duplicate operator '" + o.id + "'");
    if (!agency_ids.count(o.country))
      fail(Errc::scenario_error, "operator '" + o.id + "' references undeclared agency '" +
                                     o.country + "'");
  }
  for (const auto& c : containers)
    if (!container_ids.insert(c.id.to_string()).second)
      fail(Errc::scenario_error, "duplicate container '" + c.id.to_string() + "'");

  auto need_operator = [&](const Event& e, const std::string& id) {
    if (!operator_ids.count(id))
      detail::scenario_fail(e.line, "undeclared operator '" + id + "'");
  };
  auto need_agency = [&](const Event& e, const std::string& id) {
    if (!agency_ids.count(id)) detail::scenario_fail(e.line, "undeclared agency '" + id + "'");
  };
  auto need_container = [&](const Event& e, const std::string& id) {
    if (!container_ids.count(id))
      detail::scenario_fail(e.line, "undeclared container '" + id + "'");
  };
  auto need_args = [&](const Event& e, size_t n) {
    if (e.args.size() != n)
      detail::scenario_fail(e.line, e.kind + " takes " + std::to_string(n) + " arguments");
  };

  for (const auto& e : events) {
    if (e.kind == "reset") {
      need_args(e, 3);
      need_agency(e, e.args[0]);
      need_container(e, e.args[1]);
      need_operator(e, e.args[2]);
      if (auto from = e.option("from")) need_operator(e, *from);
    } else if (e.kind == "transfer") {
      need_args(e, 3);
      need_operator(e, e.args[0]);
      need_operator(e, e.args[1]);
      need_container(e, e.args[2]);
      if (e.args[0] == e.args[1]) detail::scenario_fail(e.line, "transfer needs two operators");
    } else if (e.kind == "hole-exit" || e.kind == "hole-enter") {
      need_args(e, 2);
      need_operator(e, e.args[0]);
      need_container(e, e.args[1]);
    } else if (e.kind == "package") {
      need_args(e, 5);
      need_operator(e, e.args[0]);
      need_container(e, e.args[1]);
      if (e.args[3] != "INSERT" && e.args[3] != "REMOVE")
        detail::scenario_fail(e.line, "package action must be INSERT or REMOVE");
      need_agency(e, e.args[4]);
    } else if (e.kind == "revoke") {
      need_args(e, 2);
      need_agency(e, e.args[0]);
      need_operator(e, e.args[1]);
    } else if (e.kind == "forge") {
      need_args(e, 3);
      need_operator(e, e.args[0]);
      need_operator(e, e.args[1]);
      need_container(e, e.args[2]);
    } else if (e.kind == "equivocate") {
      need_args(e, 4);
      need_operator(e, e.args[0]);
      need_operator(e, e.args[1]);
      need_operator(e, e.args[2]);
      need_container(e, e.args[3]);
    } else {
      detail::scenario_fail(e.line, "unknown event '" + e.kind + "'");
    }
  }
}

inline std::map<std::string, std::string> Scenario::expected_final_holders() const {
  std::map<std::string, std::string> holder;
  std::set<std::string> tainted;
  std::set<std::string> revoked;
  for (const auto& e : events) {
    if (e.kind == "revoke") {
      revoked.insert(e.args[1]);
      continue;
    }
    if (e.kind == "forge") continue;  // rejected traffic, no holder change
    if (e.kind == "equivocate") {
      tainted.insert(e.args[3]);
      continue;
    }
    if (e.kind == "package") continue;

    const std::string& container =
        e.kind == "reset" ? e.args[1] : (e.kind == "transfer" ? e.args[2] : e.args[1]);
    if (e.kind == "reset") {
      holder[container] = e.args[2];
    } else if (e.kind == "transfer") {
      if (e.flag("unmatched")) {
        tainted.insert(container);
        continue;
      }
      if (revoked.count(e.args[0]) || revoked.count(e.args[1])) {
        tainted.insert(container);
        continue;
      }
      auto it = holder.find(container);
      if (it != holder.end() && it->second == e.args[0]) it->second = e.args[1];
    } else if (e.kind == "hole-exit") {
      if (revoked.count(e.args[0])) {
        tainted.insert(container);
        continue;
      }
      auto it = holder.find(container);
      if (it != holder.end() && it->second == e.args[0])
        it->second = std::string(kEpsilonText);
    } else if (e.kind == "hole-enter") {
      if (revoked.count(e.args[0])) {
        tainted.insert(container);
        continue;
      }
      auto it = holder.find(container);
      if (it != holder.end() && it->second == kEpsilonText) it->second = e.args[0];
    }
  }
  for (const auto& t : tainted) holder.erase(t);
  return holder;
}

// ---------------------------------------------------------------------------
// Identity bootstrap: all keys and certificates derived from the run seed.
// ---------------------------------------------------------------------------

struct Bootstrap {
  MembershipRegistry members;
  CertStore certs;
  std::map<std::string, KeyPair> agency_sign;
  std::map<std::string, KeyPair> agency_seal;
  std::map<std::string, KeyPair> operator_sign;
};

inline Bootstrap bootstrap_identities(const Scenario& scenario, uint64_t seed) {
  Bootstrap b;
  DetRng rng(seed ^ 0xb007b007b007ULL);
  for (const auto& a : scenario.agencies) {
    b.agency_sign[a.id] = generate_keypair(SchemeId::ed25519, rng.seed32());
    b.agency_seal[a.id] = generate_keypair(SchemeId::x25519_sealed, rng.seed32());
    b.members.members[AgencyId::parse(a.id)] = {
        SchemeId::ed25519, b.agency_sign[a.id].public_key, SchemeId::x25519_sealed,
        b.agency_seal[a.id].public_key};
  }
  uint64_t serial = 1;
  for (const auto& a : scenario.agencies) {
    AgencyId id = AgencyId::parse(a.id);
    b.certs.add(issue_certificate(b.members, id, b.agency_sign[a.id], serial++,
                                  SignerId::of(id), Role::customs, SchemeId::ed25519,
                                  b.agency_sign[a.id].public_key, scenario.epoch));
  }
  for (const auto& o : scenario.operators) {
    b.operator_sign[o.id] = generate_keypair(SchemeId::ed25519, rng.seed32());
    AgencyId issuer = AgencyId::parse(o.country);
    b.certs.add(issue_certificate(b.members, issuer, b.agency_sign[o.country], serial++,
                                  SignerId::of(OperatorId::parse(o.id)), Role::operator_role,
                                  SchemeId::ed25519, b.operator_sign[o.id].public_key,
                                  scenario.epoch));
  }
  return b;
}

// ---------------------------------------------------------------------------
// Claim builders (the submission protocol)
// ---------------------------------------------------------------------------

struct ClaimMeta {
  Timestamp time;
  GeoLocation location;
  int64_t weight_grams = 0;
};

inline ContainerClaim build_container_claim(const ContainerDecl& container,
                                            const OperatorId& from, const OperatorId& to,
                                            const SignerId& signer, const ClaimMeta& meta) {
  ContainerClaim claim;
  claim.container = container.id;
  claim.shipment = container.shipment;
  claim.from = from;
  claim.to = to;
  claim.time = meta.time;
  claim.location = meta.location;
  claim.weight_grams = meta.weight_grams;
  claim.signer = signer;
  return claim;
}

// Dual-party transfer: X's and Y's independently signed views of one handoff.
inline std::pair<ContainerClaim, ContainerClaim> build_transfer(
    const ContainerDecl& container, const OperatorId& from, const OperatorId& to,
    const ClaimMeta& from_meta, const ClaimMeta& to_meta, const KeyPair& from_keys,
    const KeyPair& to_keys) {
  ContainerClaim by_from =
      build_container_claim(container, from, to, SignerId::of(from), from_meta);
  by_from.signature = sign(from_keys, by_from.signing_bytes());
  ContainerClaim by_to = build_container_claim(container, from, to, SignerId::of(to), to_meta);
  by_to.signature = sign(to_keys, by_to.signing_bytes());
  return {std::move(by_from), std::move(by_to)};
}

inline ContainerClaim build_hole_exit(const ContainerDecl& container, const OperatorId& holder,
                                      const ClaimMeta& meta, const KeyPair& keys) {
  ContainerClaim claim = build_container_claim(container, holder, OperatorId::epsilon(),
                                               SignerId::of(holder), meta);
  claim.signature = sign(keys, claim.signing_bytes());
  return claim;
}

inline ContainerClaim build_hole_enter(const ContainerDecl& container, const OperatorId& receiver,
                                       const ClaimMeta& meta, const KeyPair& keys) {
  ContainerClaim claim = build_container_claim(container, OperatorId::epsilon(), receiver,
                                               SignerId::of(receiver), meta);
  claim.signature = sign(keys, claim.signing_bytes());
  return claim;
}

inline ContainerClaim build_reset(const ContainerDecl& container, const AgencyId& agency,
                                  const OperatorId& from, const OperatorId& holder,
                                  const ClaimMeta& meta, const KeyPair& agency_keys) {
  ContainerClaim claim =
      build_container_claim(container, from, holder, SignerId::of(agency), meta);
  claim.signature = sign(agency_keys, claim.signing_bytes());
  return claim;
}

// ---------------------------------------------------------------------------
// Run report
// ---------------------------------------------------------------------------

struct RunReport {
  std::map<std::string, uint64_t> committed;  // by transaction kind
  struct Rejection {
    std::string claim;
    std::string signer;
    std::string container;
    std::string code;
  };
  std::vector<Rejection> rejections;
  std::vector<std::string> local_refusals;
  std::map<std::string, std::string> final_holders;
  std::map<std::string, std::string> expected_holders;
  std::map<std::string, uint64_t> pool_residue;
  std::map<std::string, std::string> tips;
  bool converged = false;
  bool safety_ok = false;
  struct Divergence {
    std::string container;
    std::string tx;
    std::string field;
    std::string from_value;
    std::string to_value;
  };
  std::vector<Divergence> divergences;
  uint64_t ticks = 0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

inline void to_json(nlohmann::json& j, const RunReport::Rejection& r) {
  j = nlohmann::json{
      {"claim", r.claim}, {"signer", r.signer}, {"container", r.container}, {"code", r.code}};
}

inline void to_json(nlohmann::json& j, const RunReport::Divergence& d) {
  j = nlohmann::json{{"container", d.container},
                     {"tx", d.tx},
                     {"field", d.field},
                     {"from_value", d.from_value},
                     {"to_value", d.to_value}};
}

inline void to_json(nlohmann::json& j, const RunReport& r) {
  j = nlohmann::json{{"committed", r.committed},
                     {"rejections", r.rejections},
                     {"local_refusals", r.local_refusals},
                     {"final_holders", r.final_holders},
                     {"expected_holders", r.expected_holders},
                     {"pool_residue", r.pool_residue},
                     {"tips", r.tips},
                     {"converged", r.converged},
                     {"safety_ok", r.safety_ok},
                     {"divergences", r.divergences},
                     {"ticks", r.ticks},
                     {"violations", r.violations}};
}

// ---------------------------------------------------------------------------
// Scenario runner
// ---------------------------------------------------------------------------

struct RunOutput {
  RunReport report;
  std::map<std::string, Ledger> ledgers;  // by agency id
  std::vector<TraceRecord> trace;
  MembershipRegistry members;
  CertStore certs;
  std::vector<CrlRecord> crl_records;
};

class ScenarioRunner {
 public:
  ScenarioRunner(const Scenario& scenario, NetworkConfig config)
      : scenario_(scenario), bootstrap_(bootstrap_identities(scenario, config.seed)) {
    config.epoch_seconds = scenario.epoch.seconds;
    config.tick_seconds = scenario.tick_seconds;
    if (config.max_ticks == NetworkConfig{}.max_ticks) {
      config.max_ticks = scenario.last_event_tick() + 200 * config.round_ticks;
    }
    net_ = std::make_unique<SimNetwork>(std::move(config));
    wire_nodes();
    schedule_events();
  }

  RunOutput run() {
    auto result = net_->run();
    return collect(result);
  }

  SimNetwork& net() { return *net_; }
  CustomsNode& customs(const std::string& id) { return *customs_.at(id); }
  OperatorNode& op(const std::string& id) { return *operators_.at(id); }
  const Bootstrap& bootstrap() const { return bootstrap_; }

 private:
  void wire_nodes() {
    for (const auto& a : scenario_.agencies) {
      auto node = std::make_unique<CustomsNode>(
          AgencyId::parse(a.id), net_.get(), bootstrap_.members, bootstrap_.certs,
          bootstrap_.agency_sign.at(a.id), bootstrap_.agency_seal.at(a.id));
      net_->register_node(node->ref(), node.get());
      customs_[a.id] = std::move(node);
    }
    for (const auto& o : scenario_.operators) {
      OperatorId op = OperatorId::parse(o.id);
      auto node = std::make_unique<OperatorNode>(
          op, net_.get(), bootstrap_.operator_sign.at(o.id),
          *bootstrap_.certs.find(SignerId::of(op)));
      net_->register_node(node->ref(), node.get());
      operators_[o.id] = std::move(node);
    }
  }

  ClaimMeta meta_for(const Event& e, const ContainerDecl& container, const std::string& actor,
                     bool counterparty) {
    const std::string prefix = counterparty ? "to." : "";
    ClaimMeta meta;
    int64_t offset = 0;
    if (auto v = e.option(prefix + "time-offset")) offset = std::stoll(*v);
    meta.time = Timestamp{scenario_.time_at(e.tick).seconds + offset};
    GeoLocation loc{51'000'000, 4'000'000};
    if (const auto* op = scenario_.find_operator(actor)) loc = op->location;
    if (const auto* ag = scenario_.find_agency(actor)) loc = ag->location;
    auto lat = e.option(prefix + "lat");
    auto lon = e.option(prefix + "lon");
    if (lat || lon)
      loc = GeoLocation::parse(lat.value_or(loc.lat_string()), lon.value_or(loc.lon_string()));
    meta.location = loc;
    meta.weight_grams = container.weight_grams;
    if (auto v = e.option("weight")) meta.weight_grams = parse_weight_kg(*v);
    if (counterparty)
      if (auto v = e.option("to.weight")) meta.weight_grams = parse_weight_kg(*v);
    return meta;
  }

  void submit_guarded(const std::string& op_id, const ContainerClaim& claim) {
    try {
      operators_.at(op_id)->submit_claim(claim);
    } catch (const Error& e) {
      local_refusals_.push_back(op_id + " " + claim_id(claim).hex().substr(0, 16) + " " +
                                std::string(to_string(e.code())));
    }
  }

  void schedule_events() {
    DetRng package_rng(net_->config().seed ^ 0x9acca9e5ULL);
    for (const auto& e : scenario_.events) {
      const Event ev = e;
      if (ev.kind == "reset") {
        const ContainerDecl& c = *scenario_.find_container(ev.args[1]);
        AgencyId agency = AgencyId::parse(ev.args[0]);
        OperatorId from = OperatorId::epsilon();
        if (auto f = ev.option("from")) from = OperatorId::parse(*f);
        OperatorId holder = OperatorId::parse(ev.args[2]);
        ClaimMeta meta = meta_for(ev, c, ev.args[0], false);
        ContainerClaim claim =
            build_reset(c, agency, from, holder, meta, bootstrap_.agency_sign.at(ev.args[0]));
        net_->schedule(ev.tick,
                       [this, id = ev.args[0], claim] { customs_.at(id)->submit_claim(claim); });
      } else if (ev.kind == "transfer") {
        const ContainerDecl& c = *scenario_.find_container(ev.args[2]);
        OperatorId from = OperatorId::parse(ev.args[0]);
        OperatorId to = OperatorId::parse(ev.args[1]);
        auto [by_from, by_to] = build_transfer(
            c, from, to, meta_for(ev, c, ev.args[0], false), meta_for(ev, c, ev.args[0], true),
            bootstrap_.operator_sign.at(ev.args[0]), bootstrap_.operator_sign.at(ev.args[1]));
        bool unmatched = ev.flag("unmatched");
        uint64_t delay = 0;  // "to.delay" staggers the counterpart signature
        if (auto d = ev.option("to.delay")) delay = std::stoull(*d);
        net_->schedule(ev.tick, [this, a = ev.args[0], by_from] { submit_guarded(a, by_from); });
        if (!unmatched)
          net_->schedule(ev.tick + delay,
                         [this, b = ev.args[1], by_to] { submit_guarded(b, by_to); });
      } else if (ev.kind == "hole-exit") {
        const ContainerDecl& c = *scenario_.find_container(ev.args[1]);
        ContainerClaim claim =
            build_hole_exit(c, OperatorId::parse(ev.args[0]), meta_for(ev, c, ev.args[0], false),
                            bootstrap_.operator_sign.at(ev.args[0]));
        net_->schedule(ev.tick, [this, a = ev.args[0], claim] { submit_guarded(a, claim); });
      } else if (ev.kind == "hole-enter") {
        const ContainerDecl& c = *scenario_.find_container(ev.args[1]);
        ContainerClaim claim =
            build_hole_enter(c, OperatorId::parse(ev.args[0]), meta_for(ev, c, ev.args[0], false),
                             bootstrap_.operator_sign.at(ev.args[0]));
        net_->schedule(ev.tick, [this, a = ev.args[0], claim] { submit_guarded(a, claim); });
      } else if (ev.kind == "package") {
        const ContainerDecl& c = *scenario_.find_container(ev.args[1]);
        PackageClaim plain;
        plain.container = c.id;
        plain.package_id = ev.args[2];
        plain.action = parse_package_action(ev.args[3]);
        plain.sender = ev.option("sender").value_or("unnamed sender");
        plain.receiver = ev.option("receiver").value_or("unnamed receiver");
        plain.contents = ev.option("contents").value_or("general cargo");
        ClaimMeta meta = meta_for(ev, c, ev.args[0], false);
        plain.time = meta.time;
        plain.location = meta.location;
        plain.weight_grams = detail::parse_option_weight(ev, "weight", 10'000);
        AgencyId destination = AgencyId::parse(ev.args[4]);
        const auto* keys = bootstrap_.members.find(destination);
        PackageClaimEnvelope envelope = encrypt_package_claim(
            plain, destination, keys->seal_scheme, keys->seal_public_key, package_rng.seed32(),
            OperatorId::parse(ev.args[0]), bootstrap_.operator_sign.at(ev.args[0]));
        net_->schedule(ev.tick, [this, a = ev.args[0], envelope] {
          try {
            operators_.at(a)->submit_envelope(envelope);
          } catch (const Error& e) {
            local_refusals_.push_back(a + " " + claim_id(envelope).hex().substr(0, 16) + " " +
                                      std::string(to_string(e.code())));
          }
        });
      } else if (ev.kind == "revoke") {
        net_->schedule(ev.tick, [this, agency = ev.args[0], op = ev.args[1]] {
          customs_.at(agency)->revoke_operator(OperatorId::parse(op));
        });
      } else if (ev.kind == "forge") {
        const ContainerDecl& c = *scenario_.find_container(ev.args[2]);
        ContainerClaim claim = build_container_claim(
            c, OperatorId::parse(ev.args[0]), OperatorId::parse(ev.args[1]),
            SignerId::of(OperatorId::parse(ev.args[0])), meta_for(ev, c, ev.args[0], false));
        KeyPair stray = generate_keypair(SchemeId::ed25519, package_rng.seed32());
        claim.signature = sign(stray, claim.signing_bytes());
        net_->schedule(ev.tick, [this, a = ev.args[0], claim] {
          operators_.at(a)->submit_raw(claim_id(claim), MsgClaim{claim});
        });
      } else if (ev.kind == "equivocate") {
        const ContainerDecl& c = *scenario_.find_container(ev.args[3]);
        OperatorId from = OperatorId::parse(ev.args[0]);
        for (int branch = 0; branch < 2; ++branch) {
          const std::string& to_id = ev.args[1 + branch];
          auto [by_from, by_to] = build_transfer(
              c, from, OperatorId::parse(to_id), meta_for(ev, c, ev.args[0], false),
              meta_for(ev, c, ev.args[0], true), bootstrap_.operator_sign.at(ev.args[0]),
              bootstrap_.operator_sign.at(to_id));
          net_->schedule(ev.tick, [this, a = ev.args[0], by_from] { submit_guarded(a, by_from); });
          net_->schedule(ev.tick, [this, b = to_id, by_to] { submit_guarded(b, by_to); });
        }
      }
    }
  }

  RunOutput collect(const SimNetwork::RunResult& result) {
    RunOutput out;
    out.members = bootstrap_.members;
    out.certs = bootstrap_.certs;
    RunReport& report = out.report;
    report.ticks = result.ticks;
    report.safety_ok = result.safety_ok;
    report.local_refusals = local_refusals_;

    const std::string& reference = scenario_.agencies.front().id;
    const Ledger& ref_ledger = customs_.at(reference)->ledger();

    for (const auto& [id, node] : customs_) {
      out.ledgers.emplace(id, node->ledger());
      report.tips[id] = to_hex(node->ledger().tip().hash);
      for (const auto& rec : node->crl_log()) out.crl_records.push_back(rec);
    }
    report.converged = true;
    for (const auto& [id, tip] : report.tips)
      if (tip != report.tips.at(reference)) report.converged = false;

    report.committed["TRANSFER"] = 0;
    report.committed["RESET"] = 0;
    report.committed["PACKAGE"] = 0;
    for (const auto& block : ref_ledger.blocks())
      for (const auto& tx : block.transactions) {
        report.committed[to_string(tx.kind)] += 1;
        if (tx.kind == TxKind::transfer && tx.claims.size() == 2) extract_divergences(report, tx);
      }

    for (const auto& c : scenario_.containers) {
      const Transaction* latest = ref_ledger.latest_claim(c.id);
      if (latest != nullptr)
        report.final_holders[c.id.to_string()] = latest->holder().to_string();
      const ValidationPool* pool = customs_.at(reference)->pools().find(c.id);
      if (pool != nullptr && !pool->empty())
        report.pool_residue[c.id.to_string()] = pool->size();
    }
    report.expected_holders = scenario_.expected_final_holders();

    for (const auto& [cid, rec] : customs_.at(reference)->rejections()) {
      RunReport::Rejection r;
      r.claim = cid.hex();
      r.signer = rec.signer.to_string();
      r.container = rec.container.empty() ? "" : rec.container.to_string();
      r.code = to_code(rec.reason);
      if (!rec.detail.empty()) r.code += "/" + rec.detail;
      report.rejections.push_back(std::move(r));
    }

    check_invariants(report, ref_ledger);
    out.trace = net_->take_trace();
    return out;
  }

  static void extract_divergences(RunReport& report, const Transaction& tx) {
    const ContainerClaim& a = tx.claims[0];
    const ContainerClaim& b = tx.claims[1];
    auto add = [&](const char* field, const std::string& lhs, const std::string& rhs) {
      if (lhs != rhs)
        report.divergences.push_back(
            {a.container.to_string(), tx.id().hex(), field, lhs, rhs});
    };
    add("time", a.time.to_string(), b.time.to_string());
    add("lat", a.location.lat_string(), b.location.lat_string());
    add("lon", a.location.lon_string(), b.location.lon_string());
    add("weight_kg", format_weight_kg(a.weight_grams), format_weight_kg(b.weight_grams));
    add("shipment", a.shipment.to_string(), b.shipment.to_string());
  }

  void check_invariants(RunReport& report, const Ledger& ref_ledger) {
    if (!report.safety_ok) report.violations.push_back("safety: conflicting commits observed");
    if (!report.converged) report.violations.push_back("convergence: replica tips differ");

    // per-container chain continuity, allowing breaks only across resets
    for (const auto& c : scenario_.containers) {
      auto history = ref_ledger.container_history(c.id);
      for (size_t i = 1; i < history.size(); ++i) {
        if (history[i]->kind == TxKind::reset) continue;
        if (history[i - 1]->holder() != history[i]->claims.front().from)
          report.violations.push_back("chain break for " + c.id.to_string() + " at index " +
                                      std::to_string(i));
      }
      // dual-signature completeness
      for (const Transaction* tx : history) {
        if (tx->kind != TxKind::transfer) continue;
        bool eps = tx->claims.front().involves_epsilon();
        if (!eps && tx->claims.size() != 2)
          report.violations.push_back("transfer without counterpart for " + c.id.to_string());
        if (eps && tx->claims.size() != 1)
          report.violations.push_back("epsilon transfer with counterpart for " + c.id.to_string());
      }
    }

    // holder tracking on honest containers
    for (const auto& [container, expected] : report.expected_holders) {
      auto it = report.final_holders.find(container);
      const std::string actual = it == report.final_holders.end() ? "" : it->second;
      if (actual != expected)
        report.violations.push_back("holder mismatch for " + container + ": expected '" +
                                    expected + "', committed '" + actual + "'");
    }
  }

  const Scenario& scenario_;
  Bootstrap bootstrap_;
  std::unique_ptr<SimNetwork> net_;
  std::map<std::string, std::unique_ptr<CustomsNode>> customs_;
  std::map<std::string, std::unique_ptr<OperatorNode>> operators_;
  std::vector<std::string> local_refusals_;
};

inline RunOutput run_scenario(const Scenario& scenario, NetworkConfig config) {
  ScenarioRunner runner(scenario, std::move(config));
  return runner.run();
}

// ---------------------------------------------------------------------------
// Route reconstruction
// ---------------------------------------------------------------------------

struct RouteEntry {
  uint64_t height = 0;
  std::string kind;
  std::string from;
  std::string to;
  std::string time;
  std::string weight_kg;
};

struct PackageEntry {
  bool readable = false;
  std::string claim;  // id
  std::string destination;
  std::optional<PackageClaim> plain;  // readable only
};

struct Route {
  std::vector<RouteEntry> legs;
  std::vector<PackageEntry> packages;
};

// The container's committed transfer chain, plus every package claim the
// querying agency can decrypt for it. Foreign packages appear as opaque
// entries because their container binding is inside the ciphertext.
inline Route reconstruct_route(const AgencyId& agency, const ContainerId& container,
                               const Ledger& ledger, const KeyPair* seal_keys) {
  Route route;
  for (const Transaction* tx : ledger.container_history(container)) {
    RouteEntry leg;
    leg.height = 0;
    leg.kind = to_string(tx->kind);
    leg.from = tx->claims.front().from.to_string();
    leg.to = tx->claims.front().to.to_string();
    leg.time = tx->time().to_string();
    leg.weight_kg = format_weight_kg(tx->claims.front().weight_grams);
    route.legs.push_back(std::move(leg));
  }
  for (const auto& block : ledger.blocks()) {
    for (const auto& tx : block.transactions) {
      if (tx.kind != TxKind::package) continue;
      const PackageClaimEnvelope& env = *tx.envelope;
      PackageEntry entry;
      entry.claim = claim_id(env).hex();
      entry.destination = env.destination.to_string();
      if (env.destination == agency && seal_keys != nullptr) {
        try {
          PackageClaim plain = decrypt_package_claim(env, *seal_keys);
          if (plain.container != container) continue;
          entry.readable = true;
          entry.plain = std::move(plain);
        } catch (const Error&) {
          // undecryptable despite the routing field: list as opaque
        }
      }
      route.packages.push_back(std::move(entry));
    }
  }
  return route;
}

}  // namespace defend::sim
