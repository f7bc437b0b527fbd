// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <compare>
#include <cstdlib>
#include <string>
#include <string_view>

#include "json.hpp"

#include "defend/bytes.hpp"
#include "defend/crypto.hpp"
#include "defend/errors.hpp"
#include "defend/ids.hpp"
#include "defend/time.hpp"

namespace defend {

// ---------------------------------------------------------------------------
// Fixed-point decimal rendering. Weights are stored in grams (3 decimals of a
// kilogram), coordinates in microdegrees (6 decimals of a degree), so equality
// and canonical bytes never touch floating point.
// ---------------------------------------------------------------------------

inline std::string format_fixed(int64_t units, int decimals) {
  int64_t scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  bool negative = units < 0;
  uint64_t mag = negative ? static_cast<uint64_t>(-(units + 1)) + 1 : static_cast<uint64_t>(units);
  uint64_t whole = mag / static_cast<uint64_t>(scale);
  uint64_t frac = mag % static_cast<uint64_t>(scale);
  std::string out = negative ? "-" : "";
  out += std::to_string(whole);
  out.push_back('.');
  std::string f = std::to_string(frac);
  out.append(static_cast<size_t>(decimals) - f.size(), '0');
  out += f;
  return out;
}

inline int64_t parse_fixed(std::string_view text, int decimals, std::string_view what) {
  std::string_view rest = text;
  bool negative = false;
  if (!rest.empty() && rest[0] == '-') {
    negative = true;
    rest.remove_prefix(1);
  }
  auto dot = rest.find('.');
  std::string_view whole = dot == std::string_view::npos ? rest : rest.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : rest.substr(dot + 1);
  if (whole.empty() || !detail::all_digits(whole))
    fail(Errc::invalid_claim, std::string(what) + ": bad decimal '" + std::string(text) + "'");
  if (dot != std::string_view::npos &&
      (frac.empty() || frac.size() > static_cast<size_t>(decimals) || !detail::all_digits(frac)))
    fail(Errc::invalid_claim,
         std::string(what) + ": at most " + std::to_string(decimals) + " decimals in '" +
             std::string(text) + "'");
  int64_t scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  int64_t value = 0;
  for (char c : whole) value = value * 10 + (c - '0');
  value *= scale;
  int64_t f = 0;
  int64_t fscale = scale;
  for (char c : frac) {
    fscale /= 10;
    f += (c - '0') * fscale;
  }
  value += f;
  return negative ? -value : value;
}

inline std::string format_weight_kg(int64_t grams) { return format_fixed(grams, 3); }
inline int64_t parse_weight_kg(std::string_view text) { return parse_fixed(text, 3, "weight_kg"); }

// ---------------------------------------------------------------------------
// GeoLocation
// ---------------------------------------------------------------------------

struct GeoLocation {
  int32_t lat_microdeg = 0;
  int32_t lon_microdeg = 0;

  static constexpr int32_t kLatLimit = 90'000'000;
  static constexpr int32_t kLonLimit = 180'000'000;

  static GeoLocation from_degrees(double lat, double lon) {
    GeoLocation g{static_cast<int32_t>(lat * 1e6 + (lat >= 0 ? 0.5 : -0.5)),
                  static_cast<int32_t>(lon * 1e6 + (lon >= 0 ? 0.5 : -0.5))};
    if (!g.valid()) fail(Errc::invalid_claim, "location out of range");
    return g;
  }

  static GeoLocation parse(std::string_view lat, std::string_view lon) {
    GeoLocation g{static_cast<int32_t>(parse_fixed(lat, 6, "latitude")),
                  static_cast<int32_t>(parse_fixed(lon, 6, "longitude"))};
    if (!g.valid()) fail(Errc::invalid_claim, "location out of range");
    return g;
  }

  bool valid() const {
    return lat_microdeg >= -kLatLimit && lat_microdeg <= kLatLimit &&
           lon_microdeg >= -kLonLimit && lon_microdeg <= kLonLimit;
  }

  std::string lat_string() const { return format_fixed(lat_microdeg, 6); }
  std::string lon_string() const { return format_fixed(lon_microdeg, 6); }

  auto operator<=>(const GeoLocation&) const = default;
};

// ---------------------------------------------------------------------------
// Claims
// ---------------------------------------------------------------------------

// Leading type byte of each canonical encoding, so encodings of different
// claim kinds can never collide.
enum class CanonicalTag : uint8_t {
  container_claim = 0x01,
  package_claim = 0x02,
  package_envelope = 0x03,
  certificate = 0x04,
};

struct ClaimId {
  Digest32 digest{};

  std::string hex() const { return to_hex(digest); }
  auto operator<=>(const ClaimId&) const = default;
};

inline void encode_signer(Encoder& enc, const SignerId& signer) {
  enc.u8(static_cast<uint8_t>(signer.kind));
  enc.str(signer.id);
}

inline SignerId decode_signer(Decoder& dec) {
  uint8_t kind = dec.u8();
  if (kind > 1) fail(Errc::invalid_claim, "bad signer kind byte");
  SignerId s;
  s.kind = static_cast<SignerId::Kind>(kind);
  s.id = dec.str();
  if (s.id.empty()) fail(Errc::invalid_claim, "empty signer id");
  return s;
}

inline void encode_signature(Encoder& enc, const Signature& sig) {
  enc.u8(static_cast<uint8_t>(sig.scheme));
  enc.bytes(sig.bytes);
}

inline Signature decode_signature(Decoder& dec) {
  Signature sig;
  sig.scheme = scheme_from_byte(dec.u8());
  sig.bytes = dec.bytes();
  return sig;
}

// A signed assertion that operator `from` handed `container` to operator `to`.
// Also carries customs chain resets (signer is an agency).
struct ContainerClaim {
  ContainerId container;
  ShipmentId shipment;
  OperatorId from;
  OperatorId to;
  Timestamp time;
  GeoLocation location;
  int64_t weight_grams = 0;
  SignerId signer;
  Signature signature;

  bool involves_epsilon() const { return from.is_epsilon() || to.is_epsilon(); }

  void validate() const {
    if (container.empty()) fail(Errc::invalid_claim, "claim has no container id");
    if (shipment.imo_number().size() != 7) fail(Errc::invalid_claim, "claim has no shipment id");
    if (from == to) fail(Errc::invalid_claim, "from and to must differ");
    if (weight_grams < 0) fail(Errc::invalid_claim, "weight must be non-negative");
    if (!location.valid()) fail(Errc::invalid_claim, "location out of range");
    if (!signer.is_agency() && !signer.matches(from) && !signer.matches(to))
      fail(Errc::invalid_claim, "signer must be one of the parties or a customs agency");
  }

  // Canonical bytes without the signature: the message that gets signed, and
  // the preimage of the claim id.
  Bytes signing_bytes() const {
    Encoder enc;
    enc.u8(static_cast<uint8_t>(CanonicalTag::container_claim));
    enc.str(container.to_string());
    enc.str(shipment.to_string());
    enc.str(from.to_string());
    enc.str(to.to_string());
    enc.i64(time.seconds);
    enc.i32(location.lat_microdeg);
    enc.i32(location.lon_microdeg);
    enc.i64(weight_grams);
    encode_signer(enc, signer);
    return enc.take();
  }

  Bytes wire_bytes() const {
    Encoder enc;
    enc.raw(signing_bytes());
    encode_signature(enc, signature);
    return enc.take();
  }

  static ContainerClaim from_wire(ByteView in) {
    Decoder dec(in);
    ContainerClaim c = decode_body(dec);
    c.signature = decode_signature(dec);
    if (!dec.done()) fail(Errc::invalid_claim, "trailing bytes after container claim");
    return c;
  }

  bool operator==(const ContainerClaim&) const = default;

 private:
  static ContainerClaim decode_body(Decoder& dec) {
    if (dec.u8() != static_cast<uint8_t>(CanonicalTag::container_claim))
      fail(Errc::invalid_claim, "not a container claim");
    ContainerClaim c;
    c.container = ContainerId::parse(dec.str());
    c.shipment = ShipmentId::parse(dec.str());
    c.from = OperatorId::parse(dec.str());
    c.to = OperatorId::parse(dec.str());
    c.time = Timestamp{dec.i64()};
    c.location.lat_microdeg = dec.i32();
    c.location.lon_microdeg = dec.i32();
    c.weight_grams = dec.i64();
    c.signer = decode_signer(dec);
    return c;
  }
};

enum class PackageAction : uint8_t { insert = 0, remove = 1 };

inline std::string to_string(PackageAction a) {
  return a == PackageAction::insert ? "INSERT" : "REMOVE";
}

inline PackageAction parse_package_action(std::string_view s) {
  if (s == "INSERT") return PackageAction::insert;
  if (s == "REMOVE") return PackageAction::remove;
  fail(Errc::invalid_claim, "action must be INSERT or REMOVE");
}

// Plaintext package claim: what went into or out of a container. Only ever
// stored encrypted; identified by container + time + shipper-defined id.
struct PackageClaim {
  ContainerId container;
  std::string package_id;
  std::string sender;
  std::string receiver;
  Timestamp time;
  GeoLocation location;
  int64_t weight_grams = 0;
  PackageAction action = PackageAction::insert;
  std::string contents;

  void validate() const {
    if (container.empty()) fail(Errc::invalid_claim, "package claim has no container id");
    if (package_id.empty()) fail(Errc::invalid_claim, "package id must not be empty");
    if (weight_grams < 0) fail(Errc::invalid_claim, "weight must be non-negative");
    if (!location.valid()) fail(Errc::invalid_claim, "location out of range");
  }

  Bytes canonical_bytes() const {
    Encoder enc;
    enc.u8(static_cast<uint8_t>(CanonicalTag::package_claim));
    enc.str(container.to_string());
    enc.str(package_id);
    enc.str(sender);
    enc.str(receiver);
    enc.i64(time.seconds);
    enc.i32(location.lat_microdeg);
    enc.i32(location.lon_microdeg);
    enc.i64(weight_grams);
    enc.u8(static_cast<uint8_t>(action));
    enc.str(contents);
    return enc.take();
  }

  static PackageClaim from_canonical(ByteView in) {
    Decoder dec(in);
    if (dec.u8() != static_cast<uint8_t>(CanonicalTag::package_claim))
      fail(Errc::invalid_claim, "not a package claim");
    PackageClaim p;
    p.container = ContainerId::parse(dec.str());
    p.package_id = dec.str();
    p.sender = dec.str();
    p.receiver = dec.str();
    p.time = Timestamp{dec.i64()};
    p.location.lat_microdeg = dec.i32();
    p.location.lon_microdeg = dec.i32();
    p.weight_grams = dec.i64();
    uint8_t action = dec.u8();
    if (action > 1) fail(Errc::invalid_claim, "bad package action byte");
    p.action = static_cast<PackageAction>(action);
    p.contents = dec.str();
    if (!dec.done()) fail(Errc::invalid_claim, "trailing bytes after package claim");
    return p;
  }

  bool operator==(const PackageClaim&) const = default;
};

// An encrypted package claim. Validators see only the routing field and the
// signature; the payload is opaque to everyone but the destination agency.
struct PackageClaimEnvelope {
  AgencyId destination;
  Bytes ciphertext;
  OperatorId signer;
  Signature signature;

  void validate() const {
    if (destination.empty()) fail(Errc::invalid_claim, "envelope has no destination agency");
    if (ciphertext.empty()) fail(Errc::invalid_claim, "envelope has no ciphertext");
    if (signer.is_epsilon()) fail(Errc::invalid_claim, "epsilon cannot sign an envelope");
  }

  Bytes signing_bytes() const {
    Encoder enc;
    enc.u8(static_cast<uint8_t>(CanonicalTag::package_envelope));
    enc.str(destination.to_string());
    enc.bytes(ciphertext);
    encode_signer(enc, SignerId::of(signer));
    return enc.take();
  }

  Bytes wire_bytes() const {
    Encoder enc;
    enc.raw(signing_bytes());
    encode_signature(enc, signature);
    return enc.take();
  }

  static PackageClaimEnvelope from_wire(ByteView in) {
    Decoder dec(in);
    if (dec.u8() != static_cast<uint8_t>(CanonicalTag::package_envelope))
      fail(Errc::invalid_claim, "not a package envelope");
    PackageClaimEnvelope e;
    e.destination = AgencyId::parse(dec.str());
    e.ciphertext = dec.bytes();
    SignerId s = decode_signer(dec);
    if (s.is_agency()) fail(Errc::invalid_claim, "envelopes are signed by operators");
    e.signer = OperatorId::parse(s.id);
    e.signature = decode_signature(dec);
    if (!dec.done()) fail(Errc::invalid_claim, "trailing bytes after envelope");
    return e;
  }

  bool operator==(const PackageClaimEnvelope&) const = default;
};

inline ClaimId claim_id(const ContainerClaim& c) { return ClaimId{sha256(c.signing_bytes())}; }
inline ClaimId claim_id(const PackageClaim& p) { return ClaimId{sha256(p.canonical_bytes())}; }
inline ClaimId claim_id(const PackageClaimEnvelope& e) { return ClaimId{sha256(e.signing_bytes())}; }

// ---------------------------------------------------------------------------
// JSON forms (ledger files, traces, reports). Keys serialize alphabetically,
// so dumps are deterministic.
// ---------------------------------------------------------------------------

inline std::string signature_to_text(const Signature& sig) {
  return to_string(sig.scheme) + ":" + to_hex(sig.bytes);
}

inline Signature signature_from_text(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) fail(Errc::invalid_claim, "bad signature text");
  Signature sig;
  sig.scheme = parse_scheme(text.substr(0, colon));
  sig.bytes = from_hex(text.substr(colon + 1));
  return sig;
}

inline std::string signer_to_text(const SignerId& s) { return s.to_string(); }

inline SignerId signer_from_text(std::string_view text) {
  if (text.rfind("operator:", 0) == 0)
    return SignerId::of(OperatorId::parse(text.substr(9)));
  if (text.rfind("agency:", 0) == 0) return SignerId::of(AgencyId::parse(text.substr(7)));
  fail(Errc::invalid_claim, "bad signer text '" + std::string(text) + "'");
}

inline void to_json(nlohmann::json& j, const ContainerClaim& c) {
  j = nlohmann::json{{"container", c.container.to_string()},
                     {"shipment", c.shipment.to_string()},
                     {"from", c.from.to_string()},
                     {"to", c.to.to_string()},
                     {"time", c.time.to_string()},
                     {"lat", c.location.lat_string()},
                     {"lon", c.location.lon_string()},
                     {"weight_kg", format_weight_kg(c.weight_grams)},
                     {"signer", signer_to_text(c.signer)},
                     {"signature", signature_to_text(c.signature)}};
}

inline void from_json(const nlohmann::json& j, ContainerClaim& c) {
  c.container = ContainerId::parse(j.at("container").get<std::string>());
  c.shipment = ShipmentId::parse(j.at("shipment").get<std::string>());
  c.from = OperatorId::parse(j.at("from").get<std::string>());
  c.to = OperatorId::parse(j.at("to").get<std::string>());
  c.time = Timestamp::parse(j.at("time").get<std::string>());
  c.location.lat_microdeg = static_cast<int32_t>(parse_fixed(j.at("lat").get<std::string>(), 6, "lat"));
  c.location.lon_microdeg = static_cast<int32_t>(parse_fixed(j.at("lon").get<std::string>(), 6, "lon"));
  c.weight_grams = parse_weight_kg(j.at("weight_kg").get<std::string>());
  c.signer = signer_from_text(j.at("signer").get<std::string>());
  c.signature = signature_from_text(j.at("signature").get<std::string>());
}

inline void to_json(nlohmann::json& j, const PackageClaim& p) {
  j = nlohmann::json{{"container", p.container.to_string()},
                     {"package_id", p.package_id},
                     {"sender", p.sender},
                     {"receiver", p.receiver},
                     {"time", p.time.to_string()},
                     {"lat", p.location.lat_string()},
                     {"lon", p.location.lon_string()},
                     {"weight_kg", format_weight_kg(p.weight_grams)},
                     {"action", to_string(p.action)},
                     {"contents", p.contents}};
}

inline void from_json(const nlohmann::json& j, PackageClaim& p) {
  p.container = ContainerId::parse(j.at("container").get<std::string>());
  p.package_id = j.at("package_id").get<std::string>();
  p.sender = j.at("sender").get<std::string>();
  p.receiver = j.at("receiver").get<std::string>();
  p.time = Timestamp::parse(j.at("time").get<std::string>());
  p.location.lat_microdeg = static_cast<int32_t>(parse_fixed(j.at("lat").get<std::string>(), 6, "lat"));
  p.location.lon_microdeg = static_cast<int32_t>(parse_fixed(j.at("lon").get<std::string>(), 6, "lon"));
  p.weight_grams = parse_weight_kg(j.at("weight_kg").get<std::string>());
  p.action = parse_package_action(j.at("action").get<std::string>());
  p.contents = j.at("contents").get<std::string>();
}

inline void to_json(nlohmann::json& j, const PackageClaimEnvelope& e) {
  j = nlohmann::json{{"destination", e.destination.to_string()},
                     {"ciphertext", to_hex(e.ciphertext)},
                     {"signer", e.signer.to_string()},
                     {"signature", signature_to_text(e.signature)}};
}

inline void from_json(const nlohmann::json& j, PackageClaimEnvelope& e) {
  e.destination = AgencyId::parse(j.at("destination").get<std::string>());
  e.ciphertext = from_hex(j.at("ciphertext").get<std::string>());
  e.signer = OperatorId::parse(j.at("signer").get<std::string>());
  if (e.signer.is_epsilon()) fail(Errc::invalid_claim, "epsilon cannot sign an envelope");
  e.signature = signature_from_text(j.at("signature").get<std::string>());
}

}  // namespace defend
