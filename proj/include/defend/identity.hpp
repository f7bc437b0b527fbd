// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "defend/bytes.hpp"
#include "defend/crypto.hpp"
#include "defend/errors.hpp"
#include "defend/ids.hpp"
#include "defend/model.hpp"
#include "defend/time.hpp"

namespace defend {

enum class Role : uint8_t { operator_role = 0, customs = 1 };

inline std::string to_string(Role r) { return r == Role::customs ? "CUSTOMS" : "OPERATOR"; }

// Operator or agency identity issued by a customs-agency CA. No X.509; the
// binary layout is in docs/FORMATS.md.
struct Certificate {
  SignerId subject;
  Role role = Role::operator_role;
  AgencyId issuer;
  SchemeId subject_scheme = SchemeId::ed25519;
  Bytes subject_public_key;
  uint64_t serial = 0;
  Timestamp issued_at;
  Signature issuer_signature;

  Bytes signing_bytes() const {
    Encoder enc;
    enc.u8(static_cast<uint8_t>(CanonicalTag::certificate));
    encode_signer(enc, subject);
    enc.u8(static_cast<uint8_t>(role));
    enc.str(issuer.to_string());
    enc.u8(static_cast<uint8_t>(subject_scheme));
    enc.bytes(subject_public_key);
    enc.u64(serial);
    enc.i64(issued_at.seconds);
    return enc.take();
  }

  Bytes wire_bytes() const {
    Encoder enc;
    enc.raw(signing_bytes());
    encode_signature(enc, issuer_signature);
    return enc.take();
  }

  static Certificate from_wire(ByteView in) {
    Decoder dec(in);
    Certificate c = decode_body(dec);
    c.issuer_signature = decode_signature(dec);
    if (!dec.done()) fail(Errc::invalid_claim, "trailing bytes after certificate");
    return c;
  }

  static Certificate decode_body(Decoder& dec) {
    if (dec.u8() != static_cast<uint8_t>(CanonicalTag::certificate))
      fail(Errc::invalid_claim, "not a certificate");
    Certificate c;
    c.subject = decode_signer(dec);
    uint8_t role = dec.u8();
    if (role > 1) fail(Errc::invalid_claim, "bad certificate role byte");
    c.role = static_cast<Role>(role);
    c.issuer = AgencyId::parse(dec.str());
    c.subject_scheme = scheme_from_byte(dec.u8());
    c.subject_public_key = dec.bytes();
    c.serial = dec.u64();
    c.issued_at = Timestamp{dec.i64()};
    return c;
  }

  bool operator==(const Certificate&) const = default;
};

// Issuer-maintained set of invalidated certificate serials. The version is a
// monotone counter bumped by every revocation call, including repeats.
struct RevocationList {
  AgencyId issuer;
  uint64_t version = 0;
  std::set<uint64_t> revoked_serials;

  bool is_revoked(uint64_t serial) const { return revoked_serials.count(serial) != 0; }

  bool operator==(const RevocationList&) const = default;
};

inline RevocationList revoke_certificate(RevocationList crl, uint64_t serial) {
  crl.revoked_serials.insert(serial);
  crl.version += 1;
  return crl;
}

// Current customs agencies, their claim-verification keys, and their package
// encryption keys. One instance bootstraps a scenario; every node holds a copy.
struct MembershipRegistry {
  struct AgencyKeys {
    SchemeId sign_scheme = SchemeId::ed25519;
    Bytes sign_public_key;
    SchemeId seal_scheme = SchemeId::x25519_sealed;
    Bytes seal_public_key;

    bool operator==(const AgencyKeys&) const = default;
  };

  std::map<AgencyId, AgencyKeys> members;

  bool is_member(const AgencyId& a) const { return members.count(a) != 0; }

  const AgencyKeys* find(const AgencyId& a) const {
    auto it = members.find(a);
    return it == members.end() ? nullptr : &it->second;
  }

  std::vector<AgencyId> member_list() const {
    std::vector<AgencyId> out;
    out.reserve(members.size());
    for (const auto& [id, keys] : members) out.push_back(id);
    return out;
  }

  bool operator==(const MembershipRegistry&) const = default;
};

inline Certificate issue_certificate(const MembershipRegistry& members, const AgencyId& ca,
                                     const KeyPair& ca_keys, uint64_t serial,
                                     const SignerId& subject, Role role, SchemeId subject_scheme,
                                     ByteView subject_public_key, Timestamp issued_at) {
  if (!members.is_member(ca))
    fail(Errc::not_a_customs_agency, "'" + ca.to_string() + "' is not a customs member");
  Certificate cert;
  cert.subject = subject;
  cert.role = role;
  cert.issuer = ca;
  cert.subject_scheme = subject_scheme;
  cert.subject_public_key.assign(subject_public_key.begin(), subject_public_key.end());
  cert.serial = serial;
  cert.issued_at = issued_at;
  cert.issuer_signature = sign(ca_keys, cert.signing_bytes());
  return cert;
}

// Serial-number source plus CRL for one issuing agency. Single writer.
class CertificateAuthority {
 public:
  CertificateAuthority(AgencyId agency, KeyPair keys)
      : agency_(std::move(agency)), keys_(std::move(keys)) {
    crl_.issuer = agency_;
  }

  const AgencyId& agency() const { return agency_; }
  const KeyPair& keys() const { return keys_; }
  const RevocationList& crl() const { return crl_; }

  Certificate issue(const MembershipRegistry& members, const SignerId& subject, Role role,
                    SchemeId subject_scheme, ByteView subject_public_key, Timestamp issued_at) {
    return issue_certificate(members, agency_, keys_, next_serial_++, subject, role,
                             subject_scheme, subject_public_key, issued_at);
  }

  void revoke(uint64_t serial) { crl_ = revoke_certificate(std::move(crl_), serial); }

 private:
  AgencyId agency_;
  KeyPair keys_;
  uint64_t next_serial_ = 1;
  RevocationList crl_;
};

// Certificates known to a node, looked up by claim signer.
struct CertStore {
  std::map<SignerId, Certificate> by_subject;

  void add(const Certificate& cert) { by_subject[cert.subject] = cert; }

  const Certificate* find(const SignerId& subject) const {
    auto it = by_subject.find(subject);
    return it == by_subject.end() ? nullptr : &it->second;
  }

  bool operator==(const CertStore&) const = default;
};

// Node-local view of every issuer's revocation list. Views may lag the CA;
// claims are judged against whatever version is visible at validation time.
struct CrlView {
  std::map<AgencyId, RevocationList> by_issuer;

  void apply(const RevocationList& crl) {
    auto& slot = by_issuer[crl.issuer];
    if (crl.version >= slot.version) slot = crl;
  }

  bool is_revoked(const AgencyId& issuer, uint64_t serial) const {
    auto it = by_issuer.find(issuer);
    return it != by_issuer.end() && it->second.is_revoked(serial);
  }

  uint64_t version_of(const AgencyId& issuer) const {
    auto it = by_issuer.find(issuer);
    return it == by_issuer.end() ? 0 : it->second.version;
  }
};

// ---------------------------------------------------------------------------
// Claim signature verification
// ---------------------------------------------------------------------------

enum class RejectReason : uint8_t {
  bad_signature,
  revoked_certificate,
  subject_mismatch,
  bad_certificate,
  impossible_data,
  no_trusted_predecessor,
  unknown_destination_agency,
};

// Stable machine-readable codes; documented in docs/FORMATS.md.
inline const char* to_code(RejectReason r) {
  switch (r) {
    case RejectReason::bad_signature: return "BAD_SIGNATURE";
    case RejectReason::revoked_certificate: return "REVOKED_CERTIFICATE";
    case RejectReason::subject_mismatch: return "SUBJECT_MISMATCH";
    case RejectReason::bad_certificate: return "BAD_CERTIFICATE";
    case RejectReason::impossible_data: return "IMPOSSIBLE_DATA";
    case RejectReason::no_trusted_predecessor: return "NO_TRUSTED_PREDECESSOR";
    case RejectReason::unknown_destination_agency: return "UNKNOWN_DESTINATION_AGENCY";
  }
  return "UNKNOWN";
}

// Checks, in order: certificate issuer is a current member and its signature
// verifies; certificate is not revoked; the claim's signer is the certificate
// subject; the claim signature verifies under the certified key.
// Returns nullopt on accept.
inline std::optional<RejectReason> verify_claim_signature(const SignerId& claim_signer,
                                                          ByteView signing_bytes,
                                                          const Signature& signature,
                                                          const Certificate& cert,
                                                          const MembershipRegistry& members,
                                                          const CrlView& crl) {
  const auto* issuer_keys = members.find(cert.issuer);
  if (issuer_keys == nullptr) return RejectReason::bad_certificate;
  if (!verify(issuer_keys->sign_scheme, issuer_keys->sign_public_key, cert.signing_bytes(),
              cert.issuer_signature))
    return RejectReason::bad_certificate;
  if (crl.is_revoked(cert.issuer, cert.serial)) return RejectReason::revoked_certificate;
  if (claim_signer != cert.subject) return RejectReason::subject_mismatch;
  if (!verify(cert.subject_scheme, cert.subject_public_key, signing_bytes, signature))
    return RejectReason::bad_signature;
  return std::nullopt;
}

inline std::optional<RejectReason> verify_claim_signature(const ContainerClaim& claim,
                                                          const Certificate& cert,
                                                          const MembershipRegistry& members,
                                                          const CrlView& crl) {
  return verify_claim_signature(claim.signer, claim.signing_bytes(), claim.signature, cert,
                                members, crl);
}

inline std::optional<RejectReason> verify_claim_signature(const PackageClaimEnvelope& env,
                                                          const Certificate& cert,
                                                          const MembershipRegistry& members,
                                                          const CrlView& crl) {
  return verify_claim_signature(SignerId::of(env.signer), env.signing_bytes(), env.signature,
                                cert, members, crl);
}

// ---------------------------------------------------------------------------
// Package claim encryption
// ---------------------------------------------------------------------------

inline PackageClaimEnvelope encrypt_package_claim(const PackageClaim& plain,
                                                  const AgencyId& destination,
                                                  SchemeId seal_scheme,
                                                  ByteView destination_public_key,
                                                  const Seed32& ephemeral_seed,
                                                  const OperatorId& signer,
                                                  const KeyPair& signer_keys) {
  plain.validate();
  PackageClaimEnvelope env;
  env.destination = destination;
  env.ciphertext = seal(seal_scheme, destination_public_key, plain.canonical_bytes(), ephemeral_seed);
  env.signer = signer;
  env.signature = sign(signer_keys, env.signing_bytes());
  return env;
}

inline PackageClaim decrypt_package_claim(const PackageClaimEnvelope& env,
                                          const KeyPair& private_keys) {
  std::optional<Bytes> plain = seal_open(private_keys, env.ciphertext);
  if (!plain) fail(Errc::decryption_failure, "ciphertext does not open under this key");
  try {
    return PackageClaim::from_canonical(*plain);
  } catch (const Error&) {
    fail(Errc::decryption_failure, "sealed payload is not a package claim");
  }
}

// ---------------------------------------------------------------------------
// Customs membership voting
// ---------------------------------------------------------------------------

struct MembershipProposal {
  enum class Action : uint8_t { add, remove } action = Action::add;
  AgencyId agency;
  MembershipRegistry::AgencyKeys keys;  // used for add
};

enum class VoteResult : uint8_t { accepted, rejected };

// Strict majority of current members; the registry changes atomically on
// accept and not at all on reject.
inline VoteResult vote_membership(MembershipRegistry& registry, const MembershipProposal& proposal,
                                  const std::vector<std::pair<AgencyId, bool>>& ballots) {
  std::set<AgencyId> voted;
  size_t yes = 0;
  for (const auto& [agency, ballot] : ballots) {
    if (!registry.is_member(agency))
      fail(Errc::non_member_ballot, "'" + agency.to_string() + "' is not a current member");
    if (!voted.insert(agency).second)
      fail(Errc::duplicate_ballot, "'" + agency.to_string() + "' voted twice");
    if (ballot) ++yes;
  }
  if (yes * 2 <= registry.members.size()) return VoteResult::rejected;
  if (proposal.action == MembershipProposal::Action::add)
    registry.members[proposal.agency] = proposal.keys;
  else
    registry.members.erase(proposal.agency);
  return VoteResult::accepted;
}

// ---------------------------------------------------------------------------
// Key, certificate, and CRL files
// ---------------------------------------------------------------------------

inline constexpr char kFileMagic[4] = {'D', 'F', 'N', 'D'};
inline constexpr uint8_t kFileVersion = 1;

namespace detail {

inline void write_file_header(Encoder& enc, char type) {
  enc.raw(ByteView{reinterpret_cast<const uint8_t*>(kFileMagic), 4});
  enc.u8(kFileVersion);
  enc.u8(static_cast<uint8_t>(type));
}

inline void check_file_header(Decoder& dec, char type) {
  uint8_t magic[4];
  for (auto& b : magic) b = dec.u8();
  if (std::memcmp(magic, kFileMagic, 4) != 0) fail(Errc::io_error, "bad file magic");
  if (dec.u8() != kFileVersion) fail(Errc::io_error, "unsupported file version");
  if (dec.u8() != static_cast<uint8_t>(type)) fail(Errc::io_error, "wrong file type");
}

inline Bytes read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open '" + path + "'");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_binary_file(const std::string& path, ByteView data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) fail(Errc::io_error, "short write to '" + path + "'");
}

}  // namespace detail

inline void save_keypair(const std::string& path, const KeyPair& kp) {
  Encoder enc;
  detail::write_file_header(enc, 'K');
  enc.u8(static_cast<uint8_t>(kp.scheme));
  enc.bytes(kp.public_key);
  enc.bytes(kp.private_key);
  detail::write_binary_file(path, enc.view());
}

inline KeyPair load_keypair(const std::string& path) {
  Bytes data = detail::read_binary_file(path);
  Decoder dec(data);
  detail::check_file_header(dec, 'K');
  KeyPair kp;
  kp.scheme = scheme_from_byte(dec.u8());
  kp.public_key = dec.bytes();
  kp.private_key = dec.bytes();
  if (!dec.done()) fail(Errc::io_error, "trailing bytes in key file");
  return kp;
}

inline void save_certificate(const std::string& path, const Certificate& cert) {
  Encoder enc;
  detail::write_file_header(enc, 'C');
  enc.bytes(cert.wire_bytes());
  detail::write_binary_file(path, enc.view());
}

inline Certificate load_certificate(const std::string& path) {
  Bytes data = detail::read_binary_file(path);
  Decoder dec(data);
  detail::check_file_header(dec, 'C');
  Certificate cert = Certificate::from_wire(dec.bytes());
  if (!dec.done()) fail(Errc::io_error, "trailing bytes in certificate file");
  return cert;
}

// A certificate store file also carries the membership registry, so an
// auditor can rebuild the verification context from one artifact.
inline void save_cert_store(const std::string& path, const MembershipRegistry& members,
                            const CertStore& certs) {
  Encoder enc;
  detail::write_file_header(enc, 'S');
  enc.u32(static_cast<uint32_t>(members.members.size()));
  for (const auto& [agency, keys] : members.members) {
    enc.str(agency.to_string());
    enc.u8(static_cast<uint8_t>(keys.sign_scheme));
    enc.bytes(keys.sign_public_key);
    enc.u8(static_cast<uint8_t>(keys.seal_scheme));
    enc.bytes(keys.seal_public_key);
  }
  enc.u32(static_cast<uint32_t>(certs.by_subject.size()));
  for (const auto& [subject, cert] : certs.by_subject) enc.bytes(cert.wire_bytes());
  detail::write_binary_file(path, enc.view());
}

inline std::pair<MembershipRegistry, CertStore> load_cert_store(const std::string& path) {
  Bytes data = detail::read_binary_file(path);
  Decoder dec(data);
  detail::check_file_header(dec, 'S');
  MembershipRegistry members;
  uint32_t n_members = dec.u32();
  for (uint32_t i = 0; i < n_members; ++i) {
    AgencyId agency = AgencyId::parse(dec.str());
    MembershipRegistry::AgencyKeys keys;
    keys.sign_scheme = scheme_from_byte(dec.u8());
    keys.sign_public_key = dec.bytes();
    keys.seal_scheme = scheme_from_byte(dec.u8());
    keys.seal_public_key = dec.bytes();
    members.members[agency] = keys;
  }
  CertStore certs;
  uint32_t n_certs = dec.u32();
  for (uint32_t i = 0; i < n_certs; ++i) certs.add(Certificate::from_wire(dec.bytes()));
  if (!dec.done()) fail(Errc::io_error, "trailing bytes in cert store file");
  return {std::move(members), std::move(certs)};
}

// CRL files are append-only: one JSON record per revocation event, in order.
struct CrlRecord {
  AgencyId issuer;
  uint64_t version = 0;
  uint64_t serial = 0;
  Timestamp at;
};

inline void to_json(nlohmann::json& j, const CrlRecord& r) {
  j = nlohmann::json{{"issuer", r.issuer.to_string()},
                     {"version", r.version},
                     {"serial", r.serial},
                     {"at", r.at.to_string()}};
}

inline void from_json(const nlohmann::json& j, CrlRecord& r) {
  r.issuer = AgencyId::parse(j.at("issuer").get<std::string>());
  r.version = j.at("version").get<uint64_t>();
  r.serial = j.at("serial").get<uint64_t>();
  r.at = Timestamp::parse(j.at("at").get<std::string>());
}

inline void append_crl_record(std::ostream& out, const CrlRecord& r) {
  out << nlohmann::json(r).dump() << '\n';
}

inline std::vector<CrlRecord> load_crl_records(std::istream& in) {
  std::vector<CrlRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<CrlRecord>());
    } catch (const nlohmann::json::exception&) {
      fail(Errc::truncated_file, "unparseable CRL record");
    }
  }
  return out;
}

inline std::vector<CrlRecord> load_crl_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open '" + path + "'");
  return load_crl_records(in);
}

// Folds records into the view, keeping only those with at <= cutoff. Lets an
// auditor reconstruct the CRL state visible when a claim was validated.
inline CrlView crl_view_at(const std::vector<CrlRecord>& records,
                           std::optional<Timestamp> cutoff = std::nullopt) {
  CrlView view;
  for (const auto& r : records) {
    if (cutoff && r.at > *cutoff) continue;
    auto& slot = view.by_issuer[r.issuer];
    slot.issuer = r.issuer;
    slot.revoked_serials.insert(r.serial);
    if (r.version > slot.version) slot.version = r.version;
  }
  return view;
}

}  // namespace defend
