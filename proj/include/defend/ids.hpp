// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <compare>
#include <string>
#include <string_view>

#include "defend/errors.hpp"
#include "defend/time.hpp"

namespace defend {

// UTF-8 for the Greek small epsilon, the hole marker for transfers that cross
// operators outside the system.
inline constexpr std::string_view kEpsilonText = "\xce\xb5";

namespace detail {

inline bool printable_ascii(std::string_view s) {
  for (char c : s)
    if (c < 0x20 || c > 0x7e) return false;
  return true;
}

}  // namespace detail

// An economic operator, or the distinguished hole marker epsilon. Real
// identifiers are non-empty printable ASCII; epsilon renders as "ε".
class OperatorId {
 public:
  OperatorId() = default;  // epsilon

  static OperatorId epsilon() { return OperatorId{}; }

  static OperatorId parse(std::string_view text) {
    if (text == kEpsilonText) return epsilon();
    if (text.empty()) fail(Errc::malformed_id, "operator id must not be empty");
    if (!detail::printable_ascii(text))
      fail(Errc::malformed_id, "operator id must be printable ASCII");
    OperatorId id;
    id.value_ = text;
    return id;
  }

  bool is_epsilon() const { return value_.empty(); }

  std::string to_string() const { return is_epsilon() ? std::string(kEpsilonText) : value_; }

  auto operator<=>(const OperatorId&) const = default;

 private:
  std::string value_;  // empty encodes epsilon
};

// A customs agency. Namespace is disjoint from OperatorId by construction.
class AgencyId {
 public:
  AgencyId() = default;

  static AgencyId parse(std::string_view text) {
    if (text.empty()) fail(Errc::malformed_id, "agency id must not be empty");
    if (!detail::printable_ascii(text))
      fail(Errc::malformed_id, "agency id must be printable ASCII");
    AgencyId id;
    id.value_ = text;
    return id;
  }

  const std::string& to_string() const { return value_; }
  bool empty() const { return value_.empty(); }

  auto operator<=>(const AgencyId&) const = default;

 private:
  std::string value_;
};

// The signer of a claim: a real economic operator or a customs agency
// (reset claims). Never epsilon.
struct SignerId {
  enum class Kind : uint8_t { operator_id = 0, agency = 1 };

  Kind kind = Kind::operator_id;
  std::string id;

  static SignerId of(const OperatorId& op) {
    if (op.is_epsilon()) fail(Errc::invalid_claim, "epsilon cannot sign a claim");
    return {Kind::operator_id, op.to_string()};
  }

  static SignerId of(const AgencyId& agency) { return {Kind::agency, agency.to_string()}; }

  bool is_agency() const { return kind == Kind::agency; }

  bool matches(const OperatorId& op) const {
    return kind == Kind::operator_id && !op.is_epsilon() && id == op.to_string();
  }

  std::string to_string() const {
    return (kind == Kind::agency ? "agency:" : "operator:") + id;
  }

  auto operator<=>(const SignerId&) const = default;
};

// ISO 6346 letter values: A=10 counting up, skipping exact multiples of 11.
inline int iso6346_letter_value(char c) {
  int v = 10;
  for (char l = 'A'; l < c; ++l) {
    ++v;
    if (v % 11 == 0) ++v;
  }
  return v;
}

// Weighted character sum of a 10-character owner+category+serial prefix,
// mod 11: character values weighted by 2^position.
inline int iso6346_remainder(std::string_view prefix) {
  if (prefix.size() != 10)
    fail(Errc::malformed_id, "container prefix must be 10 characters");
  for (size_t i = 0; i < 4; ++i)
    if (prefix[i] < 'A' || prefix[i] > 'Z')
      fail(Errc::malformed_id, "owner code and category must be uppercase letters");
  for (size_t i = 4; i < 10; ++i)
    if (prefix[i] < '0' || prefix[i] > '9')
      fail(Errc::malformed_id, "serial must be 6 decimal digits");
  int sum = 0;
  int weight = 1;
  for (size_t i = 0; i < 10; ++i) {
    int value = i < 4 ? iso6346_letter_value(prefix[i]) : prefix[i] - '0';
    sum += value * weight;
    weight *= 2;
  }
  return sum % 11;
}

// Check digit with the standard 10->0 mapping.
inline int iso6346_check_digit(std::string_view prefix) {
  return iso6346_remainder(prefix) % 10;
}

// Prefixes whose remainder is 10 share their displayed digit with remainder 0,
// which would let some single-digit errors slip through. Registries do not
// issue such serials, and parsing rejects them.
inline bool iso6346_issuable(std::string_view prefix) { return iso6346_remainder(prefix) != 10; }

// An ISO 6346 container identification number: 3-letter owner code, 1-letter
// equipment category, 6-digit serial, 1 check digit. Always 11 characters.
class ContainerId {
 public:
  ContainerId() = default;

  static ContainerId parse(std::string_view text) {
    if (text.size() != 11)
      fail(Errc::malformed_id, "container id must be 11 characters, got '" + std::string(text) + "'");
    if (text[10] < '0' || text[10] > '9')
      fail(Errc::malformed_id, "container check digit must be a decimal digit");
    int remainder = iso6346_remainder(text.substr(0, 10));
    if (remainder == 10)
      fail(Errc::check_digit_mismatch,
           "container prefix '" + std::string(text.substr(0, 10)) + "' has no valid check digit");
    int actual = text[10] - '0';
    if (remainder != actual)
      fail(Errc::check_digit_mismatch, "container id '" + std::string(text) + "' should end in " +
                                           std::to_string(remainder));
    ContainerId id;
    id.text_ = text;
    return id;
  }

  static ContainerId from_prefix(std::string_view prefix) {
    return parse(std::string(prefix) + static_cast<char>('0' + iso6346_check_digit(prefix)));
  }

  std::string_view owner_code() const { return std::string_view(text_).substr(0, 3); }
  char category() const { return text_[3]; }
  std::string_view serial() const { return std::string_view(text_).substr(4, 6); }
  int check_digit() const { return text_[10] - '0'; }
  const std::string& to_string() const { return text_; }
  bool empty() const { return text_.empty(); }

  auto operator<=>(const ContainerId&) const = default;

 private:
  std::string text_;
};

inline ContainerId parse_container_id(std::string_view text) { return ContainerId::parse(text); }

// IMO number check digit: first six digits weighted 7,6,5,4,3,2, summed, mod 10.
inline int imo_check_digit(std::string_view six_digits) {
  if (six_digits.size() != 6 || !detail::all_digits(six_digits))
    fail(Errc::malformed_id, "IMO body must be 6 decimal digits");
  int sum = 0;
  for (int i = 0; i < 6; ++i) sum += (six_digits[i] - '0') * (7 - i);
  return sum % 10;
}

// A shipment: the vessel's 7-digit IMO number plus the departure date.
// Textual form "NNNNNNN-YYYY-MM-DD".
class ShipmentId {
 public:
  ShipmentId() = default;

  ShipmentId(std::string imo, Date departure) : imo_(std::move(imo)), departure_(departure) {}

  static ShipmentId parse(std::string_view text) {
    if (text.size() != 18 || text[7] != '-')
      fail(Errc::malformed_id, "shipment id must be NNNNNNN-YYYY-MM-DD, got '" + std::string(text) + "'");
    auto imo = text.substr(0, 7);
    if (!detail::all_digits(imo)) fail(Errc::malformed_id, "IMO number must be 7 decimal digits");
    int expected = imo_check_digit(imo.substr(0, 6));
    int actual = imo[6] - '0';
    if (expected != actual)
      fail(Errc::imo_check_digit_mismatch, "IMO number '" + std::string(imo) + "' should end in " +
                                               std::to_string(expected));
    Date departure = Date::parse(text.substr(8));
    return ShipmentId(std::string(imo), departure);
  }

  static ShipmentId from_imo_body(std::string_view six_digits, Date departure) {
    std::string imo(six_digits);
    imo.push_back(static_cast<char>('0' + imo_check_digit(six_digits)));
    return ShipmentId(std::move(imo), departure);
  }

  const std::string& imo_number() const { return imo_; }
  const Date& departure_date() const { return departure_; }

  std::string to_string() const { return imo_ + "-" + departure_.to_string(); }

  auto operator<=>(const ShipmentId&) const = default;

 private:
  std::string imo_;
  Date departure_;
};

inline ShipmentId parse_shipment_id(std::string_view text) { return ShipmentId::parse(text); }

}  // namespace defend
