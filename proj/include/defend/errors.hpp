// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace defend {

enum class Errc {
  malformed_id,
  check_digit_mismatch,
  imo_check_digit_mismatch,
  invalid_date,
  invalid_claim,
  unsupported_scheme,
  not_a_customs_agency,
  encryption_failure,
  decryption_failure,
  duplicate_ballot,
  non_member_ballot,
  hash_chain_mismatch,
  height_mismatch,
  corrupt_ledger,
  truncated_file,
  not_proposer,
  revoked_actor,
  unknown_destination_agency,
  scenario_error,
  io_error,
};

constexpr const char* to_string(Errc c) {
  switch (c) {
    case Errc::malformed_id: return "MALFORMED_ID";
    case Errc::check_digit_mismatch: return "CHECK_DIGIT_MISMATCH";
    case Errc::imo_check_digit_mismatch: return "IMO_CHECK_DIGIT_MISMATCH";
    case Errc::invalid_date: return "INVALID_DATE";
    case Errc::invalid_claim: return "INVALID_CLAIM";
    case Errc::unsupported_scheme: return "UNSUPPORTED_SCHEME";
    case Errc::not_a_customs_agency: return "NOT_A_CUSTOMS_AGENCY";
    case Errc::encryption_failure: return "ENCRYPTION_FAILURE";
    case Errc::decryption_failure: return "DECRYPTION_FAILURE";
    case Errc::duplicate_ballot: return "DUPLICATE_BALLOT";
    case Errc::non_member_ballot: return "NON_MEMBER_BALLOT";
    case Errc::hash_chain_mismatch: return "HASH_CHAIN_MISMATCH";
    case Errc::height_mismatch: return "HEIGHT_MISMATCH";
    case Errc::corrupt_ledger: return "CORRUPT_LEDGER";
    case Errc::truncated_file: return "TRUNCATED_FILE";
    case Errc::not_proposer: return "NOT_PROPOSER";
    case Errc::revoked_actor: return "REVOKED_ACTOR";
    case Errc::unknown_destination_agency: return "UNKNOWN_DESTINATION_AGENCY";
    case Errc::scenario_error: return "SCENARIO_ERROR";
    case Errc::io_error: return "IO_ERROR";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace defend
