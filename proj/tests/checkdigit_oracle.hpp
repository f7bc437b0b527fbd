// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

// Brute-force check-digit oracles, kept independent of the library
// implementations they are used to verify.

#pragma once

#include <string_view>

namespace oracle {

// ISO 6346 letter values written out from the published table: A=10 and up,
// with 11, 22 and 33 unused.
inline int iso6346_letter(char c) {
  switch (c) {
    case 'A': return 10;
    case 'B': return 12;
    case 'C': return 13;
    case 'D': return 14;
    case 'E': return 15;
    case 'F': return 16;
    case 'G': return 17;
    case 'H': return 18;
    case 'I': return 19;
    case 'J': return 20;
    case 'K': return 21;
    case 'L': return 23;
    case 'M': return 24;
    case 'N': return 25;
    case 'O': return 26;
    case 'P': return 27;
    case 'Q': return 28;
    case 'R': return 29;
    case 'S': return 30;
    case 'T': return 31;
    case 'U': return 32;
    case 'V': return 34;
    case 'W': return 35;
    case 'X': return 36;
    case 'Y': return 37;
    case 'Z': return 38;
  }
  return -1;
}

// Expects a well-formed 10-character prefix; returns -1 on anything else.
inline int iso6346_remainder(std::string_view prefix) {
  if (prefix.size() != 10) return -1;
  long sum = 0;
  for (int i = 0; i < 10; ++i) {
    long value;
    if (i < 4) {
      if (prefix[i] < 'A' || prefix[i] > 'Z') return -1;
      value = iso6346_letter(prefix[i]);
    } else {
      if (prefix[i] < '0' || prefix[i] > '9') return -1;
      value = prefix[i] - '0';
    }
    sum += value << i;  // weight 2^i
  }
  return static_cast<int>(sum % 11);
}

inline int iso6346_check_digit(std::string_view prefix) {
  int remainder = iso6346_remainder(prefix);
  return remainder == 10 ? 0 : remainder;
}

// IMO check digit: digits weighted 7,6,5,4,3,2 left to right, sum mod 10.
inline int imo_check_digit(std::string_view six_digits) {
  if (six_digits.size() != 6) return -1;
  int sum = 0;
  int weights[6] = {7, 6, 5, 4, 3, 2};
  for (int i = 0; i < 6; ++i) {
    if (six_digits[i] < '0' || six_digits[i] > '9') return -1;
    sum += (six_digits[i] - '0') * weights[i];
  }
  return sum % 10;
}

}  // namespace oracle
