// Copyright 2026 the defend developers. Licensed
// under the Apache License, Version 2.0. See the COPYING file at the root
// of this distribution or at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <sodium.h>

#include <array>
#include <compare>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>

#include "defend/bytes.hpp"
#include "defend/errors.hpp"

namespace defend {

inline void crypto_init() {
  static const int rc = sodium_init();
  if (rc < 0) fail(Errc::io_error, "libsodium failed to initialize");
}

inline Digest32 sha256(ByteView in) {
  crypto_init();
  Digest32 out;
  crypto_hash_sha256(out.data(), in.data(), in.size());
  return out;
}

// Signature and encryption schemes. ed25519 / x25519-sealed are the production
// pair; mock-sign / mock-seal are deterministic, insecure, and test-only.
enum class SchemeId : uint8_t {
  ed25519 = 1,
  x25519_sealed = 2,
  mock_sign = 3,
  mock_seal = 4,
};

inline std::string to_string(SchemeId s) {
  switch (s) {
    case SchemeId::ed25519: return "ed25519";
    case SchemeId::x25519_sealed: return "x25519-sealed";
    case SchemeId::mock_sign: return "mock-sign";
    case SchemeId::mock_seal: return "mock-seal";
  }
  return "unknown";
}

inline SchemeId parse_scheme(std::string_view name) {
  if (name == "ed25519") return SchemeId::ed25519;
  if (name == "x25519-sealed") return SchemeId::x25519_sealed;
  if (name == "mock-sign") return SchemeId::mock_sign;
  if (name == "mock-seal") return SchemeId::mock_seal;
  fail(Errc::unsupported_scheme, "no scheme named '" + std::string(name) + "'");
}

inline SchemeId scheme_from_byte(uint8_t b) {
  if (b < 1 || b > 4) fail(Errc::unsupported_scheme, "bad scheme byte");
  return static_cast<SchemeId>(b);
}

inline bool is_signing_scheme(SchemeId s) {
  return s == SchemeId::ed25519 || s == SchemeId::mock_sign;
}

inline size_t signature_length(SchemeId s) {
  switch (s) {
    case SchemeId::ed25519: return crypto_sign_BYTES;
    case SchemeId::mock_sign: return 64;
    default: fail(Errc::unsupported_scheme, to_string(s) + " is not a signing scheme");
  }
}

struct Signature {
  SchemeId scheme = SchemeId::ed25519;
  Bytes bytes;

  bool operator==(const Signature&) const = default;
};

struct KeyPair {
  SchemeId scheme = SchemeId::ed25519;
  Bytes public_key;
  Bytes private_key;

  bool operator==(const KeyPair&) const = default;
};

namespace detail {

inline Digest32 tagged_hash(std::string_view tag, ByteView a, ByteView b = {}) {
  Encoder enc;
  enc.str(tag);
  enc.bytes(a);
  enc.bytes(b);
  return sha256(enc.view());
}

}  // namespace detail

inline KeyPair generate_keypair(SchemeId scheme, const Seed32& seed) {
  crypto_init();
  KeyPair kp;
  kp.scheme = scheme;
  switch (scheme) {
    case SchemeId::ed25519: {
      kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
      kp.private_key.resize(crypto_sign_SECRETKEYBYTES);
      crypto_sign_seed_keypair(kp.public_key.data(), kp.private_key.data(), seed.data());
      break;
    }
    case SchemeId::x25519_sealed: {
      kp.public_key.resize(crypto_box_PUBLICKEYBYTES);
      kp.private_key.resize(crypto_box_SECRETKEYBYTES);
      crypto_box_seed_keypair(kp.public_key.data(), kp.private_key.data(), seed.data());
      break;
    }
    case SchemeId::mock_sign: {
      kp.private_key.assign(seed.begin(), seed.end());
      Digest32 pub = detail::tagged_hash("mock-sign-pub", kp.private_key);
      kp.public_key.assign(pub.begin(), pub.end());
      break;
    }
    case SchemeId::mock_seal: {
      // public == private: trivially breakable, which is the point of a mock.
      kp.private_key.assign(seed.begin(), seed.end());
      kp.public_key = kp.private_key;
      break;
    }
  }
  return kp;
}

inline KeyPair generate_keypair(SchemeId scheme) {
  crypto_init();
  Seed32 seed;
  randombytes_buf(seed.data(), seed.size());
  return generate_keypair(scheme, seed);
}

inline KeyPair generate_keypair(std::string_view scheme_name) {
  return generate_keypair(parse_scheme(scheme_name));
}

inline Signature sign(const KeyPair& kp, ByteView message) {
  crypto_init();
  Signature sig;
  sig.scheme = kp.scheme;
  switch (kp.scheme) {
    case SchemeId::ed25519: {
      sig.bytes.resize(crypto_sign_BYTES);
      crypto_sign_detached(sig.bytes.data(), nullptr, message.data(), message.size(),
                           kp.private_key.data());
      break;
    }
    case SchemeId::mock_sign: {
      Digest32 mac = detail::tagged_hash("mock-sign", kp.private_key, message);
      sig.bytes.assign(mac.begin(), mac.end());
      sig.bytes.insert(sig.bytes.end(), kp.private_key.begin(), kp.private_key.end());
      break;
    }
    default:
      fail(Errc::unsupported_scheme, to_string(kp.scheme) + " cannot sign");
  }
  return sig;
}

inline bool verify(SchemeId scheme, ByteView public_key, ByteView message, const Signature& sig) {
  crypto_init();
  if (sig.scheme != scheme || sig.bytes.size() != signature_length(scheme)) return false;
  switch (scheme) {
    case SchemeId::ed25519: {
      if (public_key.size() != crypto_sign_PUBLICKEYBYTES) return false;
      return crypto_sign_verify_detached(sig.bytes.data(), message.data(), message.size(),
                                         public_key.data()) == 0;
    }
    case SchemeId::mock_sign: {
      ByteView priv{sig.bytes.data() + 32, 32};
      Digest32 pub = detail::tagged_hash("mock-sign-pub", priv);
      if (public_key.size() != 32 || std::memcmp(pub.data(), public_key.data(), 32) != 0)
        return false;
      Digest32 mac = detail::tagged_hash("mock-sign", priv, message);
      return std::memcmp(mac.data(), sig.bytes.data(), 32) == 0;
    }
    default:
      return false;
  }
}

// Sealed-box hybrid encryption with an explicit ephemeral seed so that runs are
// reproducible. The x25519 wire format matches libsodium's crypto_box_seal
// (ephemeral public key || box), and seal_open accepts boxes produced either way.
inline Bytes seal(SchemeId scheme, ByteView recipient_public_key, ByteView plaintext,
                  const Seed32& ephemeral_seed) {
  crypto_init();
  switch (scheme) {
    case SchemeId::x25519_sealed: {
      if (recipient_public_key.size() != crypto_box_PUBLICKEYBYTES)
        fail(Errc::encryption_failure, "recipient key has wrong length");
      std::array<uint8_t, crypto_box_PUBLICKEYBYTES> epk;
      std::array<uint8_t, crypto_box_SECRETKEYBYTES> esk;
      crypto_box_seed_keypair(epk.data(), esk.data(), ephemeral_seed.data());
      std::array<uint8_t, crypto_box_NONCEBYTES> nonce;
      crypto_generichash_state st;
      crypto_generichash_init(&st, nullptr, 0, nonce.size());
      crypto_generichash_update(&st, epk.data(), epk.size());
      crypto_generichash_update(&st, recipient_public_key.data(), recipient_public_key.size());
      crypto_generichash_final(&st, nonce.data(), nonce.size());
      Bytes out(epk.size() + crypto_box_MACBYTES + plaintext.size());
      std::memcpy(out.data(), epk.data(), epk.size());
      if (crypto_box_easy(out.data() + epk.size(), plaintext.data(), plaintext.size(),
                          nonce.data(), recipient_public_key.data(), esk.data()) != 0)
        fail(Errc::encryption_failure, "crypto_box_easy failed");
      return out;
    }
    case SchemeId::mock_seal: {
      Digest32 key = detail::tagged_hash("mock-seal-key", recipient_public_key,
                                         ByteView{ephemeral_seed.data(), ephemeral_seed.size()});
      Bytes out(ephemeral_seed.begin(), ephemeral_seed.end());
      Bytes body(plaintext.begin(), plaintext.end());
      for (size_t i = 0; i < body.size(); ++i) body[i] ^= key[i % key.size()];
      Digest32 mac = detail::tagged_hash("mock-seal-mac", ByteView{key.data(), key.size()},
                                         ByteView{body.data(), body.size()});
      out.insert(out.end(), mac.begin(), mac.end());
      out.insert(out.end(), body.begin(), body.end());
      return out;
    }
    default:
      fail(Errc::unsupported_scheme, to_string(scheme) + " cannot seal");
  }
}

inline std::optional<Bytes> seal_open(const KeyPair& kp, ByteView ciphertext) {
  crypto_init();
  switch (kp.scheme) {
    case SchemeId::x25519_sealed: {
      if (ciphertext.size() < crypto_box_SEALBYTES) return std::nullopt;
      Bytes out(ciphertext.size() - crypto_box_SEALBYTES);
      if (crypto_box_seal_open(out.data(), ciphertext.data(), ciphertext.size(),
                               kp.public_key.data(), kp.private_key.data()) != 0)
        return std::nullopt;
      return out;
    }
    case SchemeId::mock_seal: {
      if (ciphertext.size() < 64) return std::nullopt;
      ByteView eph{ciphertext.data(), 32};
      ByteView mac{ciphertext.data() + 32, 32};
      ByteView body{ciphertext.data() + 64, ciphertext.size() - 64};
      Digest32 key = detail::tagged_hash("mock-seal-key", kp.private_key, eph);
      Digest32 expect = detail::tagged_hash("mock-seal-mac", ByteView{key.data(), key.size()}, body);
      if (std::memcmp(expect.data(), mac.data(), 32) != 0) return std::nullopt;
      Bytes out(body.begin(), body.end());
      for (size_t i = 0; i < out.size(); ++i) out[i] ^= key[i % key.size()];
      return out;
    }
    default:
      return std::nullopt;
  }
}

// Deterministic RNG for simulation and fixture generation (splitmix64).
class DetRng {
 public:
  explicit DetRng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t uniform(uint64_t n) { return n == 0 ? 0 : next() % n; }

  // [lo, hi] inclusive
  int64_t range(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(uniform(static_cast<uint64_t>(hi - lo + 1)));
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return unit() < p; }

  Seed32 seed32() {
    Seed32 s;
    for (int i = 0; i < 4; ++i) {
      uint64_t v = next();
      std::memcpy(s.data() + i * 8, &v, 8);
    }
    return s;
  }

  DetRng fork(uint64_t stream) {
    Encoder enc;
    enc.u64(state_);
    enc.u64(stream);
    Digest32 h = sha256(enc.view());
    uint64_t s;
    std::memcpy(&s, h.data(), 8);
    return DetRng(s);
  }

 private:
  uint64_t state_;
};

}  // namespace defend
