#include "blockiot/cas/keys.hpp"

#include <sodium.h>

#include <mutex>
#include <stdexcept>

namespace blockiot::cas {

namespace {
void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
  });
}
} // namespace

KeyPair KeyPair::from_seed(const Seed &seed) {
  ensure_sodium();
  KeyPair kp;
  kp.seed = seed;
  crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(),
                           seed.data());
  return kp;
}

KeyPair KeyPair::generate() {
  ensure_sodium();
  Seed seed;
  randombytes_buf(seed.data(), seed.size());
  return from_seed(seed);
}

Signature sign(const SecretKey &sk, std::string_view message) {
  ensure_sodium();
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr,
                       reinterpret_cast<const unsigned char *>(message.data()),
                       message.size(), sk.data());
  return sig;
}

bool verify(const PublicKey &pk, std::string_view message,
            const Signature &sig) {
  ensure_sodium();
  return crypto_sign_verify_detached(
             sig.data(),
             reinterpret_cast<const unsigned char *>(message.data()),
             message.size(), pk.data()) == 0;
}

} // namespace blockiot::cas
