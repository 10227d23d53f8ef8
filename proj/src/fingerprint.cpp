// SPDX-License-Identifier: Apache-2.0
#include "dsvd/fingerprint.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <span>

#include "dsvd/error.hpp"

namespace dsvd {

std::string fingerprint(const Checkpoint& ckpt) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    raise(ErrorCode::IoFailure, "SHA-256 initialisation failed");

  serialize_checkpoint(
      ckpt,
      [&](std::span<const std::byte> chunk) { EVP_DigestUpdate(ctx.get(), chunk.data(), chunk.size()); },
      /*include_metadata=*/false);

  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

}  // namespace dsvd
