#pragma once

#include <string>
#include <string_view>

namespace gmeta {

/// Lowercase hex SHA-256 of the bytes of `data`.
std::string sha256_hex(std::string_view data);

/// 64 zero hex digits; the back-link of the first ledger entry.
inline const std::string& zero_digest() {
  static const std::string z(64, '0');
  return z;
}

}  // namespace gmeta
