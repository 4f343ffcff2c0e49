#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gmeta/form.hpp"
#include "gmeta/inspector.hpp"

namespace gmeta_test {

std::filesystem::path fixture_dir();
std::filesystem::path fixture(const std::string& relative);
std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& text);

gmeta::Form load_form(const std::string& corpus_name);
gmeta::PolicyContext load_policy_fixture(const std::string& name);

/// Corpus file name -> sha256 hex, as recorded by sha256sum.
std::map<std::string, std::string> golden_hashes();
std::vector<std::string> corpus_names();

/// Policy used by the greeter and self-modification examples.
gmeta::PolicyContext example_policy();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline constexpr const char* kEmptyHash = "727eb6dee528d0f25da8c2f27828c0bee9ce6e41db6c10b63520ed2d2b6c69a2";
inline constexpr const char* kGreeterHash = "887afe01702c13af1fbc1afbc88c83fa0be0eeb2e9e5f29c38acca5357c659b5";
inline constexpr const char* kSonnetHash = "419b2a633a8e08a0e3bf60f829a2e0623a5f404aca27f5db0a636f3b1a0b8371";
inline constexpr const char* kOpusHash = "6d032f37f85880320f74bad1be582c205dd9b1a2cd177b9ecf836cab3a4911b9";

}  // namespace gmeta_test
