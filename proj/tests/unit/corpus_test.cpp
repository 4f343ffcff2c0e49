#include <doctest.h>

#include "fixtures.hpp"
#include "gmeta/digest.hpp"
#include "gmeta/form_ops.hpp"

using namespace gmeta;
using namespace gmeta_test;

TEST_SUITE("corpus") {
  TEST_CASE("corpus has at least thirty forms") { CHECK(golden_hashes().size() >= 30); }

  TEST_CASE("every corpus file is canonical and hashes to its recorded digest") {
    for (const auto& [name, digest] : golden_hashes()) {
      CAPTURE(name);
      std::string text = read_file(fixture("corpus/" + name));
      Form f = from_text(text);
      CHECK(to_text(f) == text);
      CHECK(from_text(to_text(f)) == f);
      CHECK(from_json(to_json(f)) == f);
      CHECK(hash(f) == digest);
      CHECK(sha256_hex(text) == digest);
      CHECK(validate(f).empty());
    }
  }

  TEST_CASE("well-known digests") {
    auto golden = golden_hashes();
    CHECK(golden["empty.mt"] == kEmptyHash);
    CHECK(golden["greeter.mt"] == kGreeterHash);
    CHECK(golden["self_improving.mt"] == kSonnetHash);
    CHECK(golden["self_improving_opus.mt"] == kOpusHash);
  }
}
