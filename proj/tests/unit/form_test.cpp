#include <doctest.h>

#include "fixtures.hpp"
#include "gmeta/digest.hpp"
#include "gmeta/error.hpp"
#include "gmeta/form_ops.hpp"

using namespace gmeta;
using namespace gmeta_test;

namespace {

template <typename F>
ErrorCode code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::internal;
}

}  // namespace

TEST_SUITE("form") {
  TEST_CASE("construction") {
    Form m = new_form(Kind::machine, "m");
    CHECK(m.kind() == Kind::machine);
    CHECK(m.name() == std::optional<std::string>("m"));
    CHECK(m.children().empty());
    CHECK(m.fields().empty());

    Form p = new_form(Kind::provides);
    CHECK_FALSE(p.name().has_value());

    CHECK(code_of([] { new_form(Kind::compute); }) == ErrorCode::missing_required_name);
    CHECK(code_of([] { new_form("bogus"); }) == ErrorCode::invalid_kind);
    CHECK(new_form("ask", "x").kind() == Kind::ask);
  }

  TEST_CASE("copies share storage and edits leave the original alone") {
    Form a = new_form(Kind::machine, "a");
    Form b = a.with_name("b");
    CHECK(a.name() == std::optional<std::string>("a"));
    CHECK(b.name() == std::optional<std::string>("b"));
    Form c = a;
    CHECK(c == a);
  }

  TEST_CASE("duplicate field keys are rejected") {
    Form f(Kind::constants);
    CHECK(code_of([&] { f.with_fields({{"x", 1}, {"x", 2}}); }) == ErrorCode::invalid_value);
    Form g = f.with_field("x", 1).with_field("x", 2);
    REQUIRE(g.fields().size() == 1);
    CHECK(g.fields()[0].value == Value(2));
  }

  TEST_CASE("get") {
    Form greeter = load_form("greeter.mt");
    auto greeting = get(greeter, "implements.greet.greeting");
    REQUIRE(greeting);
    REQUIRE(greeting->is<Expression>());
    CHECK(greeting->get_if<Expression>()->text() == "\"Hello, \" + input.name");

    Form si = load_form("self_improving.mt");
    CHECK(get(si, "implements.classify.variant_value") == std::optional<Value>("claude-sonnet-4-6"));
    CHECK(get(si, "implements.classify.variant_key") == std::optional<Value>("using"));
    CHECK(get(si, "implements.#1.name") == std::optional<Value>("classify"));
    CHECK(get(si, "implements.kind") == std::optional<Value>("implements"));
    CHECK_FALSE(get(greeter, "no.such.path").has_value());
    CHECK(code_of([&] { get(greeter, "a..b"); }) == ErrorCode::malformed_path);
  }

  TEST_CASE("get walks into map values") {
    Form md = load_form("metadata.mt");
    CHECK(get(md, "metadata.owner.team") == std::optional<Value>("platform"));
  }

  TEST_CASE("set") {
    Form si = load_form("self_improving.mt");
    Form opus = set(si, "implements.classify.variant_value", "claude-opus-4-6");
    CHECK(get(opus, "implements.classify.variant_value") == std::optional<Value>("claude-opus-4-6"));
    CHECK(hash(opus) == kOpusHash);
    CHECK(hash(si) == kSonnetHash);

    for (const char* p : {"name", "implements.classify.variant_value", "implements.propose.improvement",
                          "implements.classify.task.content"}) {
      CAPTURE(p);
      auto v = get(si, p);
      REQUIRE(v);
      CHECK(set(si, p, *v) == si);
    }

    Form greeter = load_form("greeter.mt");
    Form hi = set(greeter, "implements.greet.greeting", Value::expression("\"Hi\""));
    CHECK(hi != greeter);
    CHECK(hash(hi) == "979e67fd179b3151dd9d62d55a2af4cc2e614ca9713490c8ba84df40e04508dc");
    CHECK(hash(greeter) == kGreeterHash);

    CHECK(code_of([&] { set(greeter, "implements.nothing.x", 1); }) == ErrorCode::path_not_found);
    CHECK(code_of([&] { set(greeter, "kind", "compute"); }) == ErrorCode::illegal_attribute_write);
  }

  TEST_CASE("add, remove, replace") {
    Form greeter = load_form("greeter.mt");
    Form wave = new_form(Kind::compute, "wave").with_field("gesture", "wave");
    Form two = add_child(greeter, "implements", wave);
    CHECK(count_steps(two) == 2);
    CHECK(hash(two) == "cadab40e6cce3465fc9e8eeebdd336e928239c43a0939c7fd237d5bcaee51daf");

    Form none = remove_child(greeter, "implements.greet");
    REQUIRE(section(none, Kind::implements));
    CHECK(section(none, Kind::implements)->children().empty());

    CHECK(code_of([&] { add_child(greeter, "implements", new_form(Kind::machine, "x")); }) ==
          ErrorCode::illegal_child_kind);
    CHECK(code_of([&] { remove_child(greeter, "implements.absent"); }) == ErrorCode::path_not_found);

    Form replaced = replace_child(greeter, "implements.greet", wave);
    CHECK(step(replaced, "wave").has_value());
    CHECK_FALSE(step(replaced, "greet").has_value());
    CHECK(code_of([&] { replace_child(greeter, "implements.greet", new_form(Kind::inputs)); }) ==
          ErrorCode::illegal_child_kind);

    Form governed = add_child(greeter, "", new_form(Kind::governance));
    CHECK(section(governed, Kind::governance).has_value());
  }

  TEST_CASE("merge") {
    Form greeter = load_form("greeter.mt");
    CHECK(merge(greeter, greeter) == greeter);

    Form overlay = new_form(Kind::machine, "greeter")
                       .with_child(new_form(Kind::governance)
                                       .with_child(new_form(Kind::policies).with_field("review", "human")));
    Form merged = merge(greeter, overlay);
    CHECK(hash(merged) == "f537f9d36b85d5a0c7118b2b5c87e5544e08e9189db53156da497e55fbee6f0f");

    Form a = new_form(Kind::machine, "a").with_child(new_form(Kind::constants).with_field("x", 1));
    Form b = new_form(Kind::machine, "b").with_child(new_form(Kind::constants).with_field("x", 2));
    Form ab = merge(a, b);
    CHECK(get(ab, "constants.x") == std::optional<Value>(2));
    CHECK(ab.name() == std::optional<std::string>("b"));

    CHECK(code_of([&] { merge(greeter, new_form(Kind::provides)); }) == ErrorCode::kind_mismatch);
  }

  TEST_CASE("diff") {
    Form si = load_form("self_improving.mt");
    CHECK(diff(si, si).empty());

    Form opus = set(si, "implements.classify.variant_value", "claude-opus-4-6");
    FormDiff d = diff(si, opus);
    REQUIRE(d.entries.size() == 1);
    CHECK(d.entries[0].path == "implements.classify.variant_value");
    CHECK(d.entries[0].op == DiffOp::modified);
    CHECK(d.entries[0].target == DiffTarget::attribute);
    CHECK(d.entries[0].before == std::optional<Value>("claude-sonnet-4-6"));
    CHECK(d.entries[0].after == std::optional<Value>("claude-opus-4-6"));
    CHECK(apply_diff(si, d) == opus);

    FormDiff back = diff(opus, si);
    REQUIRE(back.entries.size() == 1);
    CHECK(back.entries[0].path == d.entries[0].path);
    CHECK(back.entries[0].before == d.entries[0].after);
    CHECK(back.entries[0].after == d.entries[0].before);

    Form renamed = si.with_name("other");
    FormDiff rd = diff(si, renamed);
    REQUIRE(rd.entries.size() == 1);
    CHECK(rd.entries[0].path == "name");
  }

  TEST_CASE("diff covers added and removed children and fields") {
    Form greeter = load_form("greeter.mt");
    Form wave = new_form(Kind::compute, "wave").with_field("gesture", "wave");
    Form two = add_child(greeter, "implements", wave);
    FormDiff d = diff(greeter, two);
    REQUIRE(d.entries.size() == 1);
    CHECK(d.entries[0].op == DiffOp::added);
    CHECK(d.entries[0].target == DiffTarget::child);
    CHECK(d.entries[0].path == "implements.wave");
    CHECK(apply_diff(greeter, d) == two);

    FormDiff r = diff(two, greeter);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].op == DiffOp::removed);
    CHECK(apply_diff(two, r) == greeter);

    CHECK(code_of([&] { set(greeter, "implements.greet.loud", true); }) == ErrorCode::path_not_found);
    Form extra = replace_child(greeter, "implements.greet", step(greeter, "greet")->with_field("loud", true));
    FormDiff fd = diff(greeter, extra);
    REQUIRE(fd.entries.size() == 1);
    CHECK(fd.entries[0].target == DiffTarget::field);
    CHECK(fd.entries[0].op == DiffOp::added);
    CHECK(apply_diff(greeter, fd) == extra);
  }

  TEST_CASE("validate") {
    CHECK(validate(load_form("greeter.mt")).empty());

    auto root = validate(new_form(Kind::compute, "c"));
    REQUIRE_FALSE(root.empty());
    CHECK(root[0].path == "");
    CHECK(root[0].rule == "root-must-be-machine");

    Form s = new_form(Kind::compute, "dup");
    Form dup = new_form(Kind::machine, "m").with_child(new_form(Kind::implements).with_child(s).with_child(s));
    auto v = validate(dup);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule == "duplicate-name");
    CHECK(v[0].path == "implements.#1");

    Form tests = new_form(Kind::machine, "m").with_child(
        new_form(Kind::tests).with_child(new_form(Kind::test)).with_child(new_form(Kind::test)));
    CHECK(validate(tests).empty());

    Form bad_ask = new_form(Kind::machine, "m").with_child(new_form(Kind::implements).with_child(new_form(Kind::ask, "a")));
    auto va = validate(bad_ask);
    REQUIRE(va.size() == 1);
    CHECK(va[0].rule == "ask-missing-variant");
  }

  TEST_CASE("steps") {
    Form greeter = load_form("greeter.mt");
    CHECK(count_steps(greeter) == 1);
    CHECK(step_types(greeter) == std::map<Kind, std::size_t>{{Kind::compute, 1}});

    Form si = load_form("self_improving.mt");
    CHECK(count_steps(si) == 4);
    CHECK(step_types(si) == std::map<Kind, std::size_t>{{Kind::compute, 2}, {Kind::ask, 2}});

    CHECK(count_steps(new_form(Kind::machine, "m")) == 0);
  }

  TEST_CASE("capabilities") {
    CHECK(capabilities(load_form("greeter.mt")).empty());
    CapSet si = capabilities(load_form("self_improving.mt"));
    CHECK(si == CapSet{CapabilityAtom::parse("model:claude-sonnet-4-6"),
                       CapabilityAtom::parse("call:@system/evolution/propose")});

    CapSet multi = capabilities(load_form("multi_ask.mt"));
    CHECK(multi == CapSet{CapabilityAtom::parse("model:model-a"), CapabilityAtom::parse("model:model-b")});

    Form bad = new_form(Kind::machine, "m").with_child(new_form(Kind::implements).with_child(new_form(Kind::ask, "a")));
    CHECK(code_of([&] { capabilities(bad); }) == ErrorCode::malformed_ask);
  }

  TEST_CASE("canonical text and hash") {
    Form empty = new_form(Kind::machine, "empty");
    CHECK(to_text(empty) == "machine empty\n");
    CHECK(hash(empty) == kEmptyHash);
    CHECK(sha256_hex("machine empty\n") == kEmptyHash);
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(to_text(new_form(Kind::compute, "c")) == "compute c\n");
    Form bare = new_form(Kind::machine, "m").with_child(new_form(Kind::implements).with_child(new_form(Kind::ask, "a")));
    CHECK(code_of([&] { to_text(bare); }) == ErrorCode::invalid_form);
  }

  TEST_CASE("numbers print in shortest round-trip form") {
    CHECK(format_number(0) == "0");
    CHECK(format_number(-42) == "-42");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e21) == "1e+21");
    CHECK(format_number(1e-7) == "1e-07");
    CHECK(format_number(123456789012.0) == "123456789012");
  }

  TEST_CASE("identifiers") {
    CHECK(is_identifier("greet"));
    CHECK(is_identifier("_x9"));
    CHECK_FALSE(is_identifier("9x"));
    CHECK_FALSE(is_identifier("a-b"));
    CHECK_FALSE(is_identifier(""));
  }
}
