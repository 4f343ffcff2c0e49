#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "gmeta/form_ops.hpp"
#include "gmeta/parser.hpp"

using namespace gmeta;
using namespace gmeta_test;

namespace {

struct Failure {
  ParseErrorKind kind;
  int line;
  int column;
};

Failure parse_failure(const std::string& text) {
  try {
    parse_source(text);
  } catch (const ParseError& e) {
    return {e.kind(), e.line(), e.column()};
  }
  FAIL("expected a parse error for: " << text);
  return {};
}

const char* kGreeterTemplate =
    "machine greeter\n"
    "  provides\n"
    "    inputs\n"
    "      name: text, required\n"
    "  implements\n"
    "    compute greet\n"
    "      greeting: \"Hello, \" + input.name\n";

}  // namespace

TEST_SUITE("parser") {
  TEST_CASE("greeter listing") {
    Form f = parse_source(read_file(fixture("corpus/greeter.mt")));
    CHECK(f.kind() == Kind::machine);
    CHECK(f.name() == std::optional<std::string>("greeter"));
    REQUIRE(f.children().size() == 2);
    CHECK(f.children()[0].kind() == Kind::provides);
    CHECK(f.children()[1].kind() == Kind::implements);
    CHECK(count_steps(f) == 1);
  }

  TEST_CASE("comments and blank lines are ignored") {
    Form a = parse_source("machine m # trailing\n\n  constants\n    # whole line\n    s: \"a # kept\"\n");
    CHECK(get(a, "constants.s") == std::optional<Value>("a # kept"));
  }

  TEST_CASE("indentation errors") {
    auto skipped = parse_failure("machine m\n    compute x\n");
    CHECK(skipped.kind == ParseErrorKind::indentation);
    CHECK(skipped.line == 2);

    auto odd = parse_failure("machine m\n bogus\n");
    CHECK(odd.kind == ParseErrorKind::indentation);

    auto tab = parse_failure("machine m\n\tconstants\n");
    CHECK(tab.kind == ParseErrorKind::indentation);
    CHECK(tab.line == 2);
    CHECK(tab.column == 1);

    CHECK(parse_failure("  machine m\n").kind == ParseErrorKind::indentation);
  }

  TEST_CASE("unknown keyword") {
    auto f = parse_failure("machine m\n  bogus\n");
    CHECK(f.kind == ParseErrorKind::unknown_keyword);
    CHECK(f.line == 2);
    CHECK(f.column == 3);
  }

  TEST_CASE("malformed fields and headers") {
    CHECK(parse_failure("machine m extra\n").kind == ParseErrorKind::malformed_field);
    auto open = parse_failure("machine m\n  constants\n    x: [1,\n");
    CHECK(open.kind == ParseErrorKind::malformed_field);
    CHECK(open.line == 3);
  }

  TEST_CASE("splices outside quotes") {
    auto child = parse_failure("machine m\n  implements\n    $(...xs)\n");
    CHECK(child.kind == ParseErrorKind::malformed_splice);
    CHECK(child.line == 3);
    CHECK(parse_failure("machine m\n  constants\n    x: *(y)\n").kind == ParseErrorKind::malformed_splice);
    CHECK(parse_failure("machine m\n  constants\n    x: $(...y)\n").kind == ParseErrorKind::malformed_splice);
  }

  TEST_CASE("spread is illegal in field position inside a quote") {
    auto f = parse_failure(
        "machine m\n  implements\n    compute c\n      t: quote\n        machine x\n          constants\n"
        "            y: $(...z)\n");
    CHECK(f.kind == ParseErrorKind::malformed_splice);
    CHECK(f.line == 7);
  }

  TEST_CASE("structural violations carry a location") {
    auto roots = parse_failure("machine a\nmachine b\n");
    CHECK(roots.kind == ParseErrorKind::structure);
    CHECK(roots.line == 2);

    auto not_machine = parse_failure("compute c\n");
    CHECK(not_machine.kind == ParseErrorKind::structure);

    auto dup = parse_failure("machine m\n  implements\n    compute a\n      x: 1\n    compute a\n      y: 2\n");
    CHECK(dup.kind == ParseErrorKind::structure);
    CHECK(dup.line == 5);

    CHECK(parse_failure("").kind == ParseErrorKind::structure);
  }

  TEST_CASE("parse errors name the location in what()") {
    try {
      parse_source("machine m\n  bogus\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("2:3") != std::string::npos);
      CHECK(e.code() == ErrorCode::parse_error);
    }
  }

  TEST_CASE("quote without splices is a form value") {
    Form builder = load_form("builder.mt");
    auto t = get(builder, "implements.build.template");
    REQUIRE(t);
    REQUIRE(t->is<Form>());
    CHECK(*t->get_if<Form>() == parse_source(kGreeterTemplate));
  }

  TEST_CASE("quote templates capture splice marks") {
    SourceNode tmpl = parse_quote(kGreeterTemplate);
    CHECK(count_splices(tmpl) == 0);
    CHECK(to_form(tmpl) == parse_source(kGreeterTemplate));

    SourceNode marked = parse_quote("machine g\n  implements\n    compute greet\n      greeting: *(g)\n    $(...steps)\n");
    CHECK(count_splices(marked) == 2);
    const auto& impl = marked.children.at(0);
    const auto& greet = impl.children.at(0);
    REQUIRE(greet.fields.size() == 1);
    const auto& parts = greet.fields[0].parts;
    REQUIRE(parts.size() == 1);
    const auto* mark = std::get_if<SpliceMark>(&parts[0]);
    REQUIRE(mark);
    CHECK(mark->variant == SpliceMark::Variant::scalar_or_form);
    CHECK(mark->expression == "g");

    const auto& spread = impl.children.at(1);
    REQUIRE(spread.splice);
    CHECK(spread.splice->variant == SpliceMark::Variant::spread);
    CHECK(spread.splice->expression == "steps");
  }

  TEST_CASE("splices inside a nested quote belong to the inner quote") {
    Form f = load_form("quote_nested.mt");
    auto factory = get(f, "implements.outer.factory");
    REQUIRE(factory);
    CHECK(factory->is<Form>());
    auto inner = get(f, "implements.outer.factory.implements.make.inner");
    REQUIRE(inner);
    CHECK(inner->is<Expression>());
  }

  TEST_CASE("splices make the quote an expression") {
    Form f = load_form("splicer.mt");
    auto t = get(f, "implements.build.template");
    REQUIRE(t);
    CHECK(t->is<Expression>());
  }

  TEST_CASE("multi-line task content") {
    Form f = load_form("content_lines.mt");
    CHECK(get(f, "implements.poem.task.content") ==
          std::optional<Value>("Write a poem.\nKeep it short.\nAvoid rhymes."));
  }

  TEST_CASE("print") {
    std::string canonical = read_file(fixture("corpus/greeter.mt"));
    CHECK(print(parse_source(canonical)) == canonical);
    CHECK(print(new_form(Kind::machine, "empty")) == "machine empty\n");

    std::string loose = "machine greeter # comment\n\n  provides\n    inputs\n      name:    text,   required\n"
                        "  implements\n    compute greet\n      greeting:   \"Hello, \" +   input.name\n";
    Form f = parse_source(loose);
    CHECK(print(f) == "machine greeter\n  provides\n    inputs\n      name: text,   required\n  implements\n"
                      "    compute greet\n      greeting: \"Hello, \" +   input.name\n");
  }

  TEST_CASE("print is injective over the corpus") {
    std::set<std::string> texts;
    std::set<std::string> names;
    for (const auto& name : corpus_names()) {
      texts.insert(print(load_form(name)));
      names.insert(name);
    }
    CHECK(texts.size() == names.size());
  }

  TEST_CASE("string escapes") {
    CHECK(quote_string("a\"b") == "\"a\\\"b\"");
    CHECK(quote_string("a\\b") == "\"a\\\\b\"");
    CHECK(quote_string("a\nb") == "\"a\\nb\"");
    CHECK(quote_string("\x01") == "\"\\u0001\"");
    Form f = load_form("escapes.mt");
    CHECK(get(f, "constants.quoted") == std::optional<Value>("she said \"hi\""));
    CHECK(get(f, "constants.lines") == std::optional<Value>("one\ntwo"));
    CHECK(get(f, "constants.unicode") == std::optional<Value>("café"));
  }

  TEST_CASE("render_literal") {
    CHECK(render_literal(Value(List{1, "a", true, Null{}})) == "[1, \"a\", true, null]");
    CHECK(render_literal(Value(Map{{"b", 1}, {"a", 2}})) == "{a: 2, b: 1}");
    CHECK(render_literal(Value(Map{{"key with space", 1}})) == "{\"key with space\": 1}");
  }
}
