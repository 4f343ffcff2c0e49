#include <doctest.h>

#include "fixtures.hpp"
#include "gen.hpp"
#include "gmeta/digest.hpp"
#include "gmeta/error.hpp"
#include "gmeta/expression.hpp"
#include "gmeta/form_ops.hpp"
#include "gmeta/json_codec.hpp"
#include "gmeta/parser.hpp"

using namespace gmeta;
using namespace gmeta_test;

namespace {

constexpr std::uint64_t kSeed = 0x5eed'f0e5;

/// A few random structural edits, each of which keeps the form valid.
Form mutate(Gen& g, const Form& f) {
  Form out = f;
  int edits = 1 + g.below(4);
  for (int i = 0; i < edits; ++i) {
    try {
      switch (g.below(5)) {
        case 0: {
          auto kids = Gen::child_paths(out);
          if (!kids.empty()) out = remove_child(out, g.pick(kids));
          break;
        }
        case 1:
          if (section(out, Kind::implements)) {
            Form s = g.step(3);
            if (!step(out, *s.name())) out = add_child(out, "implements", s);
          } else {
            out = add_child(out, "", g.section(Kind::implements, 4));
          }
          break;
        case 2: {
          auto steps_now = steps(out);
          if (!steps_now.empty()) {
            const Form& s = g.pick(steps_now);
            out = set(out, "implements." + *s.name() + "." + g.ident(), g.literal(2));
          }
          break;
        }
        case 3: out = out.with_name(g.ident()); break;
        default: out = add_child(out, "", g.section(Kind::constants, 3)); break;
      }
    } catch (const Error&) {
    }
  }
  return out;
}

/// Capability oracle over the JSON encoding, independent of form_ops.
void json_caps(const nlohmann::json& j, std::set<std::string>& out) {
  if (j["kind"] == "ask" && j["variant"].is_object()) {
    const auto& v = j["variant"];
    out.insert((v["key"] == "using" ? "model:" : "call:") + v["value"].get<std::string>());
  }
  for (const auto& c : j["children"]) json_caps(c, out);
}

PolicyContext enlarge(Gen& g, PolicyContext pi) {
  if (g.coin()) pi.allowed_caps.push_back(g.coin() ? "model:*" : "call:*");
  if (g.coin()) pi.allowed_models.push_back(g.coin() ? "*" : g.pick(model_pool()));
  if (g.coin()) pi.budget += g.below(100);
  if (g.coin() && pi.min_trust != TrustLevel::untrusted) {
    pi.min_trust = static_cast<TrustLevel>(static_cast<int>(pi.min_trust) - 1);
  }
  return pi;
}

}  // namespace

TEST_SUITE("property") {
  TEST_CASE("generated machines are valid and round-trip") {
    Gen g(kSeed);
    for (int i = 0; i < 500; ++i) {
      Form f = g.machine();
      auto problems = validate(f);
      REQUIRE_MESSAGE(problems.empty(), "case " << i << ": " << problems.front().path << " " << problems.front().rule);
      std::string text = to_text(f);
      INFO("case " << i << "\n" << text);
      CHECK(from_text(text) == f);
      CHECK(to_text(from_text(text)) == text);
      CHECK(from_json(to_json(f)) == f);
      CHECK(hash(f) == sha256_hex(text));
    }
  }

  TEST_CASE("set of a read value is the identity") {
    Gen g(kSeed + 1);
    for (int i = 0; i < 200; ++i) {
      Form f = g.machine();
      for (const auto& p : Gen::paths(f)) {
        auto v = get(f, p);
        REQUIRE_MESSAGE(v.has_value(), p);
        if (p == "kind" || (p.size() >= 5 && p.compare(p.size() - 5, 5, ".kind") == 0)) continue;
        CHECK_MESSAGE(set(f, p, *v) == f, p);
      }
    }
  }

  TEST_CASE("diff and apply_diff agree") {
    Gen g(kSeed + 2);
    for (int i = 0; i < 400; ++i) {
      Form a = g.machine();
      Form b = mutate(g, a);
      FormDiff d = diff(a, b);
      INFO("case " << i << "\n" << to_text(a) << "---\n" << to_text(b));
      CHECK(apply_diff(a, d) == b);
      CHECK(d.empty() == (a == b));
      CHECK(diff_from_json(diff_to_json(d)) == d);

      FormDiff r = diff(b, a);
      CHECK(apply_diff(b, r) == a);
      REQUIRE(r.entries.size() == d.entries.size());
    }
  }

  TEST_CASE("merge is idempotent") {
    Gen g(kSeed + 3);
    for (int i = 0; i < 200; ++i) {
      Form f = g.machine();
      CHECK(merge(f, f) == f);
    }
  }

  TEST_CASE("capabilities match a brute-force traversal") {
    Gen g(kSeed + 4);
    for (int i = 0; i < 300; ++i) {
      Form f = g.machine();
      std::set<std::string> expected;
      json_caps(form_to_json(f), expected);
      std::set<std::string> actual;
      for (const auto& atom : capabilities(f)) actual.insert(atom.str());
      CHECK(actual == expected);
      CHECK(compute_capset(f) == capabilities(f));
    }
  }

  TEST_CASE("inspection is deterministic and monotone in the policy") {
    Gen g(kSeed + 5);
    int approvals = 0;
    for (int i = 0; i < 400; ++i) {
      Form f = g.wild();
      PolicyContext pi = g.policy();
      TrustLevel t = g.trust();
      auto a = inspect_form(f, pi, t);
      CHECK(a == inspect_form(f, pi, t));
      CHECK(a.checks.size() == 6);
      CHECK(a.approved() == a.failed_checks().empty());
      if (!a.approved()) continue;
      ++approvals;
      PolicyContext wider = enlarge(g, pi);
      CHECK(inspect_form(f, wider, t).approved());
      if (t != TrustLevel::human) CHECK(inspect_form(f, pi, static_cast<TrustLevel>(static_cast<int>(t) + 1)).approved());
    }
    CHECK(approvals > 20);
  }

  TEST_CASE("parser reports only parse errors on mutated sources") {
    Gen g(kSeed + 6);
    auto names = corpus_names();
    static const std::vector<std::string> noise{" ", "  ", "\t", ":", "\"", "*(", "$(...", "quote", "\n", "#", "x", "}", "["};
    for (int i = 0; i < 2000; ++i) {
      std::string text = read_file(fixture("corpus/" + g.pick(names)));
      int edits = 1 + g.below(3);
      for (int e = 0; e < edits; ++e) {
        auto pos = static_cast<std::size_t>(g.below(static_cast<int>(text.size()) + 1));
        if (g.coin() && pos < text.size()) {
          text.erase(pos, 1 + static_cast<std::size_t>(g.below(4)));
        } else {
          text.insert(pos, g.pick(noise));
        }
      }
      try {
        Form f = parse_source(text);
        CHECK(from_text(to_text(f)) == f);
      } catch (const ParseError& e) {
        CHECK(e.line() >= 1);
        CHECK(e.column() >= 1);
      } catch (const std::exception& e) {
        FAIL_CHECK("unexpected " << std::string(e.what()) << " for:\n" << text);
      }
    }
  }

  TEST_CASE("evaluation never touches the directive log") {
    Gen g(kSeed + 7);
    static const std::vector<std::string> texts{
        "input.a + 1", "input.a < input.b", "match input.a { case 1 => \"one\" case _ => \"many\" }",
        "form.count_steps(reflect())", "form.diff(reflect(), form.set(reflect(), \"name\", \"x\"))",
        "form.validate(reflect())", "form.from_text(form.to_text(reflect()))", "[input.a, {k: input.b}]",
        "form.capabilities(reflect())", "form.hash(reflect())", "form.merge(reflect(), reflect())"};
    for (int i = 0; i < 500; ++i) {
      Form f = g.machine();
      Env env;
      env.bind("input", Map{{"a", g.literal(1)}, {"b", g.literal(1)}});
      env.bind_reflect(f);
      DirectiveLog log;
      try {
        eval(*parse_expression(g.pick(texts)), env, log);
      } catch (const Error&) {
      }
      CHECK(log.empty());
    }
  }
}
