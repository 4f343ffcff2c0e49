#include "gmeta/form_ops.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <set>

#include "gmeta/digest.hpp"
#include "gmeta/error.hpp"
#include "gmeta/parser.hpp"

namespace gmeta {
namespace {

std::vector<std::string_view> split_path(std::string_view path) {
  if (path.empty()) throw Error(ErrorCode::malformed_path, "empty path");
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto dot = path.find('.', start);
    auto seg = path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
    if (seg.empty()) throw Error(ErrorCode::malformed_path, "empty segment in '" + std::string(path) + "'");
    out.push_back(seg);
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return out;
}

std::string join(std::string_view prefix, std::string_view seg) {
  if (prefix.empty()) return std::string(seg);
  std::string out(prefix);
  out += '.';
  out += seg;
  return out;
}

std::string child_key(const Form& c) {
  return c.name() ? *c.name() : std::string(keyword(c.kind()));
}

std::optional<std::size_t> parse_index_segment(std::string_view seg) {
  if (seg.size() < 2 || seg[0] != '#') return std::nullopt;
  std::size_t idx = 0;
  auto [p, ec] = std::from_chars(seg.data() + 1, seg.data() + seg.size(), idx);
  if (ec != std::errc{} || p != seg.data() + seg.size()) return std::nullopt;
  return idx;
}

std::optional<std::size_t> find_child(const Form& f, std::string_view seg) {
  const auto& kids = f.children();
  if (auto idx = parse_index_segment(seg)) {
    if (*idx < kids.size()) return idx;
    return std::nullopt;
  }
  for (std::size_t i = 0; i < kids.size(); ++i) {
    if (child_key(kids[i]) == seg) return i;
  }
  return std::nullopt;
}

bool is_attribute(std::string_view seg) {
  return seg == "name" || seg == "kind" || seg == "variant_key" || seg == "variant_value" ||
         seg == "content";
}

std::optional<Value> attribute(const Form& f, std::string_view seg) {
  if (seg == "name") return f.name() ? std::optional<Value>(*f.name()) : std::nullopt;
  if (seg == "kind") return Value(std::string(keyword(f.kind())));
  if (seg == "variant_key") return f.variant() ? std::optional<Value>(f.variant()->key) : std::nullopt;
  if (seg == "variant_value") return f.variant() ? std::optional<Value>(f.variant()->value) : std::nullopt;
  if (seg == "content") return f.content() ? std::optional<Value>(*f.content()) : std::nullopt;
  return std::nullopt;
}

std::optional<Value> get_in(const Value& cur, std::span<const std::string_view> segs) {
  if (segs.empty()) return cur;
  auto seg = segs.front();
  auto rest = segs.subspan(1);
  if (const Form* f = cur.get_if<Form>()) {
    if (auto idx = find_child(*f, seg)) return get_in(Value(f->children()[*idx]), rest);
    if (const Value* v = f->field(seg)) return get_in(*v, rest);
    if (rest.empty()) return attribute(*f, seg);
    return std::nullopt;
  }
  if (const Map* m = cur.get_if<Map>()) {
    if (const Value* v = m->find(seg)) return get_in(*v, rest);
  }
  return std::nullopt;
}

Form write_attribute(const Form& f, std::string_view seg, const Value& v) {
  if (seg == "kind") throw Error(ErrorCode::illegal_attribute_write, "kind is not writable");
  if (seg == "name") {
    if (v.is_null()) return f.with_name(std::nullopt);
    const auto* s = v.get_if<std::string>();
    if (!s) throw Error(ErrorCode::invalid_value, "name must be text");
    return f.with_name(*s);
  }
  if (seg == "content") {
    if (v.is_null()) return f.with_content(std::nullopt);
    const auto* s = v.get_if<std::string>();
    if (!s) throw Error(ErrorCode::invalid_value, "content must be text");
    return f.with_content(*s);
  }
  if (!f.variant()) throw Error(ErrorCode::path_not_found, "form has no variant clause");
  VariantClause vc = *f.variant();
  if (seg == "variant_key") {
    const auto* s = v.get_if<std::string>();
    if (!s) throw Error(ErrorCode::invalid_value, "variant_key must be text");
    vc.key = *s;
  } else {
    if (!v.is_scalar()) throw Error(ErrorCode::invalid_value, "variant_value must be a scalar");
    vc.value = v;
  }
  return f.with_variant(std::move(vc));
}

Value set_in(const Value& cur, std::span<const std::string_view> segs, const Value& v,
             std::string_view full) {
  auto seg = segs.front();
  auto rest = segs.subspan(1);
  auto not_found = [&] {
    return Error(ErrorCode::path_not_found, "'" + std::string(full) + "'");
  };
  if (const Form* f = cur.get_if<Form>()) {
    if (auto idx = find_child(*f, seg)) {
      auto kids = f->children();
      if (rest.empty()) {
        const Form* child = v.get_if<Form>();
        if (!child) throw Error(ErrorCode::invalid_value, "'" + std::string(full) + "' is a child; it takes a form");
        if (!is_legal_child(f->kind(), child->kind())) {
          throw Error(ErrorCode::illegal_child_kind,
                      std::string(keyword(child->kind())) + " under " + std::string(keyword(f->kind())));
        }
        kids[*idx] = *child;
        return f->with_children(std::move(kids));
      }
      kids[*idx] = *set_in(Value(kids[*idx]), rest, v, full).get_if<Form>();
      return f->with_children(std::move(kids));
    }
    if (const Value* fv = f->field(seg)) {
      if (rest.empty()) return f->with_field(std::string(seg), v);
      return f->with_field(std::string(seg), set_in(*fv, rest, v, full));
    }
    if (rest.empty() && is_attribute(seg)) return write_attribute(*f, seg, v);
    throw not_found();
  }
  if (const Map* m = cur.get_if<Map>()) {
    const Value* mv = m->find(seg);
    if (!mv) throw not_found();
    Map out = *m;
    out.insert_or_assign(std::string(seg), rest.empty() ? v : set_in(*mv, rest, v, full));
    return out;
  }
  throw not_found();
}

// Structural edits walk the children chain only.
Form edit_at(const Form& f, std::span<const std::string_view> segs, std::string_view full,
             const std::function<Form(const Form& parent, std::size_t idx)>& edit) {
  auto idx = find_child(f, segs.front());
  if (!idx) throw Error(ErrorCode::path_not_found, "'" + std::string(full) + "'");
  if (segs.size() == 1) return edit(f, *idx);
  auto kids = f.children();
  kids[*idx] = edit_at(kids[*idx], segs.subspan(1), full, edit);
  return f.with_children(std::move(kids));
}

Form edit_node(const Form& f, std::span<const std::string_view> segs, std::string_view full,
               const std::function<Form(const Form&)>& edit) {
  if (segs.empty()) return edit(f);
  auto idx = find_child(f, segs.front());
  if (!idx) throw Error(ErrorCode::path_not_found, "'" + std::string(full) + "'");
  auto kids = f.children();
  kids[*idx] = edit_node(kids[*idx], segs.subspan(1), full, edit);
  return f.with_children(std::move(kids));
}

std::vector<std::string_view> split_optional(std::string_view path) {
  if (path.empty()) return {};
  return split_path(path);
}

void collect_asks(const Form& f, std::vector<Form>& out) {
  if (f.kind() == Kind::ask) out.push_back(f);
  for (const auto& c : f.children()) collect_asks(c, out);
}

}  // namespace

Form new_form(Kind kind, std::optional<std::string> name) {
  if (requires_name(kind) && (!name || name->empty())) {
    throw Error(ErrorCode::missing_required_name,
                std::string(keyword(kind)) + " requires a name");
  }
  return Form(kind, std::move(name));
}

Form new_form(std::string_view kind_word, std::optional<std::string> name) {
  auto kind = kind_from_keyword(kind_word);
  if (!kind) throw Error(ErrorCode::invalid_kind, "'" + std::string(kind_word) + "'");
  return new_form(*kind, std::move(name));
}

std::string child_segment(const Form& parent, std::size_t index) {
  const auto& kids = parent.children();
  std::string key = child_key(kids[index]);
  for (std::size_t i = 0; i < kids.size(); ++i) {
    if (i != index && child_key(kids[i]) == key) return "#" + std::to_string(index);
  }
  return key;
}

std::optional<Value> get(const Form& f, std::string_view path) {
  auto segs = split_path(path);
  return get_in(Value(f), segs);
}

std::optional<Form> section(const Form& f, Kind verb) {
  for (const auto& c : f.children()) {
    if (c.kind() == verb) return c;
  }
  return std::nullopt;
}

std::vector<Form> steps(const Form& f) {
  std::vector<Form> out;
  for (const auto& sec : f.children()) {
    if (sec.kind() != Kind::implements) continue;
    for (const auto& c : sec.children()) {
      if (is_step(c.kind())) out.push_back(c);
    }
  }
  return out;
}

std::optional<Form> step(const Form& f, std::string_view name) {
  for (auto& s : steps(f)) {
    if (s.name() && *s.name() == name) return s;
  }
  return std::nullopt;
}

std::size_t count_steps(const Form& f) { return steps(f).size(); }

std::map<Kind, std::size_t> step_types(const Form& f) {
  std::map<Kind, std::size_t> out;
  for (const auto& s : steps(f)) ++out[s.kind()];
  return out;
}

Form set(const Form& f, std::string_view path, const Value& v) {
  auto segs = split_path(path);
  return *set_in(Value(f), segs, v, path).get_if<Form>();
}

Form add_child(const Form& f, std::string_view parent_path, const Form& child) {
  auto segs = split_optional(parent_path);
  return edit_node(f, segs, parent_path, [&](const Form& parent) {
    if (!is_legal_child(parent.kind(), child.kind())) {
      throw Error(ErrorCode::illegal_child_kind, std::string(keyword(child.kind())) + " under " +
                                                     std::string(keyword(parent.kind())));
    }
    return parent.with_child(child);
  });
}

Form remove_child(const Form& f, std::string_view path) {
  auto segs = split_path(path);
  return edit_at(f, segs, path, [](const Form& parent, std::size_t idx) {
    auto kids = parent.children();
    kids.erase(kids.begin() + static_cast<std::ptrdiff_t>(idx));
    return parent.with_children(std::move(kids));
  });
}

Form replace_child(const Form& f, std::string_view path, const Form& child) {
  auto segs = split_path(path);
  return edit_at(f, segs, path, [&](const Form& parent, std::size_t idx) {
    if (!is_legal_child(parent.kind(), child.kind())) {
      throw Error(ErrorCode::illegal_child_kind, std::string(keyword(child.kind())) + " under " +
                                                     std::string(keyword(parent.kind())));
    }
    auto kids = parent.children();
    kids[idx] = child;
    return parent.with_children(std::move(kids));
  });
}

Form merge(const Form& base, const Form& overlay) {
  if (base.kind() != overlay.kind()) {
    throw Error(ErrorCode::kind_mismatch, std::string(keyword(base.kind())) + " vs " +
                                              std::string(keyword(overlay.kind())));
  }
  Form out = base;
  if (overlay.name()) out = out.with_name(overlay.name());
  if (overlay.variant()) out = out.with_variant(overlay.variant());
  if (overlay.content()) out = out.with_content(overlay.content());
  for (const auto& fld : overlay.fields()) out = out.with_field(fld.key, fld.value);

  // Named children match on (kind, name); unnamed ones match the n-th
  // unnamed sibling of the same kind.
  auto kids = base.children();
  std::vector<bool> used(kids.size(), false);
  std::map<Kind, std::size_t> unnamed_seen;
  for (const auto& oc : overlay.children()) {
    std::optional<std::size_t> match;
    if (oc.name()) {
      for (std::size_t i = 0; i < kids.size(); ++i) {
        if (!used[i] && kids[i].kind() == oc.kind() && kids[i].name() == oc.name()) {
          match = i;
          break;
        }
      }
    } else {
      std::size_t want = unnamed_seen[oc.kind()]++;
      std::size_t seen = 0;
      for (std::size_t i = 0; i < base.children().size(); ++i) {
        const auto& bc = base.children()[i];
        if (bc.kind() == oc.kind() && !bc.name()) {
          if (seen++ == want) {
            match = i;
            break;
          }
        }
      }
    }
    if (match) {
      kids[*match] = merge(kids[*match], oc);
      used[*match] = true;
    } else {
      kids.push_back(oc);
      used.push_back(true);
    }
  }
  return out.with_children(std::move(kids));
}

// Diff

namespace {

bool has_duplicate_keys(const Form& f) {
  std::set<std::string> seen;
  for (const auto& c : f.children()) {
    if (!seen.insert(child_key(c)).second) return true;
  }
  return false;
}

std::vector<std::string> field_keys(const Form& f) {
  std::vector<std::string> out;
  for (const auto& fld : f.fields()) out.push_back(fld.key);
  return out;
}

template <typename Pred>
std::vector<std::string> filter_keys(const std::vector<std::string>& keys, Pred keep) {
  std::vector<std::string> out;
  for (const auto& k : keys) {
    if (keep(k)) out.push_back(k);
  }
  return out;
}

std::optional<Value> opt_string(const std::optional<std::string>& s) {
  return s ? std::optional<Value>(*s) : std::nullopt;
}

void diff_attr(std::vector<DiffEntry>& out, const std::string& path, const char* seg,
               const std::optional<Value>& a, const std::optional<Value>& b) {
  if (a == b) return;
  DiffOp op = !a ? DiffOp::added : !b ? DiffOp::removed : DiffOp::modified;
  out.push_back({join(path, seg), op, DiffTarget::attribute, a, b, std::nullopt});
}

void diff_node(const Form& a, const Form& b, const std::string& path, std::vector<DiffEntry>& out) {
  if (a == b) return;
  auto whole = [&] {
    out.push_back({path, DiffOp::modified, DiffTarget::form, Value(a), Value(b), std::nullopt});
  };
  if (a.kind() != b.kind() || a.variant().has_value() != b.variant().has_value()) return whole();
  if (has_duplicate_keys(a) || has_duplicate_keys(b)) return whole();

  // Common fields and matched children must keep their relative order,
  // otherwise positional patching cannot reproduce b.
  auto ak = field_keys(a);
  auto bk = field_keys(b);
  auto in = [](const std::vector<std::string>& ks, const std::string& k) {
    return std::find(ks.begin(), ks.end(), k) != ks.end();
  };
  if (filter_keys(ak, [&](auto& k) { return in(bk, k); }) !=
      filter_keys(bk, [&](auto& k) { return in(ak, k); })) {
    return whole();
  }

  auto matches = [](const Form& x, const Form& y) { return x.kind() == y.kind() && x.name() == y.name(); };
  std::vector<std::optional<std::size_t>> a_to_b(a.children().size());
  std::vector<std::optional<std::size_t>> b_to_a(b.children().size());
  for (std::size_t i = 0; i < a.children().size(); ++i) {
    for (std::size_t j = 0; j < b.children().size(); ++j) {
      if (matches(a.children()[i], b.children()[j])) {
        a_to_b[i] = j;
        b_to_a[j] = i;
        break;
      }
    }
  }
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < a_to_b.size(); ++i) {
    if (!a_to_b[i]) continue;
    if (last && *a_to_b[i] < *last) return whole();
    last = a_to_b[i];
  }

  diff_attr(out, path, "name", opt_string(a.name()), opt_string(b.name()));
  if (a.variant() && b.variant()) {
    diff_attr(out, path, "variant_key", Value(a.variant()->key), Value(b.variant()->key));
    diff_attr(out, path, "variant_value", a.variant()->value, b.variant()->value);
  }
  diff_attr(out, path, "content", opt_string(a.content()), opt_string(b.content()));

  for (const auto& fld : a.fields()) {
    if (!b.field(fld.key)) {
      out.push_back({join(path, fld.key), DiffOp::removed, DiffTarget::field, fld.value, std::nullopt,
                     std::nullopt});
    }
  }
  for (const auto& fld : a.fields()) {
    const Value* bv = b.field(fld.key);
    if (bv && !(*bv == fld.value)) {
      out.push_back({join(path, fld.key), DiffOp::modified, DiffTarget::field, fld.value, *bv,
                     std::nullopt});
    }
  }
  for (std::size_t j = 0; j < b.fields().size(); ++j) {
    const auto& fld = b.fields()[j];
    if (!a.field(fld.key)) {
      out.push_back({join(path, fld.key), DiffOp::added, DiffTarget::field, std::nullopt, fld.value, j});
    }
  }

  for (std::size_t i = 0; i < a.children().size(); ++i) {
    if (!a_to_b[i]) {
      const auto& c = a.children()[i];
      out.push_back({join(path, child_key(c)), DiffOp::removed, DiffTarget::child, Value(c),
                     std::nullopt, std::nullopt});
    }
  }
  for (std::size_t j = 0; j < b.children().size(); ++j) {
    if (b_to_a[j]) {
      const auto& bc = b.children()[j];
      diff_node(a.children()[*b_to_a[j]], bc, join(path, child_key(bc)), out);
    }
  }
  for (std::size_t j = 0; j < b.children().size(); ++j) {
    if (!b_to_a[j]) {
      const auto& c = b.children()[j];
      out.push_back({join(path, child_key(c)), DiffOp::added, DiffTarget::child, std::nullopt, Value(c), j});
    }
  }
}

std::pair<std::string_view, std::string_view> split_last(std::string_view path) {
  auto dot = path.rfind('.');
  if (dot == std::string_view::npos) return {std::string_view{}, path};
  return {path.substr(0, dot), path.substr(dot + 1)};
}

}  // namespace

FormDiff diff(const Form& a, const Form& b) {
  FormDiff d;
  diff_node(a, b, "", d.entries);
  return d;
}

Form apply_diff(const Form& a, const FormDiff& d) {
  Form cur = a;
  for (const auto& e : d.entries) {
    if (e.target == DiffTarget::form) {
      const Form& after = *e.after->get_if<Form>();
      cur = edit_node(cur, split_optional(e.path), e.path, [&](const Form&) { return after; });
      continue;
    }
    auto [parent, last] = split_last(e.path);
    cur = edit_node(cur, split_optional(parent), e.path, [&, last = last](const Form& node) -> Form {
      switch (e.target) {
        case DiffTarget::attribute:
          if (last == "name") {
            return node.with_name(e.after ? std::optional<std::string>(*e.after->get_if<std::string>())
                                          : std::nullopt);
          }
          if (last == "content") {
            return node.with_content(
                e.after ? std::optional<std::string>(*e.after->get_if<std::string>()) : std::nullopt);
          }
          return write_attribute(node, last, *e.after);
        case DiffTarget::field:
          if (e.op == DiffOp::removed) return node.without_field(last);
          if (e.op == DiffOp::modified) return node.with_field(std::string(last), *e.after);
          return node.with_field_at(e.index.value_or(node.fields().size()), std::string(last), *e.after);
        case DiffTarget::child: {
          auto kids = node.children();
          if (e.op == DiffOp::removed) {
            auto idx = find_child(node, last);
            if (!idx) throw Error(ErrorCode::path_not_found, "'" + e.path + "'");
            kids.erase(kids.begin() + static_cast<std::ptrdiff_t>(*idx));
          } else {
            std::size_t at = std::min(e.index.value_or(kids.size()), kids.size());
            kids.insert(kids.begin() + static_cast<std::ptrdiff_t>(at), *e.after->get_if<Form>());
          }
          return node.with_children(std::move(kids));
        }
        case DiffTarget::form: break;
      }
      return node;
    });
  }
  return cur;
}

// Validation

namespace {

void check_value(const Value& v, const std::string& path, bool nested, std::vector<Violation>& out);

void validate_node(const Form& f, const std::string& path, std::vector<Violation>& out) {
  auto add = [&](const std::string& p, const char* rule, std::string detail) {
    out.push_back({p, rule, std::move(detail)});
  };
  if (requires_name(f.kind()) && (!f.name() || f.name()->empty())) {
    add(path, "missing-required-name", std::string(keyword(f.kind())) + " requires a name");
  } else if (f.name() && !is_identifier(*f.name())) {
    add(path, "invalid-name", "'" + *f.name() + "' is not an identifier");
  }
  if (f.variant()) {
    const auto& vc = *f.variant();
    if (f.kind() != Kind::ask) {
      add(path, "invalid-variant", "only ask steps carry a variant clause");
    } else if (vc.key != "using" && vc.key != "from") {
      add(path, "invalid-variant", "variant key must be using or from, got '" + vc.key + "'");
    } else if (const auto* s = vc.value.get_if<std::string>(); !s || s->empty()) {
      add(path, "invalid-variant", vc.key + " needs a non-empty text target");
    }
  } else if (f.kind() == Kind::ask) {
    add(path, "ask-missing-variant", "ask needs `using:` or `from:`");
  }
  for (const auto& fld : f.fields()) {
    auto fp = join(path, fld.key);
    if (!is_identifier(fld.key)) add(fp, "invalid-field-key", "'" + fld.key + "' is not an identifier");
    check_value(fld.value, fp, false, out);
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < f.children().size(); ++i) {
    const auto& c = f.children()[i];
    auto cp = join(path, child_segment(f, i));
    if (!is_legal_child(f.kind(), c.kind())) {
      add(cp, "illegal-child-kind",
          std::string(keyword(c.kind())) + " is not allowed under " + std::string(keyword(f.kind())));
    }
    if (c.name() && !seen.insert(*c.name()).second) add(cp, "duplicate-name", "'" + *c.name() + "' repeats");
    validate_node(c, cp, out);
  }
}

void check_value(const Value& v, const std::string& path, bool nested, std::vector<Violation>& out) {
  if (const Form* inner = v.get_if<Form>()) {
    if (nested) out.push_back({path, "unprintable-value", "form inside a list or map"});
    else validate_node(*inner, path, out);
  } else if (v.is<Expression>() && nested) {
    out.push_back({path, "unprintable-value", "expression inside a list or map"});
  } else if (const List* l = v.get_if<List>()) {
    for (const auto& x : *l) check_value(x, path, true, out);
  } else if (const Map* m = v.get_if<Map>()) {
    for (const auto& [k, x] : m->entries()) check_value(x, path, true, out);
  }
}

}  // namespace

std::vector<Violation> validate(const Form& f) {
  std::vector<Violation> out;
  if (f.kind() != Kind::machine) {
    out.push_back({"", "root-must-be-machine", "root is " + std::string(keyword(f.kind()))});
  }
  validate_node(f, "", out);
  return out;
}

CapSet capabilities(const Form& f) {
  std::vector<Form> asks;
  collect_asks(f, asks);
  CapSet out;
  for (const auto& a : asks) {
    const auto& vc = a.variant();
    const std::string* target = vc ? vc->value.get_if<std::string>() : nullptr;
    if (!vc || !target || target->empty() || (vc->key != "using" && vc->key != "from")) {
      throw Error(ErrorCode::malformed_ask, "ask " + a.name().value_or("<unnamed>") +
                                                " has no using/from clause");
    }
    out.insert({vc->key == "using" ? CapabilityAtom::Class::model : CapabilityAtom::Class::call, *target});
  }
  return out;
}

std::string to_text(const Form& f) { return print(f); }

Form from_text(std::string_view text) { return parse_source(text); }

std::string hash(const Form& f) { return sha256_hex(render(f)); }

}  // namespace gmeta
