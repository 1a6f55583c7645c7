#include "modnet/layout.hpp"

#include <algorithm>
#include <cctype>
#include <cstddef>

#include "modnet/errors.hpp"

namespace modnet {

const char* module_kind_name(ModuleKind kind) {
  switch (kind) {
    case ModuleKind::Lookup: return "lookup";
    case ModuleKind::Find: return "find";
    case ModuleKind::Relate: return "relate";
    case ModuleKind::And: return "and";
    case ModuleKind::Describe: return "describe";
    case ModuleKind::Exists: return "exists";
  }
  return "?";
}

ModuleKind module_kind_from_name(const std::string& name) {
  if (name == "lookup") return ModuleKind::Lookup;
  if (name == "find") return ModuleKind::Find;
  if (name == "relate") return ModuleKind::Relate;
  if (name == "and") return ModuleKind::And;
  if (name == "describe") return ModuleKind::Describe;
  if (name == "exists") return ModuleKind::Exists;
  throw LayoutTypeError("unknown module kind '" + name + "'");
}

ValueType module_output_type(ModuleKind kind) {
  switch (kind) {
    case ModuleKind::Describe:
    case ModuleKind::Exists:
      return ValueType::Labels;
    default:
      return ValueType::Attention;
  }
}

bool module_takes_param_arg(ModuleKind kind) {
  switch (kind) {
    case ModuleKind::Lookup:
    case ModuleKind::Find:
    case ModuleKind::Relate:
    case ModuleKind::Describe:
      return true;
    default:
      return false;
  }
}

namespace {

// Checks one node against the module signatures; fills `out` with the first
// violation found, depth first.
bool check_node(const LayoutNode& node, TypecheckResult& out) {
  auto fail = [&](const std::string& rule) {
    out.ok = false;
    out.node = print_layout(node);
    out.rule = rule;
    return false;
  };

  if (module_takes_param_arg(node.kind)) {
    if (node.param_arg.empty())
      return fail(std::string(module_kind_name(node.kind)) +
                  " requires a parameter argument");
  } else if (!node.param_arg.empty()) {
    return fail(std::string(module_kind_name(node.kind)) +
                " takes no parameter argument");
  }

  switch (node.kind) {
    case ModuleKind::Lookup:
    case ModuleKind::Find:
      if (!node.children.empty())
        return fail(std::string(module_kind_name(node.kind)) +
                    " must be a leaf");
      break;
    case ModuleKind::Relate:
    case ModuleKind::Describe:
    case ModuleKind::Exists:
      if (node.children.size() != 1)
        return fail(std::string(module_kind_name(node.kind)) +
                    " takes exactly one child");
      break;
    case ModuleKind::And:
      if (node.children.empty())
        return fail("and takes at least one child");
      break;
  }

  for (const LayoutNode& child : node.children) {
    if (module_output_type(child.kind) != ValueType::Attention)
      return fail(std::string(module_kind_name(node.kind)) +
                  " child must produce Attention, but " +
                  module_kind_name(child.kind) + " produces Labels");
    if (!check_node(child, out)) return false;
  }
  return true;
}

}  // namespace

TypecheckResult typecheck(const Layout& layout) {
  TypecheckResult result;
  if (!check_node(layout.root, result)) return result;
  if (module_output_type(layout.root.kind) != ValueType::Labels) {
    result.ok = false;
    result.node = print_layout(layout.root);
    result.rule = "root must produce Labels";
  }
  return result;
}

void require_typechecked(const Layout& layout) {
  TypecheckResult result = typecheck(layout);
  if (!result.ok)
    throw LayoutTypeError("ill-typed layout " + result.node + ": " + result.rule);
}

namespace {

int node_depth(const LayoutNode& node) {
  int deepest = 0;
  for (const LayoutNode& c : node.children) deepest = std::max(deepest, node_depth(c));
  return 1 + deepest;
}

int node_count(const LayoutNode& node) {
  int n = 1;
  for (const LayoutNode& c : node.children) n += node_count(c);
  return n;
}

}  // namespace

int layout_depth(const Layout& layout) { return node_depth(layout.root); }
int layout_node_count(const Layout& layout) { return node_count(layout.root); }

std::string print_layout(const LayoutNode& node) {
  std::string head = module_kind_name(node.kind);
  if (!node.param_arg.empty()) head += "[" + node.param_arg + "]";
  if (node.children.empty()) return head;
  std::string out = "(" + head;
  for (const LayoutNode& c : node.children) out += " " + print_layout(c);
  return out + ")";
}

std::string print_layout(const Layout& layout) { return print_layout(layout.root); }

namespace {

struct SexprParser {
  const std::string& text;
  std::size_t pos = 0;

  explicit SexprParser(const std::string& t) : text(t) {}

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }

  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw SexprParseError(msg, pos);
  }

  static bool is_symbol_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
           c == '_' || c == '.' || c == '+';
  }

  std::string symbol() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() && is_symbol_char(text[pos])) ++pos;
    if (pos == start) fail("expected a symbol");
    return text.substr(start, pos - start);
  }

  // kind with optional [lexeme]
  LayoutNode head() {
    LayoutNode node;
    skip_ws();
    std::size_t kind_pos = pos;
    std::string kind_name = symbol();
    try {
      node.kind = module_kind_from_name(kind_name);
    } catch (const LayoutTypeError&) {
      throw SexprParseError("unknown module kind '" + kind_name + "'", kind_pos);
    }
    if (pos < text.size() && text[pos] == '[') {
      ++pos;
      node.param_arg = symbol();
      if (pos >= text.size() || text[pos] != ']') fail("expected ']'");
      ++pos;
    }
    return node;
  }

  LayoutNode expr() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    if (text[pos] == '(') {
      ++pos;
      LayoutNode node = head();
      skip_ws();
      while (pos < text.size() && text[pos] != ')') {
        node.children.push_back(expr());
        skip_ws();
      }
      if (pos >= text.size()) fail("unbalanced '(': expected ')'");
      ++pos;
      return node;
    }
    if (text[pos] == ')') fail("unexpected ')'");
    return head();
  }
};

}  // namespace

Layout parse_layout_string(const std::string& text) {
  SexprParser parser(text);
  Layout layout{parser.expr()};
  if (!parser.at_end()) parser.fail("trailing input after layout");
  return layout;
}

}  // namespace modnet
