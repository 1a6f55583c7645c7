#pragma once

#include <string>
#include <vector>

namespace modnet {

enum class ModuleKind { Lookup, Find, Relate, And, Describe, Exists };
constexpr int kModuleKindCount = 6;

const char* module_kind_name(ModuleKind kind);
ModuleKind module_kind_from_name(const std::string& name);

enum class ValueType { Attention, Labels };

// Output type per module signature: lookup/find/relate/and produce
// Attention, describe/exists produce Labels.
ValueType module_output_type(ModuleKind kind);
bool module_takes_param_arg(ModuleKind kind);

struct LayoutNode {
  ModuleKind kind;
  std::string param_arg;  // lexeme in square brackets; empty for and/exists
  std::vector<LayoutNode> children;

  bool operator==(const LayoutNode& other) const {
    return kind == other.kind && param_arg == other.param_arg &&
           children == other.children;
  }
};

struct Layout {
  LayoutNode root;
  bool operator==(const Layout& other) const { return root == other.root; }
};

struct TypecheckResult {
  bool ok = true;
  std::string node;  // printed form of the first violating node
  std::string rule;  // the violated rule
};

TypecheckResult typecheck(const Layout& layout);
// Throws LayoutTypeError when typecheck fails.
void require_typechecked(const Layout& layout);

int layout_depth(const Layout& layout);
int layout_node_count(const Layout& layout);

// Textual form: leaves print bare ("find[city]"), internal nodes print
// parenthesized ("(relate[in] lookup[georgia])"). parse(print(x)) == x.
std::string print_layout(const LayoutNode& node);
std::string print_layout(const Layout& layout);
Layout parse_layout_string(const std::string& text);

}  // namespace modnet
