#pragma once

#include <string>
#include <vector>

#include "cmcs/common.hpp"

namespace cmcs {

enum class NodeKind {
  ObjectLiteral,   // keys[i] <-> children[i]; "*" = computed key, "..." = spread
  ArrayLiteral,    // children = elements
  StringLiteral,   // text = cooked value
  NumberLiteral,   // text = source spelling
  TemplateConcat,  // children = operands of a `+` chain or template string
  Identifier,      // text = name
  MemberPath,      // segments; when has_base, children[0] is the chain root
  Call,            // children[0] = callee (MemberPath), children[1..] = args
  FunctionDef,     // text = name (may be empty), params, children = body
  Assignment,      // text = operator, children = {target, value}
  VarDecl,         // text = bound name, children = {init} or {}
  Return,          // children = {value} or {}
  Block,           // control-flow statement; children = nested statements
  Opaque,          // unsupported syntax; text = short reason, no children
};

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::ObjectLiteral: return "ObjectLiteral";
    case NodeKind::ArrayLiteral: return "ArrayLiteral";
    case NodeKind::StringLiteral: return "StringLiteral";
    case NodeKind::NumberLiteral: return "NumberLiteral";
    case NodeKind::TemplateConcat: return "TemplateConcat";
    case NodeKind::Identifier: return "Identifier";
    case NodeKind::MemberPath: return "MemberPath";
    case NodeKind::Call: return "Call";
    case NodeKind::FunctionDef: return "FunctionDef";
    case NodeKind::Assignment: return "Assignment";
    case NodeKind::VarDecl: return "VarDecl";
    case NodeKind::Return: return "Return";
    case NodeKind::Block: return "Block";
    case NodeKind::Opaque: return "Opaque";
  }
  return "?";
}

struct AstNode {
  NodeKind kind = NodeKind::Opaque;
  SourceSpan span;
  std::string text;
  std::vector<std::string> segments;  // MemberPath
  std::vector<std::string> keys;      // ObjectLiteral
  std::vector<std::string> params;    // FunctionDef
  std::vector<AstNode> children;
  bool has_base = false;              // MemberPath

  bool is(NodeKind k) const { return kind == k; }

  const AstNode* base() const {
    return kind == NodeKind::MemberPath && has_base ? &children.front() : nullptr;
  }
  const AstNode& callee() const { return children.front(); }
  std::size_t arg_count() const { return kind == NodeKind::Call ? children.size() - 1 : 0; }
  const AstNode& arg(std::size_t i) const { return children[i + 1]; }

  const AstNode& target() const { return children[0]; }
  const AstNode& value() const { return children[1]; }
  const AstNode* init() const { return children.empty() ? nullptr : &children.front(); }

  /// ObjectLiteral property lookup (first match).
  const AstNode* property(std::string_view key) const {
    if (kind != NodeKind::ObjectLiteral) return nullptr;
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (keys[i] == key) return &children[i];
    return nullptr;
  }
};

struct ScriptModule {
  std::vector<AstNode> items;
  Diagnostics diagnostics;
  std::size_t source_size = 0;
};

/// Pre-order walk. The callback receives the node and the chain of enclosing
/// FunctionDef nodes (outermost first, not including the node itself).
template <class Fn>
void walk(const AstNode& node, std::vector<const AstNode*>& functions, Fn&& fn) {
  fn(node, functions);
  const bool is_fn = node.kind == NodeKind::FunctionDef;
  if (is_fn) functions.push_back(&node);
  for (const auto& c : node.children) walk(c, functions, fn);
  if (is_fn) functions.pop_back();
}

template <class Fn>
void walk(const ScriptModule& module, Fn&& fn) {
  std::vector<const AstNode*> functions;
  for (const auto& item : module.items) walk(item, functions, fn);
}

/// A located call plus the functions it is nested in (outermost first).
struct CallSite {
  const AstNode* call = nullptr;
  std::vector<const AstNode*> functions;
};

/// Dotted rendering of a MemberPath, e.g. `getApp().globalData.url`.
/// A base that is a zero-argument call renders as `name()`; any other base
/// renders as `<expr>`.
inline std::string path_string(const AstNode& node) {
  if (node.kind == NodeKind::Identifier) return node.text;
  if (node.kind != NodeKind::MemberPath) return "<expr>";
  std::string out;
  if (const auto* base = node.base()) {
    if (base->kind == NodeKind::Call && base->arg_count() == 0 &&
        base->callee().kind == NodeKind::MemberPath && !base->callee().has_base)
      out = text::join(base->callee().segments, ".") + "()";
    else
      out = "<expr>";
  }
  for (const auto& s : node.segments) {
    if (!out.empty()) out += '.';
    out += s;
  }
  return out;
}

}  // namespace cmcs
