#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmcs/js_ast.hpp"
#include "cmcs/js_parser.hpp"

namespace cmcs {

/// True when `path` ends with `suffix` (segment-wise, case-sensitive).
inline bool has_suffix(const std::vector<std::string>& path, const std::vector<std::string>& suffix) {
  if (suffix.size() > path.size()) return false;
  return std::equal(suffix.begin(), suffix.end(), path.end() - static_cast<std::ptrdiff_t>(suffix.size()));
}

/// Every Call whose callee path ends with `callee_suffix`, in document order.
inline std::vector<CallSite> find_calls(const ScriptModule& module,
                                        const std::vector<std::string>& callee_suffix) {
  std::vector<CallSite> out;
  walk(module, [&](const AstNode& n, const std::vector<const AstNode*>& fns) {
    if (n.kind == NodeKind::Call && has_suffix(n.callee().segments, callee_suffix))
      out.push_back({&n, fns});
  });
  return out;
}

/// The object literal passed to the first `<registrar>({...})` call, e.g.
/// `Page`, `App`, `Component`.
inline const AstNode* registration_object(const ScriptModule& module, const std::string& registrar) {
  const AstNode* found = nullptr;
  walk(module, [&](const AstNode& n, const std::vector<const AstNode*>&) {
    if (found || n.kind != NodeKind::Call) return;
    const auto& callee = n.callee();
    if (callee.has_base || callee.segments.size() != 1 || callee.segments[0] != registrar) return;
    if (n.arg_count() >= 1 && n.arg(0).kind == NodeKind::ObjectLiteral) found = &n.arg(0);
  });
  return found;
}

inline const AstNode* top_level_function(const ScriptModule& module, const std::string& name) {
  for (const auto& item : module.items)
    if (item.kind == NodeKind::FunctionDef && item.text == name) return &item;
  return nullptr;
}

inline const AstNode* top_level_function_binding(const ScriptModule& module, const std::string& name) {
  for (const auto& item : module.items) {
    if (item.kind == NodeKind::VarDecl && item.text == name && item.init() &&
        item.init()->kind == NodeKind::FunctionDef)
      return item.init();
    if (item.kind == NodeKind::Assignment && item.target().segments.size() == 1 &&
        !item.target().has_base && item.target().segments[0] == name &&
        item.value().kind == NodeKind::FunctionDef)
      return &item.value();
  }
  return nullptr;
}

/// Resolves a handler name: Page-object property first, then top-level
/// function declarations, then top-level `const name = function/arrow`.
inline const AstNode* find_function(const ScriptModule& module, const std::string& name) {
  if (const auto* page = registration_object(module, "Page")) {
    if (const auto* prop = page->property(name)) {
      if (prop->kind == NodeKind::FunctionDef) return prop;
      if (prop->kind == NodeKind::Identifier) {
        if (const auto* f = top_level_function(module, prop->text)) return f;
        if (const auto* f = top_level_function_binding(module, prop->text)) return f;
      }
    }
  }
  if (const auto* comp = registration_object(module, "Component")) {
    if (const auto* methods = comp->property("methods"); methods && methods->kind == NodeKind::ObjectLiteral)
      if (const auto* prop = methods->property(name); prop && prop->kind == NodeKind::FunctionDef) return prop;
  }
  if (const auto* f = top_level_function(module, name)) return f;
  return top_level_function_binding(module, name);
}

}  // namespace cmcs
