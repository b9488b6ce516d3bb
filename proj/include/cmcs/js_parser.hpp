#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cmcs/js_ast.hpp"
#include "cmcs/js_lexer.hpp"

namespace cmcs {
namespace js {

struct ParseError {
  std::string message;
  std::size_t offset;
};

/// Recursive-descent parser for the supported script subset. Statements it
/// cannot handle are skipped to the next `;` or closing brace and recorded as
/// Opaque nodes; the parser itself never throws past parse_program().
class Parser {
 public:
  Parser(std::vector<Token> tokens, Diagnostics* diags)
      : toks_(std::move(tokens)), diags_(diags) {}

  std::vector<AstNode> parse_program() {
    std::vector<AstNode> items;
    while (!at_end()) statement_into(items, /*top_level=*/true);
    return items;
  }

  /// Used for template-literal substitutions.
  AstNode parse_lone_expression() {
    auto e = expression();
    if (!at_end()) fail("trailing tokens in template substitution");
    return e;
  }

 private:
  // -- token helpers --------------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    const auto i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  bool at_end() const { return peek().kind == TokenKind::End; }
  const Token& next() {
    const auto& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    prev_end_ = t.span.end;
    return t;
  }
  bool accept(std::string_view p) {
    if (peek().is_punct(p)) {
      next();
      return true;
    }
    return false;
  }
  void expect(std::string_view p) {
    if (!accept(p)) fail("expected '" + std::string(p) + "' but found '" + peek().text + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError{msg, peek().span.begin};
  }

  static AstNode make(NodeKind k, SourceSpan span) {
    AstNode n;
    n.kind = k;
    n.span = span;
    return n;
  }
  SourceSpan span_from(std::size_t begin) const { return {begin, std::max(begin, prev_end_)}; }

  // Skips a balanced bracket group starting at the current opening token.
  void skip_balanced() {
    int depth = 0;
    do {
      const auto& t = next();
      if (t.kind == TokenKind::End) return;
      if (t.is_punct("(") || t.is_punct("[") || t.is_punct("{")) ++depth;
      if (t.is_punct(")") || t.is_punct("]") || t.is_punct("}")) --depth;
    } while (depth > 0);
  }

  // Error recovery: advance to just past the next `;` at depth 0, or stop
  // before an unbalanced closing brace.
  void recover(std::size_t start_pos) {
    pos_ = start_pos;
    int depth = 0;
    bool moved = false;
    while (!at_end()) {
      const auto& t = peek();
      if (depth == 0 && t.is_punct(";")) {
        next();
        return;
      }
      if (depth == 0 && (t.is_punct("}") || t.is_punct(")") || t.is_punct("]"))) {
        if (!moved) next();
        return;
      }
      if (t.is_punct("(") || t.is_punct("[") || t.is_punct("{")) ++depth;
      if (t.is_punct(")") || t.is_punct("]") || t.is_punct("}")) --depth;
      next();
      moved = true;
    }
  }

  void opaque_statement(std::vector<AstNode>& out, std::size_t start_pos, const std::string& reason) {
    const auto begin = toks_[start_pos].span.begin;
    recover(start_pos);
    auto n = make(NodeKind::Opaque, span_from(begin));
    n.text = reason;
    if (diags_)
      diags_->push_back({Severity::Warning, "UnsupportedSyntax", reason, std::to_string(begin)});
    out.push_back(std::move(n));
  }

  // -- statements -------------------------------------------------------------

  void statement_into(std::vector<AstNode>& out, bool top_level = false) {
    const auto start = pos_;
    try {
      statement(out);
    } catch (const ParseError& e) {
      opaque_statement(out, start, e.message);
    }
    if (pos_ == start && !at_end()) {
      // no progress (stray closing token): consume it as opaque
      opaque_statement(out, start, "unexpected '" + peek().text + "'");
    }
    (void)top_level;
  }

  void statement(std::vector<AstNode>& out) {
    const auto& t = peek();
    const auto begin = t.span.begin;

    if (t.is_punct(";")) {
      next();
      return;
    }
    if (t.is_punct("{")) {
      out.push_back(block());
      return;
    }
    if (t.kind == TokenKind::Identifier) {
      const auto& w = t.text;
      const bool let_is_name = w == "let" && !(peek(1).kind == TokenKind::Identifier ||
                                               peek(1).is_punct("{") || peek(1).is_punct("["));
      if ((w == "var" || w == "let" || w == "const") && !let_is_name) {
        next();
        var_declarations(out, begin);
        end_statement();
        return;
      }
      if (w == "function" || (w == "async" && peek(1).is_ident("function") && !peek(1).newline_before)) {
        if (w == "async") next();
        auto fn = function_expression();
        out.push_back(std::move(fn));
        return;
      }
      if (w == "return") {
        next();
        auto r = make(NodeKind::Return, {begin, begin});
        if (!peek().newline_before && !peek().is_punct(";") && !peek().is_punct("}") && !at_end())
          r.children.push_back(expression());
        end_statement();
        r.span = span_from(begin);
        out.push_back(std::move(r));
        return;
      }
      if (w == "if") {
        next();
        auto b = make(NodeKind::Block, {begin, begin});
        b.text = "if";
        expect("(");
        b.children.push_back(expression());
        expect(")");
        statement_into(b.children);
        if (peek().is_ident("else")) {
          next();
          statement_into(b.children);
        }
        b.span = span_from(begin);
        out.push_back(std::move(b));
        return;
      }
      if (w == "for" || w == "while") {
        next();
        auto b = make(NodeKind::Block, {begin, begin});
        b.text = w;
        if (peek().is_ident("await")) next();
        if (!peek().is_punct("(")) fail("expected '(' after " + w);
        skip_balanced();
        statement_into(b.children);
        b.span = span_from(begin);
        out.push_back(std::move(b));
        return;
      }
      if (w == "do") {
        next();
        auto b = make(NodeKind::Block, {begin, begin});
        b.text = "do";
        statement_into(b.children);
        if (!peek().is_ident("while")) fail("expected 'while' after do body");
        next();
        if (!peek().is_punct("(")) fail("expected '(' after while");
        skip_balanced();
        end_statement();
        b.span = span_from(begin);
        out.push_back(std::move(b));
        return;
      }
      if (w == "switch") {
        next();
        auto b = make(NodeKind::Block, {begin, begin});
        b.text = "switch";
        expect("(");
        b.children.push_back(expression());
        expect(")");
        expect("{");
        while (!peek().is_punct("}") && !at_end()) {
          if (peek().is_ident("case")) {
            next();
            expression();
            expect(":");
          } else if (peek().is_ident("default") && peek(1).is_punct(":")) {
            next();
            next();
          } else {
            statement_into(b.children);
          }
        }
        expect("}");
        b.span = span_from(begin);
        out.push_back(std::move(b));
        return;
      }
      if (w == "try") {
        next();
        auto b = make(NodeKind::Block, {begin, begin});
        b.text = "try";
        b.children.push_back(block());
        if (peek().is_ident("catch")) {
          next();
          if (peek().is_punct("(")) skip_balanced();
          b.children.push_back(block());
        }
        if (peek().is_ident("finally")) {
          next();
          b.children.push_back(block());
        }
        b.span = span_from(begin);
        out.push_back(std::move(b));
        return;
      }
      if (w == "throw") {
        next();
        auto b = make(NodeKind::Block, {begin, begin});
        b.text = "throw";
        b.children.push_back(expression());
        end_statement();
        b.span = span_from(begin);
        out.push_back(std::move(b));
        return;
      }
      if ((w == "break" || w == "continue") && !peek(1).is_punct(":")) {
        next();
        if (peek().kind == TokenKind::Identifier && !peek().newline_before) next();
        end_statement();
        auto b = make(NodeKind::Block, span_from(begin));
        b.text = w;
        out.push_back(std::move(b));
        return;
      }
      if (w == "class") {
        next();
        while (!peek().is_punct("{") && !at_end()) next();
        skip_balanced();
        auto o = make(NodeKind::Opaque, span_from(begin));
        o.text = "class declaration";
        if (diags_)
          diags_->push_back({Severity::Info, "UnsupportedSyntax", "class declaration", std::to_string(begin)});
        out.push_back(std::move(o));
        return;
      }
      if (w == "import" && !peek(1).is_punct("(") && !peek(1).is_punct(".")) {
        next();
        while (!at_end() && !peek().is_punct(";") && !(peek().newline_before && pos_ > 0 &&
                                                        toks_[pos_ - 1].kind == TokenKind::String))
          next();
        accept(";");
        auto o = make(NodeKind::Opaque, span_from(begin));
        o.text = "import declaration";
        out.push_back(std::move(o));
        return;
      }
      if (w == "export") {
        next();
        if (peek().is_ident("default")) next();
        statement(out);
        if (!out.empty()) out.back().span.begin = begin;
        return;
      }
      if (peek(1).is_punct(":") && w != "default") {  // label
        next();
        next();
        statement(out);
        return;
      }
    }

    auto e = expression();
    end_statement();
    e.span = span_from(begin);
    out.push_back(std::move(e));
  }

  void end_statement() {
    if (accept(";")) return;
    if (peek().is_punct("}") || at_end() || peek().newline_before) return;
    fail("expected ';' but found '" + peek().text + "'");
  }

  AstNode block() {
    const auto begin = peek().span.begin;
    expect("{");
    auto b = make(NodeKind::Block, {begin, begin});
    b.text = "block";
    while (!peek().is_punct("}") && !at_end()) statement_into(b.children);
    expect("}");
    b.span = span_from(begin);
    return b;
  }

  std::vector<AstNode> function_body() {
    std::vector<AstNode> body;
    expect("{");
    while (!peek().is_punct("}") && !at_end()) statement_into(body);
    expect("}");
    return body;
  }

  // -- binding patterns ------------------------------------------------------

  // A declared binding: either a plain name, or a destructuring pattern that
  // expands to (name, path-from-source) pairs.
  struct PatternBinding {
    std::string name;
    std::vector<std::string> path;  // segments below the destructured value
  };

  // `with_default` is false for the outermost pattern of a declaration, whose
  // `= init` is the initializer rather than a default value.
  void pattern(std::vector<PatternBinding>& out, std::vector<std::string> prefix,
               bool with_default = true) {
    if (peek().kind == TokenKind::Identifier) {
      out.push_back({next().text, prefix});
      if (with_default) skip_default();
      return;
    }
    if (accept("{")) {
      while (!peek().is_punct("}") && !at_end()) {
        if (accept("...")) {
          if (peek().kind != TokenKind::Identifier) fail("expected rest binding name");
          out.push_back({next().text, prefix});
        } else {
          std::string key;
          const auto& k = next();
          if (k.kind == TokenKind::Identifier || k.kind == TokenKind::String || k.kind == TokenKind::Number)
            key = k.text;
          else if (k.is_punct("[")) {
            --pos_;
            skip_balanced();
            key = "*";
          } else
            fail("bad object pattern key");
          auto sub = prefix;
          sub.push_back(key);
          if (accept(":")) {
            pattern(out, sub);
          } else {
            out.push_back({key, sub});
            skip_default();
          }
        }
        if (!accept(",")) break;
      }
      expect("}");
      if (with_default) skip_default();
      return;
    }
    if (accept("[")) {
      std::size_t index = 0;
      while (!peek().is_punct("]") && !at_end()) {
        if (peek().is_punct(",")) {
          next();
          ++index;
          continue;
        }
        if (accept("...")) {
          if (peek().kind != TokenKind::Identifier) fail("expected rest binding name");
          out.push_back({next().text, prefix});
        } else {
          auto sub = prefix;
          sub.push_back(std::to_string(index));
          pattern(out, sub);
        }
        ++index;
        if (!accept(",")) break;
      }
      expect("]");
      if (with_default) skip_default();
      return;
    }
    fail("expected binding pattern");
  }

  void skip_default() {
    if (accept("=")) assignment();
  }

  // Rewrites `const {a, b: {c}} = src` into `a = src.a`, `c = src.b.c`.
  static AstNode project(const AstNode& source, const std::vector<std::string>& path) {
    if (path.empty()) return source;
    AstNode m;
    m.kind = NodeKind::MemberPath;
    m.span = source.span;
    if (source.kind == NodeKind::Identifier) {
      m.segments.push_back(source.text);
    } else if (source.kind == NodeKind::MemberPath) {
      m = source;
    } else {
      m.has_base = true;
      m.children.push_back(source);
    }
    for (const auto& p : path) m.segments.push_back(p);
    return m;
  }

  void var_declarations(std::vector<AstNode>& out, std::size_t begin) {
    do {
      const auto decl_begin = peek().span.begin;
      if (peek().kind == TokenKind::Identifier) {
        auto d = make(NodeKind::VarDecl, {decl_begin, decl_begin});
        d.text = next().text;
        if (accept("=")) d.children.push_back(assignment());
        d.span = span_from(begin);
        out.push_back(std::move(d));
        continue;
      }
      std::vector<PatternBinding> bindings;
      // parse the pattern without its default; the initializer follows `=`
      if (peek().is_punct("{") || peek().is_punct("[")) {
        pattern(bindings, {}, /*with_default=*/false);
      } else {
        fail("expected declaration name");
      }
      if (!accept("=")) fail("destructuring declaration without initializer");
      auto init = assignment();
      for (const auto& b : bindings) {
        auto d = make(NodeKind::VarDecl, span_from(begin));
        d.text = b.name;
        d.children.push_back(project(init, b.path));
        out.push_back(std::move(d));
      }
    } while (accept(","));
  }

  // -- functions --------------------------------------------------------------

  // Parses a parameter list; destructured parameters become synthetic
  // `$argN` parameters plus leading VarDecls in the body.
  std::vector<std::string> parameters(std::vector<AstNode>& prologue) {
    std::vector<std::string> params;
    expect("(");
    while (!peek().is_punct(")") && !at_end()) {
      accept("...");
      if (peek().kind == TokenKind::Identifier) {
        params.push_back(next().text);
        skip_default();
      } else {
        const auto begin = peek().span.begin;
        std::vector<PatternBinding> bindings;
        pattern(bindings, {});
        auto name = "$arg" + std::to_string(params.size());
        AstNode src = make(NodeKind::Identifier, span_from(begin));
        src.text = name;
        for (const auto& b : bindings) {
          auto d = make(NodeKind::VarDecl, span_from(begin));
          d.text = b.name;
          d.children.push_back(project(src, b.path));
          prologue.push_back(std::move(d));
        }
        params.push_back(std::move(name));
      }
      if (!accept(",")) break;
    }
    expect(")");
    return params;
  }

  AstNode function_expression() {
    const auto begin = peek().span.begin;
    next();  // function
    accept("*");
    auto fn = make(NodeKind::FunctionDef, {begin, begin});
    if (peek().kind == TokenKind::Identifier) fn.text = next().text;
    std::vector<AstNode> prologue;
    fn.params = parameters(prologue);
    fn.children = std::move(prologue);
    for (auto& s : function_body()) fn.children.push_back(std::move(s));
    fn.span = span_from(begin);
    return fn;
  }

  AstNode method(std::string name, std::size_t begin) {
    auto fn = make(NodeKind::FunctionDef, {begin, begin});
    fn.text = std::move(name);
    std::vector<AstNode> prologue;
    fn.params = parameters(prologue);
    fn.children = std::move(prologue);
    for (auto& s : function_body()) fn.children.push_back(std::move(s));
    fn.span = span_from(begin);
    return fn;
  }

  bool arrow_ahead() const {
    std::size_t i = pos_;
    if (toks_[i].is_ident("async") && !toks_[i + 1].newline_before &&
        (toks_[i + 1].kind == TokenKind::Identifier || toks_[i + 1].is_punct("(")))
      ++i;
    if (toks_[i].kind == TokenKind::Identifier) return toks_[i + 1].is_punct("=>");
    if (!toks_[i].is_punct("(")) return false;
    int depth = 0;
    for (; i < toks_.size(); ++i) {
      if (toks_[i].is_punct("(") || toks_[i].is_punct("[") || toks_[i].is_punct("{")) ++depth;
      if (toks_[i].is_punct(")") || toks_[i].is_punct("]") || toks_[i].is_punct("}")) --depth;
      if (depth == 0) break;
      if (toks_[i].kind == TokenKind::End) return false;
    }
    return i + 1 < toks_.size() && toks_[i + 1].is_punct("=>");
  }

  AstNode arrow() {
    const auto begin = peek().span.begin;
    if (peek().is_ident("async") && !peek(1).is_punct("=>")) next();
    auto fn = make(NodeKind::FunctionDef, {begin, begin});
    std::vector<AstNode> prologue;
    if (peek().kind == TokenKind::Identifier) {
      fn.params.push_back(next().text);
    } else {
      fn.params = parameters(prologue);
    }
    expect("=>");
    fn.children = std::move(prologue);
    if (peek().is_punct("{")) {
      for (auto& s : function_body()) fn.children.push_back(std::move(s));
    } else {
      const auto rb = peek().span.begin;
      auto r = make(NodeKind::Return, {rb, rb});
      r.children.push_back(assignment());
      r.span = span_from(rb);
      fn.children.push_back(std::move(r));
    }
    fn.span = span_from(begin);
    return fn;
  }

  // -- expressions ------------------------------------------------------------

  AstNode expression() {
    auto e = assignment();
    while (peek().is_punct(",")) {  // sequence: keep the last operand
      next();
      e = assignment();
    }
    return e;
  }

  static bool is_assign_op(const Token& t) {
    if (t.kind != TokenKind::Punct) return false;
    static constexpr std::string_view kOps[] = {"=",  "+=", "-=",  "*=",  "/=",   "%=",  "**=", "<<=",
                                                ">>=", ">>>=", "&=", "|=", "^=", "&&=", "||=", "?\?="};
    for (auto op : kOps)
      if (t.text == op) return true;
    return false;
  }

  static AstNode as_member_path(AstNode e) {
    if (e.kind == NodeKind::MemberPath) return e;
    AstNode m;
    m.kind = NodeKind::MemberPath;
    m.span = e.span;
    if (e.kind == NodeKind::Identifier) {
      m.segments.push_back(e.text);
    } else {
      m.has_base = true;
      m.children.push_back(std::move(e));
    }
    return m;
  }

  AstNode assignment() {
    if (arrow_ahead()) return arrow();
    const auto begin = peek().span.begin;
    auto lhs = conditional();
    if (is_assign_op(peek())) {
      const auto op = next().text;
      auto rhs = assignment();
      if (lhs.kind != NodeKind::Identifier && lhs.kind != NodeKind::MemberPath) {
        auto o = make(NodeKind::Opaque, span_from(begin));
        o.text = "assignment to non-path target";
        return o;
      }
      auto a = make(NodeKind::Assignment, span_from(begin));
      a.text = op;
      a.children.push_back(as_member_path(std::move(lhs)));
      a.children.push_back(std::move(rhs));
      return a;
    }
    return lhs;
  }

  AstNode conditional() {
    const auto begin = peek().span.begin;
    auto c = binary(0);
    if (peek().is_punct("?")) {
      next();
      assignment();
      expect(":");
      assignment();
      auto o = make(NodeKind::Opaque, span_from(begin));
      o.text = "conditional expression";
      return o;
    }
    return c;
  }

  static int precedence(const Token& t) {
    if (t.kind == TokenKind::Identifier) return (t.text == "instanceof" || t.text == "in") ? 7 : -1;
    if (t.kind != TokenKind::Punct) return -1;
    const auto& p = t.text;
    if (p == "??") return 1;
    if (p == "||") return 1;
    if (p == "&&") return 2;
    if (p == "|") return 3;
    if (p == "^") return 4;
    if (p == "&") return 5;
    if (p == "==" || p == "!=" || p == "===" || p == "!==") return 6;
    if (p == "<" || p == ">" || p == "<=" || p == ">=") return 7;
    if (p == "<<" || p == ">>" || p == ">>>") return 8;
    if (p == "+" || p == "-") return 9;
    if (p == "*" || p == "/" || p == "%") return 10;
    if (p == "**") return 11;
    return -1;
  }

  AstNode binary(int min_prec) {
    const auto begin = peek().span.begin;
    auto lhs = unary();
    while (true) {
      const auto& op = peek();
      const int prec = precedence(op);
      if (prec < 0 || prec < min_prec) break;
      const bool plus = op.is_punct("+");
      next();
      auto rhs = binary(prec + 1);
      if (plus && lhs.kind != NodeKind::Opaque && rhs.kind != NodeKind::Opaque) {
        if (lhs.kind == NodeKind::TemplateConcat && lhs.text == "+") {
          lhs.children.push_back(std::move(rhs));
          lhs.span = span_from(begin);
        } else {
          auto cat = make(NodeKind::TemplateConcat, span_from(begin));
          cat.text = "+";
          cat.children.push_back(std::move(lhs));
          cat.children.push_back(std::move(rhs));
          lhs = std::move(cat);
        }
      } else {
        lhs = make(NodeKind::Opaque, span_from(begin));
        lhs.text = plus ? "concatenation with unsupported operand" : "operator '" + op.text + "'";
      }
    }
    return lhs;
  }

  AstNode unary() {
    const auto begin = peek().span.begin;
    const auto& t = peek();
    if (t.is_ident("await")) {
      next();
      return unary();
    }
    if (t.is_punct("!") || t.is_punct("~") || t.is_punct("+") || t.is_punct("-") || t.is_punct("++") ||
        t.is_punct("--") || t.is_ident("typeof") || t.is_ident("void") || t.is_ident("delete")) {
      const auto op = next().text;
      auto operand = unary();
      if (op == "-" && operand.kind == NodeKind::NumberLiteral) {
        operand.text = "-" + operand.text;
        operand.span = span_from(begin);
        return operand;
      }
      auto o = make(NodeKind::Opaque, span_from(begin));
      o.text = "unary '" + op + "'";
      return o;
    }
    auto e = postfix();
    if ((peek().is_punct("++") || peek().is_punct("--")) && !peek().newline_before) {
      next();
      auto o = make(NodeKind::Opaque, span_from(begin));
      o.text = "update expression";
      return o;
    }
    return e;
  }

  std::vector<AstNode> arguments() {
    std::vector<AstNode> args;
    expect("(");
    while (!peek().is_punct(")") && !at_end()) {
      accept("...");
      args.push_back(assignment());
      if (!accept(",")) break;
    }
    expect(")");
    return args;
  }

  AstNode postfix() {
    const auto begin = peek().span.begin;
    AstNode e;
    if (peek().is_ident("new")) {
      next();
      if (peek().is_punct(".")) {  // new.target
        next();
        next();
      } else {
        primary_no_call();
        if (peek().is_punct("(")) arguments();
      }
      e = make(NodeKind::Opaque, span_from(begin));
      e.text = "new expression";
    } else {
      e = primary();
    }

    while (true) {
      if (peek().is_punct(".") || peek().is_punct("?.")) {
        next();
        if (peek().is_punct("(")) {  // optional call a?.()
          continue;
        }
        if (peek().is_punct("[")) continue;
        if (peek().kind != TokenKind::Identifier) fail("expected property name");
        auto name = next().text;
        e = extend_path(std::move(e), std::move(name));
        e.span = span_from(begin);
      } else if (peek().is_punct("[")) {
        next();
        auto index = expression();
        expect("]");
        std::string seg = "*";
        if (index.kind == NodeKind::StringLiteral && !index.text.empty()) seg = index.text;
        if (index.kind == NodeKind::NumberLiteral) seg = index.text;
        e = extend_path(std::move(e), std::move(seg));
        e.span = span_from(begin);
      } else if (peek().is_punct("(")) {
        auto args = arguments();
        auto call = make(NodeKind::Call, span_from(begin));
        call.children.push_back(as_member_path(std::move(e)));
        for (auto& a : args) call.children.push_back(std::move(a));
        e = std::move(call);
      } else if (peek().kind == TokenKind::Template && !peek().newline_before) {
        next();  // tagged template
        e = make(NodeKind::Opaque, span_from(begin));
        e.text = "tagged template";
      } else {
        break;
      }
    }
    return e;
  }

  static AstNode extend_path(AstNode e, std::string seg) {
    if (e.kind == NodeKind::Identifier) {
      AstNode m;
      m.kind = NodeKind::MemberPath;
      m.span = e.span;
      m.segments = {e.text, std::move(seg)};
      return m;
    }
    if (e.kind == NodeKind::MemberPath) {
      e.segments.push_back(std::move(seg));
      return e;
    }
    AstNode m;
    m.kind = NodeKind::MemberPath;
    m.span = e.span;
    m.has_base = true;
    m.children.push_back(std::move(e));
    m.segments.push_back(std::move(seg));
    return m;
  }

  void primary_no_call() {
    if (peek().kind == TokenKind::Identifier) {
      next();
      while (peek().is_punct(".")) {
        next();
        next();
      }
      return;
    }
    primary();
  }

  AstNode primary() {
    const auto& t = peek();
    const auto begin = t.span.begin;
    switch (t.kind) {
      case TokenKind::Identifier: {
        if (t.text == "function") return function_expression();
        if (t.text == "async" && peek(1).is_ident("function") && !peek(1).newline_before) {
          next();
          return function_expression();
        }
        if (t.text == "class") {
          next();
          while (!peek().is_punct("{") && !at_end()) next();
          skip_balanced();
          auto o = make(NodeKind::Opaque, span_from(begin));
          o.text = "class expression";
          return o;
        }
        auto id = make(NodeKind::Identifier, t.span);
        id.text = next().text;
        return id;
      }
      case TokenKind::Number: {
        auto n = make(NodeKind::NumberLiteral, t.span);
        n.text = next().text;
        return n;
      }
      case TokenKind::String: {
        auto s = make(NodeKind::StringLiteral, t.span);
        s.text = next().text;
        return s;
      }
      case TokenKind::Template: return template_literal();
      case TokenKind::Regex: {
        next();
        auto o = make(NodeKind::Opaque, span_from(begin));
        o.text = "regex literal";
        return o;
      }
      case TokenKind::Punct: {
        if (t.is_punct("(")) {
          next();
          auto e = expression();
          expect(")");
          return e;
        }
        if (t.is_punct("[")) return array_literal();
        if (t.is_punct("{")) return object_literal();
        fail("unexpected '" + t.text + "'");
      }
      case TokenKind::End: fail("unexpected end of input");
    }
    fail("unexpected token");
  }

  AstNode template_literal() {
    const auto& t = next();
    if (t.template_exprs.empty()) {
      auto s = make(NodeKind::StringLiteral, t.span);
      s.text = t.template_parts.empty() ? "" : t.template_parts.front();
      return s;
    }
    auto cat = make(NodeKind::TemplateConcat, t.span);
    cat.text = "`";
    for (std::size_t i = 0; i < t.template_parts.size(); ++i) {
      if (!t.template_parts[i].empty()) {
        auto s = make(NodeKind::StringLiteral, t.span);
        s.text = t.template_parts[i];
        cat.children.push_back(std::move(s));
      }
      if (i < t.template_exprs.size()) {
        Parser sub(t.template_exprs[i], diags_);
        try {
          cat.children.push_back(sub.parse_lone_expression());
        } catch (const ParseError& e) {
          auto o = make(NodeKind::Opaque, t.span);
          o.text = e.message;
          cat.children.push_back(std::move(o));
        }
      }
    }
    return cat;
  }

  AstNode array_literal() {
    const auto begin = peek().span.begin;
    expect("[");
    auto a = make(NodeKind::ArrayLiteral, {begin, begin});
    while (!peek().is_punct("]") && !at_end()) {
      if (peek().is_punct(",")) {
        next();
        continue;
      }
      accept("...");
      a.children.push_back(assignment());
      if (!accept(",")) break;
    }
    expect("]");
    a.span = span_from(begin);
    return a;
  }

  AstNode object_literal() {
    const auto begin = peek().span.begin;
    expect("{");
    auto o = make(NodeKind::ObjectLiteral, {begin, begin});
    while (!peek().is_punct("}") && !at_end()) {
      const auto prop_begin = peek().span.begin;
      if (accept("...")) {
        o.keys.push_back("...");
        o.children.push_back(assignment());
      } else {
        // modifiers: async, get, set, generator star
        if ((peek().is_ident("async") || peek().is_ident("get") || peek().is_ident("set")) &&
            !peek(1).is_punct(":") && !peek(1).is_punct("(") && !peek(1).is_punct(",") &&
            !peek(1).is_punct("}"))
          next();
        accept("*");
        std::string key;
        const auto& k = peek();
        if (k.kind == TokenKind::Identifier || k.kind == TokenKind::String || k.kind == TokenKind::Number) {
          key = next().text;
        } else if (k.is_punct("[")) {
          skip_balanced();
          key = "*";
        } else {
          fail("bad object key '" + k.text + "'");
        }
        if (accept(":")) {
          o.keys.push_back(key);
          o.children.push_back(assignment());
        } else if (peek().is_punct("(")) {
          o.keys.push_back(key);
          o.children.push_back(method(key, prop_begin));
        } else {
          // shorthand `{ host }` (with optional default in patterns)
          auto id = make(NodeKind::Identifier, span_from(prop_begin));
          id.text = key;
          skip_default();
          o.keys.push_back(key);
          o.children.push_back(std::move(id));
        }
      }
      if (!accept(",")) break;
    }
    expect("}");
    o.span = span_from(begin);
    return o;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t prev_end_ = 0;
  Diagnostics* diags_;
};

}  // namespace js

/// Total parse: never throws. Lexer failures yield a single whole-file
/// Opaque item plus a diagnostic.
inline ScriptModule parse_script(std::string_view text) {
  ScriptModule m;
  m.source_size = text.size();
  std::vector<js::Token> tokens;
  try {
    tokens = js::Lexer(text).run();
  } catch (const js::LexError& e) {
    AstNode o;
    o.kind = NodeKind::Opaque;
    o.span = {0, text.size()};
    o.text = "lexer failure: " + e.message;
    m.items.push_back(std::move(o));
    m.diagnostics.push_back({Severity::Warning, "LexError", e.message, std::to_string(e.offset)});
    return m;
  }
  js::Parser parser(std::move(tokens), &m.diagnostics);
  m.items = parser.parse_program();
  return m;
}

}  // namespace cmcs
