#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cmcs/common.hpp"

namespace cmcs::js {

enum class TokenKind { Identifier, Number, String, Template, Punct, Regex, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;  // identifier name, punctuator, number spelling, cooked string
  SourceSpan span;
  bool newline_before = false;
  // Template literals: cooked text pieces and, between them, the token
  // streams of each `${...}` substitution (each terminated by an End token).
  std::vector<std::string> template_parts;
  std::vector<std::vector<Token>> template_exprs;

  bool is_punct(std::string_view p) const { return kind == TokenKind::Punct && text == p; }
  bool is_ident(std::string_view n) const { return kind == TokenKind::Identifier && text == n; }
};

struct LexError {
  std::string message;
  std::size_t offset;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  /// Tokenizes the whole input. Throws LexError on unterminated constructs.
  std::vector<Token> run() {
    auto toks = lex(false);
    return toks;
  }

 private:
  static bool keyword_allows_regex(std::string_view w) {
    return w == "return" || w == "typeof" || w == "case" || w == "in" || w == "of" ||
           w == "new" || w == "delete" || w == "void" || w == "throw" || w == "else" ||
           w == "do" || w == "instanceof" || w == "yield" || w == "await";
  }

  bool regex_allowed(const std::vector<Token>& toks) const {
    if (toks.empty()) return true;
    const auto& t = toks.back();
    switch (t.kind) {
      case TokenKind::Identifier: return keyword_allows_regex(t.text);
      case TokenKind::Number:
      case TokenKind::String:
      case TokenKind::Template:
      case TokenKind::Regex: return false;
      case TokenKind::Punct: return t.text != ")" && t.text != "]" && t.text != "}";
      case TokenKind::End: return true;
    }
    return true;
  }

  // Lexes until end of input, or (nested) until the '}' closing a `${`.
  std::vector<Token> lex(bool in_substitution) {
    std::vector<Token> toks;
    int depth = 0;
    bool newline = false;
    while (true) {
      newline |= skip_trivia();
      if (pos_ >= src_.size()) {
        if (in_substitution) throw LexError{"unterminated template substitution", pos_};
        break;
      }
      const char c = src_[pos_];
      Token t;
      t.newline_before = newline;
      newline = false;
      const auto begin = pos_;
      if (in_substitution && c == '}' && depth == 0) {
        ++pos_;
        break;
      }
      if (text::is_ident_start(c) || c == '\\') {
        while (pos_ < src_.size() && (text::is_ident_char(src_[pos_]) || src_[pos_] == '\\')) ++pos_;
        t.kind = TokenKind::Identifier;
        t.text = std::string(src_.substr(begin, pos_ - begin));
      } else if ((c >= '0' && c <= '9') ||
                 (c == '.' && pos_ + 1 < src_.size() && src_[pos_ + 1] >= '0' && src_[pos_ + 1] <= '9')) {
        while (pos_ < src_.size() &&
               (text::is_ident_char(src_[pos_]) || src_[pos_] == '.' ||
                ((src_[pos_] == '+' || src_[pos_] == '-') &&
                 (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E') && src_[begin] != '0')))
          ++pos_;
        t.kind = TokenKind::Number;
        t.text = std::string(src_.substr(begin, pos_ - begin));
      } else if (c == '"' || c == '\'') {
        t.kind = TokenKind::String;
        t.text = string_body(c);
      } else if (c == '`') {
        t.kind = TokenKind::Template;
        template_body(t);
      } else if (c == '/' && regex_allowed(toks)) {
        regex();
        t.kind = TokenKind::Regex;
        t.text = std::string(src_.substr(begin, pos_ - begin));
      } else {
        t.kind = TokenKind::Punct;
        t.text = punct();
        if (t.text == "{") ++depth;
        if (t.text == "}") --depth;
      }
      t.span = {begin, pos_};
      toks.push_back(std::move(t));
    }
    Token end;
    end.kind = TokenKind::End;
    end.span = {pos_, pos_};
    end.newline_before = true;
    toks.push_back(std::move(end));
    return toks;
  }

  // Returns true when a line terminator was skipped.
  bool skip_trivia() {
    bool newline = false;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\n') {
        newline = true;
        ++pos_;
      } else if (text::is_space(c)) {
        ++pos_;
      } else if (src_.compare(pos_, 2, "//") == 0) {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (src_.compare(pos_, 2, "/*") == 0) {
        const auto end = src_.find("*/", pos_ + 2);
        if (end == std::string_view::npos) throw LexError{"unterminated block comment", pos_};
        if (src_.substr(pos_, end - pos_).find('\n') != std::string_view::npos) newline = true;
        pos_ = end + 2;
      } else if (static_cast<unsigned char>(c) == 0xEF && src_.compare(pos_, 3, "\xEF\xBB\xBF") == 0) {
        pos_ += 3;  // BOM
      } else {
        break;
      }
    }
    return newline;
  }

  void escape(std::string& out) {
    // pos_ is just past the backslash
    if (pos_ >= src_.size()) throw LexError{"dangling escape", pos_};
    const char e = src_[pos_++];
    switch (e) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case 'b': out += '\b'; break;
      case 'f': out += '\f'; break;
      case 'v': out += '\v'; break;
      case '0': out += '\0'; break;
      case '\r':
        if (pos_ < src_.size() && src_[pos_] == '\n') ++pos_;
        break;
      case '\n': break;
      case 'x': {
        if (pos_ + 2 > src_.size()) throw LexError{"bad \\x escape", pos_};
        out += static_cast<char>(std::stoi(std::string(src_.substr(pos_, 2)), nullptr, 16));
        pos_ += 2;
        break;
      }
      case 'u': {
        unsigned cp = 0;
        if (pos_ < src_.size() && src_[pos_] == '{') {
          const auto close = src_.find('}', pos_);
          if (close == std::string_view::npos) throw LexError{"bad \\u escape", pos_};
          cp = static_cast<unsigned>(std::stoul(std::string(src_.substr(pos_ + 1, close - pos_ - 1)), nullptr, 16));
          pos_ = close + 1;
        } else {
          if (pos_ + 4 > src_.size()) throw LexError{"bad \\u escape", pos_};
          cp = static_cast<unsigned>(std::stoul(std::string(src_.substr(pos_, 4)), nullptr, 16));
          pos_ += 4;
        }
        append_utf8(out, cp);
        break;
      }
      default: out += e;
    }
  }

  static void append_utf8(std::string& out, unsigned cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  std::string string_body(char quote) {
    const auto begin = pos_;
    ++pos_;
    std::string out;
    while (true) {
      if (pos_ >= src_.size() || src_[pos_] == '\n')
        throw LexError{"unterminated string literal", begin};
      const char c = src_[pos_++];
      if (c == quote) break;
      if (c == '\\') {
        try {
          escape(out);
        } catch (const std::exception&) {
          throw LexError{"bad escape in string literal", pos_};
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  void template_body(Token& t) {
    const auto begin = pos_;
    ++pos_;
    std::string cur;
    while (true) {
      if (pos_ >= src_.size()) throw LexError{"unterminated template literal", begin};
      const char c = src_[pos_];
      if (c == '`') {
        ++pos_;
        break;
      }
      if (c == '\\') {
        ++pos_;
        try {
          escape(cur);
        } catch (const std::exception&) {
          throw LexError{"bad escape in template literal", pos_};
        }
        continue;
      }
      if (c == '$' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '{') {
        pos_ += 2;
        t.template_parts.push_back(std::move(cur));
        cur.clear();
        t.template_exprs.push_back(lex(true));
        continue;
      }
      cur += c;
      ++pos_;
    }
    t.template_parts.push_back(std::move(cur));
  }

  void regex() {
    const auto begin = pos_;
    ++pos_;
    bool in_class = false;
    while (true) {
      if (pos_ >= src_.size() || src_[pos_] == '\n') throw LexError{"unterminated regex literal", begin};
      const char c = src_[pos_++];
      if (c == '\\') {
        ++pos_;
      } else if (c == '[') {
        in_class = true;
      } else if (c == ']') {
        in_class = false;
      } else if (c == '/' && !in_class) {
        break;
      }
    }
    while (pos_ < src_.size() && text::is_ident_char(src_[pos_])) ++pos_;  // flags
  }

  std::string punct() {
    static constexpr std::string_view kPuncts[] = {
        ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "?\?=",
        "=>",   "==",  "!=",  "<=",  ">=",  "&&",  "||",  "??",  "++",  "--",  "+=",
        "-=",   "*=",  "/=",  "%=",  "&=",  "|=",  "^=",  "**",  "<<",  ">>"};
    for (auto p : kPuncts) {
      if (src_.compare(pos_, p.size(), p) == 0) {
        pos_ += p.size();
        return std::string(p);
      }
    }
    if (src_.compare(pos_, 2, "?.") == 0 &&
        !(pos_ + 2 < src_.size() && src_[pos_ + 2] >= '0' && src_[pos_ + 2] <= '9')) {
      pos_ += 2;
      return "?.";
    }
    return std::string(1, src_[pos_++]);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace cmcs::js
