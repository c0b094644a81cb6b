#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "cilp/logic.hpp"

namespace cilp {

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Loosely typed term used inside `:- ...` directives, e.g.
/// `modeb(*, contains(+example, -part))` or `determination(face/1, isa/2)`.
/// Mode markers and `name/arity` indicators are kept in the functor text.
struct DirectiveTerm {
  std::string functor;
  std::vector<DirectiveTerm> args;

  friend bool operator==(const DirectiveTerm&, const DirectiveTerm&) = default;
};

inline std::string to_string(const DirectiveTerm& t) {
  std::string out = t.functor;
  if (!t.args.empty()) {
    out += '(';
    for (std::size_t i = 0; i < t.args.size(); ++i) {
      if (i) out += ", ";
      out += to_string(t.args[i]);
    }
    out += ')';
  }
  return out;
}

struct Directive {
  DirectiveTerm goal;
  friend bool operator==(const Directive&, const Directive&) = default;
};

using Statement = std::variant<Directive, HornClause, Atom>;

/// A logic-program file in statement order.
struct Program {
  std::vector<Statement> statements;

  std::vector<HornClause> clauses() const { return collect<HornClause>(); }
  std::vector<Atom> facts() const { return collect<Atom>(); }
  std::vector<Directive> directives() const { return collect<Directive>(); }

  friend bool operator==(const Program&, const Program&) = default;

 private:
  template <class T>
  std::vector<T> collect() const {
    std::vector<T> out;
    for (const auto& s : statements)
      if (const T* p = std::get_if<T>(&s)) out.push_back(*p);
    return out;
  }
};

namespace detail {

class ProgramParser {
 public:
  explicit ProgramParser(std::string_view text) : text_(text) {}

  Program parse() {
    Program prog;
    for (skip_space(); pos_ < text_.size(); skip_space()) prog.statements.push_back(statement());
    return prog;
  }

 private:
  enum class Kind { name, variable, number, punct, end };
  struct Token {
    Kind kind;
    std::string text;
    std::size_t line, column;
  };

  [[noreturn]] void fail(const Token& t, const std::string& what) const { throw ParseError(t.line, t.column, what); }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  Token peek() {
    const auto save = std::tuple{pos_, line_, column_};
    Token t = next();
    std::tie(pos_, line_, column_) = save;
    return t;
  }

  Token next() {
    skip_space();
    Token t{Kind::end, "", line_, column_};
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    auto take_ident = [&] {
      while (pos_ < text_.size() && is_ident_char(text_[pos_])) {
        t.text += text_[pos_];
        advance();
      }
    };
    if (c >= 'a' && c <= 'z') {
      t.kind = Kind::name;
      take_ident();
    } else if ((c >= 'A' && c <= 'Z') || c == '_') {
      t.kind = Kind::variable;
      take_ident();
      if (!is_variable_name(t.text)) fail(t, "invalid variable name '" + t.text + "'");
    } else if (c >= '0' && c <= '9') {
      t.kind = Kind::number;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        t.text += text_[pos_];
        advance();
      }
    } else if (c == ':' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
      t.kind = Kind::punct;
      t.text = ":-";
      advance();
      advance();
    } else if (std::string_view("(),.+-#*/").find(c) != std::string_view::npos) {
      t.kind = Kind::punct;
      t.text = std::string(1, c);
      advance();
    } else {
      fail(t, std::string("unexpected character '") + c + "'");
    }
    return t;
  }

  Token expect(std::string_view punct) {
    Token t = next();
    if (t.kind != Kind::punct || t.text != punct)
      fail(t, "expected '" + std::string(punct) + "' but found '" + (t.kind == Kind::end ? "end of input" : t.text) + "'");
    return t;
  }

  Statement statement() {
    Token t = peek();
    if (t.kind == Kind::punct && t.text == ":-") {
      next();
      Directive d{directive_term()};
      expect(".");
      return d;
    }
    const Token head_tok = peek();
    Atom head = atom();
    Token sep = next();
    if (sep.kind == Kind::punct && sep.text == ".") {
      for (const auto& a : head.args)
        if (a.is_variable()) fail(head_tok, "variable in ground fact: " + to_string(head));
      return head;
    }
    if (sep.kind != Kind::punct || sep.text != ":-") fail(sep, "expected '.' or ':-'");
    HornClause clause{std::move(head), {}};
    Atom lit = atom();
    if (lit.predicate == "true" && lit.args.empty()) {
      expect(".");
      return clause;
    }
    clause.body.push_back(std::move(lit));
    for (;;) {
      Token s = next();
      if (s.kind == Kind::punct && s.text == ".") break;
      if (s.kind != Kind::punct || s.text != ",") fail(s, "expected ',' or '.' in clause body");
      Token at = peek();
      Atom b = atom();
      if (b.predicate == "true" && b.args.empty()) fail(at, "'true' must be the only body literal");
      clause.body.push_back(std::move(b));
    }
    return clause;
  }

  Atom atom() {
    Token name = next();
    if (name.kind != Kind::name) fail(name, "expected predicate name");
    Atom a{name.text, {}};
    Token t = peek();
    if (t.kind == Kind::punct && t.text == "(") {
      next();
      for (;;) {
        Token arg = next();
        if (arg.kind == Kind::name)
          a.args.push_back(Term{Term::Kind::constant, arg.text});
        else if (arg.kind == Kind::variable)
          a.args.push_back(Term{Term::Kind::variable, arg.text});
        else
          fail(arg, "expected constant or variable argument");
        Token s = next();
        if (s.kind == Kind::punct && s.text == ")") break;
        if (s.kind != Kind::punct || s.text != ",") fail(s, "expected ',' or ')'");
      }
    }
    return a;
  }

  DirectiveTerm directive_term() {
    Token t = next();
    if (t.kind == Kind::punct && (t.text == "+" || t.text == "-" || t.text == "#")) {
      Token n = next();
      if (n.kind != Kind::name) fail(n, "expected type name after mode marker");
      return {t.text + n.text, {}};
    }
    if (t.kind == Kind::punct && t.text == "*") return {"*", {}};
    if (t.kind == Kind::number || t.kind == Kind::variable) return {t.text, {}};
    if (t.kind != Kind::name) fail(t, "expected term in directive");
    DirectiveTerm out{t.text, {}};
    Token p = peek();
    if (p.kind == Kind::punct && p.text == "/") {
      next();
      Token n = next();
      if (n.kind != Kind::number) fail(n, "expected arity after '/'");
      out.functor += "/" + n.text;
      return out;
    }
    if (p.kind == Kind::punct && p.text == "(") {
      next();
      for (;;) {
        out.args.push_back(directive_term());
        Token s = next();
        if (s.kind == Kind::punct && s.text == ")") break;
        if (s.kind != Kind::punct || s.text != ",") fail(s, "expected ',' or ')'");
      }
    }
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

}  // namespace detail

/// Parses facts, rules (`head :- body.`, `head :- true.` for an empty body),
/// directives (`:- goal.`) and `%` comments.
inline Program parse_program(std::string_view text) { return detail::ProgramParser(text).parse(); }

inline std::string serialize_statement(const Statement& s) {
  struct {
    std::string operator()(const Directive& d) const { return ":- " + to_string(d.goal) + "."; }
    std::string operator()(const HornClause& c) const { return to_string(c); }
    std::string operator()(const Atom& a) const {
      if (!a.is_ground()) throw Error("variable in ground fact: " + to_string(a));
      return to_string(a) + ".";
    }
  } visitor;
  return std::visit(visitor, s);
}

/// One statement per line, in input order.
inline std::string serialize_program(const Program& program) {
  std::string out;
  for (const auto& s : program.statements) out += serialize_statement(s) + "\n";
  return out;
}

inline std::string serialize_program(const std::vector<HornClause>& clauses, const std::vector<Atom>& atoms) {
  Program p;
  for (const auto& c : clauses) p.statements.emplace_back(c);
  for (const auto& a : atoms) p.statements.emplace_back(a);
  return serialize_program(p);
}

inline std::string serialize_theory(const Theory& theory) { return serialize_program(theory.clauses, {}); }

inline Theory parse_theory(std::string_view text) {
  Program p = parse_program(text);
  Theory t;
  for (auto& s : p.statements) {
    if (auto* c = std::get_if<HornClause>(&s))
      t.clauses.push_back(std::move(*c));
    else
      throw Error("theory files may only contain rules");
  }
  return t;
}

}  // namespace cilp
