#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "exom/common.hpp"

namespace exom::expr {

// Small arithmetic grammar for mechanism definitions:
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | primary
//   primary:= number | name | fn '(' expr {',' expr} ')' | '(' expr ')'
// Functions: exp, log, tanh, softplus, indicator(x) = 1 if x > 0 else 0,
// cond(c, a, b) = a if c > 0 else b.

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class NodeKind {
  kConst,
  kVar,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kExp,
  kLog,
  kTanh,
  kSoftplus,
  kIndicator,
  kCond,
};

struct Node {
  NodeKind kind;
  double value = 0.0;       // kConst
  int var_slot = -1;        // kVar, set by bind()
  std::string var_name;     // kVar
  std::vector<Node> args;
};

class Expression {
 public:
  Expression() = default;
  explicit Expression(Node root, std::string source)
      : root_(std::move(root)), source_(std::move(source)) {}

  const std::string& source() const { return source_; }

  std::set<std::string> free_variables() const {
    std::set<std::string> names;
    collect(root_, names);
    return names;
  }

  // Resolves each variable name to a slot index; eval() then reads values
  // positionally. Unknown names raise UnknownVariableError.
  void bind(const std::function<int(const std::string&)>& slot_of) {
    bind_node(root_, slot_of);
  }

  double eval(const std::vector<double>& slots) const { return eval_node(root_, slots); }

 private:
  static void collect(const Node& n, std::set<std::string>& out) {
    if (n.kind == NodeKind::kVar) out.insert(n.var_name);
    for (const auto& a : n.args) collect(a, out);
  }

  static void bind_node(Node& n, const std::function<int(const std::string&)>& slot_of) {
    if (n.kind == NodeKind::kVar) {
      n.var_slot = slot_of(n.var_name);
      if (n.var_slot < 0) throw UnknownVariableError("unknown variable in expression: " + n.var_name);
    }
    for (auto& a : n.args) bind_node(a, slot_of);
  }

  static double eval_node(const Node& n, const std::vector<double>& slots) {
    switch (n.kind) {
      case NodeKind::kConst: return n.value;
      case NodeKind::kVar: return slots[static_cast<std::size_t>(n.var_slot)];
      case NodeKind::kAdd: return eval_node(n.args[0], slots) + eval_node(n.args[1], slots);
      case NodeKind::kSub: return eval_node(n.args[0], slots) - eval_node(n.args[1], slots);
      case NodeKind::kMul: return eval_node(n.args[0], slots) * eval_node(n.args[1], slots);
      case NodeKind::kDiv: return eval_node(n.args[0], slots) / eval_node(n.args[1], slots);
      case NodeKind::kNeg: return -eval_node(n.args[0], slots);
      case NodeKind::kExp: return std::exp(eval_node(n.args[0], slots));
      case NodeKind::kLog: return std::log(eval_node(n.args[0], slots));
      case NodeKind::kTanh: return std::tanh(eval_node(n.args[0], slots));
      case NodeKind::kSoftplus: return softplus(eval_node(n.args[0], slots));
      case NodeKind::kIndicator: return eval_node(n.args[0], slots) > 0.0 ? 1.0 : 0.0;
      case NodeKind::kCond:
        return eval_node(n.args[0], slots) > 0.0 ? eval_node(n.args[1], slots)
                                                 : eval_node(n.args[2], slots);
    }
    return 0.0;
  }

  Node root_{NodeKind::kConst, 0.0};
  std::string source_;
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Node parse() {
    Node n = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return n;
  }

 private:
  Node parse_expr() {
    Node lhs = parse_term();
    while (true) {
      skip_ws();
      if (accept('+')) {
        lhs = binary(NodeKind::kAdd, std::move(lhs), parse_term());
      } else if (accept('-')) {
        lhs = binary(NodeKind::kSub, std::move(lhs), parse_term());
      } else {
        return lhs;
      }
    }
  }

  Node parse_term() {
    Node lhs = parse_unary();
    while (true) {
      skip_ws();
      if (accept('*')) {
        lhs = binary(NodeKind::kMul, std::move(lhs), parse_unary());
      } else if (accept('/')) {
        lhs = binary(NodeKind::kDiv, std::move(lhs), parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Node parse_unary() {
    skip_ws();
    if (accept('-')) {
      Node n{NodeKind::kNeg};
      n.args.push_back(parse_unary());
      return n;
    }
    return parse_primary();
  }

  Node parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (c == '(') {
      ++pos_;
      Node n = parse_expr();
      expect(')');
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::string name = parse_ident();
      skip_ws();
      if (accept('(')) {
        std::vector<Node> args;
        args.push_back(parse_expr());
        skip_ws();
        while (accept(',')) {
          args.push_back(parse_expr());
          skip_ws();
        }
        expect(')');
        return make_call(name, std::move(args));
      }
      Node n{NodeKind::kVar};
      n.var_name = name;
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
    return Node{};
  }

  Node parse_number() {
    std::size_t end = pos_;
    while (end < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.' ||
            text_[end] == 'e' || text_[end] == 'E' ||
            ((text_[end] == '+' || text_[end] == '-') && end > pos_ &&
             (text_[end - 1] == 'e' || text_[end - 1] == 'E')))) {
      ++end;
    }
    Node n{NodeKind::kConst};
    try {
      n.value = std::stod(std::string(text_.substr(pos_, end - pos_)));
    } catch (const std::exception&) {
      fail("malformed number");
    }
    pos_ = end;
    return n;
  }

  std::string parse_ident() {
    std::size_t end = pos_;
    while (end < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[end])) ||
                                  text_[end] == '_')) {
      ++end;
    }
    std::string name(text_.substr(pos_, end - pos_));
    pos_ = end;
    return name;
  }

  Node make_call(const std::string& name, std::vector<Node> args) {
    const auto need = [&](std::size_t n) {
      if (args.size() != n) fail(name + " expects " + std::to_string(n) + " argument(s)");
    };
    Node n{NodeKind::kConst};
    if (name == "exp") {
      need(1);
      n.kind = NodeKind::kExp;
    } else if (name == "log") {
      need(1);
      n.kind = NodeKind::kLog;
    } else if (name == "tanh") {
      need(1);
      n.kind = NodeKind::kTanh;
    } else if (name == "softplus") {
      need(1);
      n.kind = NodeKind::kSoftplus;
    } else if (name == "indicator") {
      need(1);
      n.kind = NodeKind::kIndicator;
    } else if (name == "cond") {
      need(3);
      n.kind = NodeKind::kCond;
    } else {
      fail("unknown function: " + name);
    }
    n.args = std::move(args);
    return n;
  }

  static Node binary(NodeKind kind, Node a, Node b) {
    Node n{kind};
    n.args.push_back(std::move(a));
    n.args.push_back(std::move(b));
    return n;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("expression error at offset " + std::to_string(pos_) + ": " + msg);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expression parse(std::string_view text) {
  detail::Parser p(text);
  return Expression(p.parse(), std::string(text));
}

}  // namespace exom::expr
