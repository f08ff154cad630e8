#include "ldg/expression.hpp"

#include <charconv>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "ldg/common.hpp"

namespace ldg {

namespace {

enum class Op {
  Const,
  X1,
  X2,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Neg,
  Sin,
  Cos,
  Exp,
  Sqrt,
};

struct Instr {
  Op op;
  double value = 0.0;
};

[[noreturn]] void fail(const std::string& what, std::size_t column) {
  std::ostringstream msg;
  msg << "expression: " << what << " at column " << column + 1;
  throw Error(msg.str());
}

// recursive descent emitting a postfix program
struct Parser {
  const std::string& text;
  std::size_t pos = 0;
  std::vector<Instr> prog;

  explicit Parser(const std::string& t) : text(t) {}

  void skip_space() {
    while (pos < text.size() &&
           (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' ||
            text[pos] == '\r'))
      ++pos;
  }

  bool eat(char c) {
    skip_space();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expr() {
    term();
    for (;;) {
      skip_space();
      if (eat('+')) {
        term();
        prog.push_back({Op::Add});
      } else if (eat('-')) {
        term();
        prog.push_back({Op::Sub});
      } else {
        return;
      }
    }
  }

  void term() {
    unary();
    for (;;) {
      skip_space();
      if (eat('*')) {
        unary();
        prog.push_back({Op::Mul});
      } else if (eat('/')) {
        unary();
        prog.push_back({Op::Div});
      } else {
        return;
      }
    }
  }

  void unary() {
    skip_space();
    if (eat('-')) {
      unary();
      prog.push_back({Op::Neg});
    } else {
      power();
    }
  }

  void power() {
    primary();
    skip_space();
    if (eat('^')) {
      unary();  // right associative, allows a negative exponent
      prog.push_back({Op::Pow});
    }
  }

  void primary() {
    skip_space();
    if (pos >= text.size()) fail("unexpected end of expression", pos);
    const char c = text[pos];
    if (eat('(')) {
      expr();
      skip_space();
      if (!eat(')')) fail("missing ')'", pos);
      return;
    }
    if ((c >= '0' && c <= '9') || c == '.') {
      number();
      return;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      identifier();
      return;
    }
    fail(std::string("unexpected character '") + c + "'", pos);
  }

  void number() {
    double v = 0.0;
    const char* begin = text.data() + pos;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc()) fail("malformed number", pos);
    pos += static_cast<std::size_t>(ptr - begin);
    prog.push_back({Op::Const, v});
  }

  void identifier() {
    const std::size_t start = pos;
    while (pos < text.size() &&
           ((text[pos] >= 'a' && text[pos] <= 'z') ||
            (text[pos] >= 'A' && text[pos] <= 'Z') ||
            (text[pos] >= '0' && text[pos] <= '9')))
      ++pos;
    const std::string name = text.substr(start, pos - start);
    if (name == "x1") {
      prog.push_back({Op::X1});
      return;
    }
    if (name == "x2") {
      prog.push_back({Op::X2});
      return;
    }
    if (name == "pi") {
      prog.push_back({Op::Const, M_PI});
      return;
    }
    Op fn;
    if (name == "sin")
      fn = Op::Sin;
    else if (name == "cos")
      fn = Op::Cos;
    else if (name == "exp")
      fn = Op::Exp;
    else if (name == "sqrt")
      fn = Op::Sqrt;
    else
      fail("unknown identifier '" + name + "'", start);
    skip_space();
    if (!eat('(')) fail("expected '(' after '" + name + "'", pos);
    expr();
    skip_space();
    if (!eat(')')) fail("missing ')'", pos);
    prog.push_back({fn});
  }
};

double run_program(const std::vector<Instr>& prog, double x1, double x2) {
  double stack[64];
  int top = -1;
  for (const Instr& in : prog) {
    switch (in.op) {
      case Op::Const:
        stack[++top] = in.value;
        break;
      case Op::X1:
        stack[++top] = x1;
        break;
      case Op::X2:
        stack[++top] = x2;
        break;
      case Op::Add:
        stack[top - 1] += stack[top];
        --top;
        break;
      case Op::Sub:
        stack[top - 1] -= stack[top];
        --top;
        break;
      case Op::Mul:
        stack[top - 1] *= stack[top];
        --top;
        break;
      case Op::Div:
        stack[top - 1] /= stack[top];
        --top;
        break;
      case Op::Pow:
        stack[top - 1] = std::pow(stack[top - 1], stack[top]);
        --top;
        break;
      case Op::Neg:
        stack[top] = -stack[top];
        break;
      case Op::Sin:
        stack[top] = std::sin(stack[top]);
        break;
      case Op::Cos:
        stack[top] = std::cos(stack[top]);
        break;
      case Op::Exp:
        stack[top] = std::exp(stack[top]);
        break;
      case Op::Sqrt:
        if (stack[top] < 0.0) {
          std::ostringstream msg;
          msg << "expression: sqrt of negative value " << stack[top]
              << " at (x1, x2) = (" << x1 << ", " << x2 << ")";
          throw Error(msg.str());
        }
        stack[top] = std::sqrt(stack[top]);
        break;
    }
  }
  return stack[0];
}

}  // namespace

ScalarClosure parse_expression(const std::string& text) {
  Parser p(text);
  p.skip_space();
  if (p.pos >= text.size()) fail("empty expression", 0);
  p.expr();
  p.skip_space();
  if (p.pos < text.size())
    fail(std::string("unexpected character '") + text[p.pos] + "'", p.pos);

  // depth never exceeds the program length; cap guards the fixed stack
  int depth = 0, maxd = 0;
  for (const Instr& in : p.prog) {
    if (in.op == Op::Const || in.op == Op::X1 || in.op == Op::X2)
      ++depth;
    else if (in.op != Op::Neg && in.op != Op::Sin && in.op != Op::Cos &&
             in.op != Op::Exp && in.op != Op::Sqrt)
      --depth;
    maxd = std::max(maxd, depth);
  }
  if (maxd > 64) throw Error("expression: too deeply nested");

  auto prog = std::make_shared<std::vector<Instr>>(std::move(p.prog));
  return [prog](double x1, double x2) { return run_program(*prog, x1, x2); };
}

}  // namespace ldg
