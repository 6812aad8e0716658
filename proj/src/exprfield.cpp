#include "srcurv/exprfield.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <vector>

namespace srcurv::exprfield {

enum class Op {
  kConst,
  kVar,    // chart variable, index in `var`
  kParam,  // named parameter
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,
  kNeg,
  kSin,
  kCos,
  kExp,
  kLog,
  kSqrt,
  kTanh,
};

struct Node {
  Op op;
  double value = 0.0;  // kConst
  int var = -1;        // kVar
  std::string name;    // kParam
  NodePtr a, b;
};

namespace {

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::kConst;
  n->value = v;
  return n;
}

NodePtr make_var(int i) {
  auto n = std::make_shared<Node>();
  n->op = Op::kVar;
  n->var = i;
  return n;
}

NodePtr make_param(std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::kParam;
  n->name = std::move(name);
  return n;
}

NodePtr make_node(Op op, NodePtr a, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

bool is_const(const NodePtr& n, double v) {
  return n->op == Op::kConst && n->value == v;
}

// Smart constructors fold constants and drop trivial identities so that
// derivative trees stay small.  No algebraic canonicalization beyond that.
NodePtr add(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr div(NodePtr a, NodePtr b);
NodePtr neg(NodePtr a);

NodePtr add(NodePtr a, NodePtr b) {
  if (a->op == Op::kConst && b->op == Op::kConst)
    return make_const(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make_node(Op::kAdd, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (a->op == Op::kConst && b->op == Op::kConst)
    return make_const(a->value - b->value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(b);
  return make_node(Op::kSub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (a->op == Op::kConst && b->op == Op::kConst)
    return make_const(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return make_node(Op::kMul, std::move(a), std::move(b));
}

NodePtr div(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0) && !is_const(b, 0.0)) return make_const(0.0);
  if (is_const(b, 1.0)) return a;
  return make_node(Op::kDiv, std::move(a), std::move(b));
}

NodePtr neg(NodePtr a) {
  if (a->op == Op::kConst) return make_const(-a->value);
  return make_node(Op::kNeg, std::move(a));
}

NodePtr pow_node(NodePtr a, NodePtr b) {
  if (is_const(b, 1.0)) return a;
  if (is_const(b, 0.0)) return make_const(1.0);
  return make_node(Op::kPow, std::move(a), std::move(b));
}

double eval_node(const Node& n, const Vec& q,
                 const std::map<std::string, double>& params) {
  switch (n.op) {
    case Op::kConst:
      return n.value;
    case Op::kVar:
      if (n.var >= q.size())
        throw EvalError("variable q" + std::to_string(n.var + 1) +
                        " out of range for point of dim " +
                        std::to_string(q.size()));
      return q[n.var];
    case Op::kParam: {
      auto it = params.find(n.name);
      if (it == params.end())
        throw EvalError("unbound parameter '" + n.name + "'");
      return it->second;
    }
    case Op::kAdd:
      return eval_node(*n.a, q, params) + eval_node(*n.b, q, params);
    case Op::kSub:
      return eval_node(*n.a, q, params) - eval_node(*n.b, q, params);
    case Op::kMul:
      return eval_node(*n.a, q, params) * eval_node(*n.b, q, params);
    case Op::kDiv: {
      double d = eval_node(*n.b, q, params);
      if (d == 0.0) throw EvalError("division by zero");
      return eval_node(*n.a, q, params) / d;
    }
    case Op::kPow: {
      double base = eval_node(*n.a, q, params);
      double ex = eval_node(*n.b, q, params);
      if (base == 0.0 && ex < 0.0) throw EvalError("zero raised to negative power");
      if (base < 0.0 && ex != std::floor(ex))
        throw EvalError("negative base with non-integer exponent");
      double r = std::pow(base, ex);
      if (!std::isfinite(r)) throw EvalError("non-finite power");
      return r;
    }
    case Op::kNeg:
      return -eval_node(*n.a, q, params);
    case Op::kSin:
      return std::sin(eval_node(*n.a, q, params));
    case Op::kCos:
      return std::cos(eval_node(*n.a, q, params));
    case Op::kExp: {
      double r = std::exp(eval_node(*n.a, q, params));
      if (!std::isfinite(r)) throw EvalError("exp overflow");
      return r;
    }
    case Op::kLog: {
      double x = eval_node(*n.a, q, params);
      if (x <= 0.0) throw EvalError("log of nonpositive value");
      return std::log(x);
    }
    case Op::kSqrt: {
      double x = eval_node(*n.a, q, params);
      if (x < 0.0) throw EvalError("sqrt of negative value");
      return std::sqrt(x);
    }
    case Op::kTanh:
      return std::tanh(eval_node(*n.a, q, params));
  }
  throw EvalError("corrupt expression node");
}

NodePtr diff_node(const NodePtr& n, int var) {
  switch (n->op) {
    case Op::kConst:
    case Op::kParam:
      return make_const(0.0);
    case Op::kVar:
      return make_const(n->var == var ? 1.0 : 0.0);
    case Op::kAdd:
      return add(diff_node(n->a, var), diff_node(n->b, var));
    case Op::kSub:
      return sub(diff_node(n->a, var), diff_node(n->b, var));
    case Op::kMul:
      return add(mul(diff_node(n->a, var), n->b),
                 mul(n->a, diff_node(n->b, var)));
    case Op::kDiv:
      // (a/b)' = a'/b - a*b'/b^2
      return sub(div(diff_node(n->a, var), n->b),
                 div(mul(n->a, diff_node(n->b, var)),
                     pow_node(n->b, make_const(2.0))));
    case Op::kPow: {
      if (n->b->op == Op::kConst) {
        double c = n->b->value;
        // (a^c)' = c a^(c-1) a'
        return mul(mul(make_const(c), pow_node(n->a, make_const(c - 1.0))),
                   diff_node(n->a, var));
      }
      // a^b = exp(b log a):  (a^b)' = a^b (b' log a + b a'/a)
      NodePtr self = make_node(Op::kPow, n->a, n->b);
      NodePtr t1 = mul(diff_node(n->b, var), make_node(Op::kLog, n->a));
      NodePtr t2 = div(mul(n->b, diff_node(n->a, var)), n->a);
      return mul(self, add(t1, t2));
    }
    case Op::kNeg:
      return neg(diff_node(n->a, var));
    case Op::kSin:
      return mul(make_node(Op::kCos, n->a), diff_node(n->a, var));
    case Op::kCos:
      return neg(mul(make_node(Op::kSin, n->a), diff_node(n->a, var)));
    case Op::kExp:
      return mul(make_node(Op::kExp, n->a), diff_node(n->a, var));
    case Op::kLog:
      return div(diff_node(n->a, var), n->a);
    case Op::kSqrt:
      // (sqrt a)' = a' / (2 sqrt a)
      return div(diff_node(n->a, var),
                 mul(make_const(2.0), make_node(Op::kSqrt, n->a)));
    case Op::kTanh: {
      // (tanh a)' = (1 - tanh^2 a) a'
      NodePtr t = make_node(Op::kTanh, n->a);
      return mul(sub(make_const(1.0), mul(t, t)), diff_node(n->a, var));
    }
  }
  throw EvalError("corrupt expression node");
}

int precedence(Op op) {
  switch (op) {
    case Op::kAdd:
    case Op::kSub:
      return 1;
    case Op::kMul:
    case Op::kDiv:
      return 2;
    case Op::kNeg:
      return 3;
    case Op::kPow:
      return 4;
    default:
      return 5;
  }
}

const char* func_name(Op op) {
  switch (op) {
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kTanh: return "tanh";
    default: return nullptr;
  }
}

void print_node(const NodePtr& n, std::ostream& os, int parent_prec) {
  int prec = precedence(n->op);
  bool need_paren = prec < parent_prec;
  switch (n->op) {
    case Op::kConst: {
      if (n->value < 0.0) {
        os << '(' << n->value << ')';
      } else {
        std::ostringstream tmp;
        tmp.precision(17);
        tmp << n->value;
        os << tmp.str();
      }
      return;
    }
    case Op::kVar:
      os << 'q' << (n->var + 1);
      return;
    case Op::kParam:
      os << n->name;
      return;
    case Op::kNeg:
      if (need_paren) os << '(';
      os << '-';
      print_node(n->a, os, prec + 1);
      if (need_paren) os << ')';
      return;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
    case Op::kPow: {
      if (need_paren) os << '(';
      const char* sym = n->op == Op::kAdd   ? "+"
                        : n->op == Op::kSub ? "-"
                        : n->op == Op::kMul ? "*"
                        : n->op == Op::kDiv ? "/"
                                            : "^";
      // - and / are left associative, ^ right associative
      int lhs_prec = n->op == Op::kPow ? prec + 1 : prec;
      int rhs_prec = n->op == Op::kPow ? prec : prec + 1;
      print_node(n->a, os, lhs_prec);
      os << sym;
      print_node(n->b, os, rhs_prec);
      if (need_paren) os << ')';
      return;
    }
    default: {
      os << func_name(n->op) << '(';
      print_node(n->a, os, 0);
      os << ')';
      return;
    }
  }
}

bool nodes_equal(const NodePtr& x, const NodePtr& y) {
  if (x->op != y->op) return false;
  switch (x->op) {
    case Op::kConst: return x->value == y->value;
    case Op::kVar: return x->var == y->var;
    case Op::kParam: return x->name == y->name;
    default:
      if ((x->a == nullptr) != (y->a == nullptr)) return false;
      if ((x->b == nullptr) != (y->b == nullptr)) return false;
      if (x->a && !nodes_equal(x->a, y->a)) return false;
      if (x->b && !nodes_equal(x->b, y->b)) return false;
      return true;
  }
}

class Parser {
 public:
  Parser(const std::string& text, int dim,
         const std::map<std::string, double>& params)
      : text_(text), dim_(dim), params_(params) {}

  NodePtr run() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace((unsigned char)text_[pos_])) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (eat('+')) lhs = make_node(Op::kAdd, lhs, parse_term());
      else if (eat('-')) lhs = make_node(Op::kSub, lhs, parse_term());
      else return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (eat('*')) lhs = make_node(Op::kMul, lhs, parse_factor());
      else if (eat('/')) lhs = make_node(Op::kDiv, lhs, parse_factor());
      else return lhs;
    }
  }

  NodePtr parse_factor() {
    NodePtr base = parse_unary();
    if (eat('^')) return make_node(Op::kPow, base, parse_factor());
    return base;
  }

  NodePtr parse_unary() {
    skip_ws();
    if (eat('-')) return make_node(Op::kNeg, parse_unary());
    if (eat('+')) return parse_unary();
    return parse_primary();
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (std::isdigit((unsigned char)c) || c == '.') return parse_number();
    if (std::isalpha((unsigned char)c) || c == '_') return parse_ident();
    if (eat('(')) {
      NodePtr e = parse_expr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  NodePtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit((unsigned char)text_[pos_]) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit((unsigned char)text_[pos_])) {
        while (pos_ < text_.size() && std::isdigit((unsigned char)text_[pos_])) ++pos_;
      } else {
        pos_ = mark;  // 'e' was an identifier start, not an exponent
      }
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_)
      throw ParseError("malformed number", start);
    return make_const(v);
  }

  NodePtr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum((unsigned char)text_[pos_]) || text_[pos_] == '_'))
      ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    skip_ws();
    bool call = pos_ < text_.size() && text_[pos_] == '(';

    static const std::map<std::string, Op> kFuncs = {
        {"sin", Op::kSin}, {"cos", Op::kCos},   {"exp", Op::kExp},
        {"log", Op::kLog}, {"sqrt", Op::kSqrt}, {"tanh", Op::kTanh}};
    auto fit = kFuncs.find(name);
    if (fit != kFuncs.end()) {
      if (!call) throw ParseError("function '" + name + "' used without arguments", start);
      eat('(');
      NodePtr arg = parse_expr();
      if (eat(',')) throw ParseError("function '" + name + "' takes one argument", pos_ - 1);
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return make_node(fit->second, arg);
    }
    if (call) throw ParseError("unknown function '" + name + "'", start);

    if (name.size() >= 2 && name[0] == 'q') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit((unsigned char)name[i])) { digits = false; break; }
      if (digits) {
        int idx = std::stoi(name.substr(1));
        if (idx < 1 || idx > dim_)
          throw ParseError("variable '" + name + "' outside chart of dim " +
                               std::to_string(dim_),
                           start);
        return make_var(idx - 1);
      }
    }
    if (name == "pi") return make_const(M_PI);
    if (params_.count(name)) return make_param(name);
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  const std::string& text_;
  int dim_;
  const std::map<std::string, double>& params_;
  std::size_t pos_ = 0;
};

}  // namespace

double Expr::eval(const Vec& q, const std::map<std::string, double>& params) const {
  if (!root_) throw EvalError("empty expression");
  return eval_node(*root_, q, params);
}

Expr Expr::derivative(int var) const {
  if (!root_) throw EvalError("empty expression");
  return Expr(diff_node(root_, var));
}

std::string Expr::print() const {
  if (!root_) return "";
  std::ostringstream os;
  print_node(root_, os, 0);
  return os.str();
}

bool Expr::structurally_equal(const Expr& other) const {
  if (!root_ || !other.root_) return root_ == other.root_;
  return nodes_equal(root_, other.root_);
}

Expr parse(const std::string& text, int dim,
           const std::map<std::string, double>& params) {
  return Expr(Parser(text, dim, params).run());
}

ScalarField::ScalarField(Expr expr, int dim, std::map<std::string, double> params)
    : expr_(std::move(expr)), dim_(dim), params_(std::move(params)) {
  grad_.reserve(dim_);
  for (int i = 0; i < dim_; ++i) grad_.push_back(expr_.derivative(i));
  hess_.resize(dim_);
  for (int i = 0; i < dim_; ++i) {
    hess_[i].reserve(dim_);
    for (int j = 0; j < dim_; ++j) hess_[i].push_back(grad_[i].derivative(j));
  }
}

ScalarField::ScalarField(const std::string& text, int dim,
                         std::map<std::string, double> params)
    : ScalarField(parse(text, dim, params), dim, params) {}

double ScalarField::value(const Vec& q) const { return expr_.eval(q, params_); }

double ScalarField::d1(int i, const Vec& q) const {
  return grad_.at(i).eval(q, params_);
}

double ScalarField::d2(int i, int j, const Vec& q) const {
  return hess_.at(i).at(j).eval(q, params_);
}

double ScalarField::d3(int i, int j, int k, const Vec& q) const {
  double h = 1e-4 * std::max(1.0, std::abs(q[k]));
  auto central = [&](double step) {
    Vec qp = q, qm = q;
    qp[k] += step;
    qm[k] -= step;
    return (d2(i, j, qp) - d2(i, j, qm)) / (2.0 * step);
  };
  double full = central(h);
  double half = central(h / 2.0);
  return (4.0 * half - full) / 3.0;
}

}  // namespace srcurv::exprfield
