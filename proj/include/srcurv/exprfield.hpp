#pragma once

// Scalar-field expression language: parser, evaluator, symbolic
// differentiation.  Fields over chart variables q1..qk plus named
// parameters; used for metrics, potentials and magnetic intensities in
// scenario files.
//
// Grammar (see docs/expr_grammar.md):
//   expr    = term { ("+"|"-") term }
//   term    = factor { ("*"|"/") factor }
//   factor  = unary [ "^" factor ]          (right associative)
//   unary   = ("+"|"-") unary | primary
//   primary = NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
// Functions: sin cos exp log sqrt tanh (unary).

#include <map>
#include <memory>
#include <string>

#include "srcurv/types.hpp"

namespace srcurv::exprfield {

class ParseError : public InputError {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : InputError(msg + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public NumericError {
 public:
  using NumericError::NumericError;
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable expression tree.  Variables are q1..qdim, everything else
/// must be a declared parameter.
class Expr {
 public:
  Expr() = default;
  explicit Expr(NodePtr root) : root_(std::move(root)) {}

  bool valid() const { return root_ != nullptr; }
  const NodePtr& root() const { return root_; }

  double eval(const Vec& q, const std::map<std::string, double>& params) const;
  /// Exact derivative w.r.t. q(var) (0-based); result is again an Expr.
  Expr derivative(int var) const;
  /// Canonical printed form; parse(print(e)) is structurally equal to e.
  std::string print() const;
  bool structurally_equal(const Expr& other) const;

 private:
  NodePtr root_;
};

/// Parse an expression over q1..qdim and the given parameter names.
Expr parse(const std::string& text, int dim,
           const std::map<std::string, double>& params = {});

/// Scalar field with exact partials up to order 2 (tree differentiation)
/// and order-3 partials by central differences of order-2 values.
class ScalarField {
 public:
  ScalarField(Expr expr, int dim, std::map<std::string, double> params = {});
  ScalarField(const std::string& text, int dim,
              std::map<std::string, double> params = {});

  int dim() const { return dim_; }
  const Expr& expr() const { return expr_; }

  double value(const Vec& q) const;
  double d1(int i, const Vec& q) const;
  double d2(int i, int j, const Vec& q) const;
  /// Central differences of d2 with step 1e-4*max(1,|q_k|), one
  /// Richardson level.
  double d3(int i, int j, int k, const Vec& q) const;

 private:
  Expr expr_;
  int dim_ = 0;
  std::map<std::string, double> params_;
  std::vector<Expr> grad_;               // dim entries
  std::vector<std::vector<Expr>> hess_;  // dim x dim entries
};

}  // namespace srcurv::exprfield
