#pragma once

// Common evaluator interface for chart-dependent scalar quantities.
// Expression-backed fields give exact partials up to order 2; numeric
// fields (e.g. components produced by the quotient construction) fall
// back to central finite differences.

#include <functional>
#include <memory>

#include "srcurv/exprfield.hpp"
#include "srcurv/types.hpp"

namespace srcurv {

class ScalarFieldBase {
 public:
  virtual ~ScalarFieldBase() = default;
  virtual int dim() const = 0;
  virtual double value(const Vec& q) const = 0;
  virtual double d1(int i, const Vec& q) const;
  virtual double d2(int i, int j, const Vec& q) const;
  virtual double d3(int i, int j, int k, const Vec& q) const;
};

using FieldPtr = std::shared_ptr<const ScalarFieldBase>;

class ConstantField final : public ScalarFieldBase {
 public:
  ConstantField(double v, int dim) : v_(v), dim_(dim) {}
  int dim() const override { return dim_; }
  double value(const Vec&) const override { return v_; }
  double d1(int, const Vec&) const override { return 0.0; }
  double d2(int, int, const Vec&) const override { return 0.0; }
  double d3(int, int, int, const Vec&) const override { return 0.0; }

 private:
  double v_;
  int dim_;
};

/// Wraps exprfield::ScalarField (exact low-order partials).
class ExprField final : public ScalarFieldBase {
 public:
  explicit ExprField(exprfield::ScalarField f) : f_(std::move(f)) {}
  ExprField(const std::string& text, int dim,
            std::map<std::string, double> params = {})
      : f_(text, dim, std::move(params)) {}

  int dim() const override { return f_.dim(); }
  double value(const Vec& q) const override { return f_.value(q); }
  double d1(int i, const Vec& q) const override { return f_.d1(i, q); }
  double d2(int i, int j, const Vec& q) const override { return f_.d2(i, j, q); }
  double d3(int i, int j, int k, const Vec& q) const override {
    return f_.d3(i, j, k, q);
  }

 private:
  exprfield::ScalarField f_;
};

/// Wraps an arbitrary evaluator; all partials by finite differences.
class NumericField final : public ScalarFieldBase {
 public:
  NumericField(std::function<double(const Vec&)> fn, int dim)
      : fn_(std::move(fn)), dim_(dim) {}
  int dim() const override { return dim_; }
  double value(const Vec& q) const override { return fn_(q); }

 private:
  std::function<double(const Vec&)> fn_;
  int dim_;
};

inline FieldPtr constant_field(double v, int dim) {
  return std::make_shared<ConstantField>(v, dim);
}
inline FieldPtr expr_field(const std::string& text, int dim,
                           std::map<std::string, double> params = {}) {
  return std::make_shared<ExprField>(text, dim, std::move(params));
}
inline FieldPtr numeric_field(std::function<double(const Vec&)> fn, int dim) {
  return std::make_shared<NumericField>(std::move(fn), dim);
}

}  // namespace srcurv
