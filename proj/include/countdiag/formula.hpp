#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "countdiag/table.hpp"

namespace countdiag {

struct Term {
  std::string variable;
  int power = 1;

  bool operator==(const Term&) const = default;
};

struct TermList {
  std::vector<Term> terms;
  bool intercept = true;

  bool operator==(const TermList&) const = default;
};

/// `response ~ terms [| zero_terms]`. Without the `|` part both hurdle
/// components use `rhs`.
struct FormulaAst {
  std::string response;
  TermList rhs;
  std::optional<TermList> zero_part;

  bool operator==(const FormulaAst&) const = default;
};

/// Grammar:
///   formula := response "~" part ("|" part)?
///   part    := term ("+" term)*
///   term    := identifier ("^" integer)? | "1" | "0"
/// "1" / "0" switch the intercept of their part on / off.
FormulaAst parse_formula(const std::string& text);

/// Canonical text that parses back to the same AST.
std::string unparse_formula(const FormulaAst& ast);

struct DesignMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;
  bool has_intercept = false;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

struct ModelFrame {
  Eigen::VectorXd response;
  DesignMatrix count;
  /// Present only when the formula has a `|` part.
  std::optional<DesignMatrix> zero;
};

/// Design for one term list: intercept first, numeric terms raised to their
/// power, factors expanded to "var: level/reference" dummies.
DesignMatrix build_terms(const TermList& part, const DataTable& table);

/// Response plus design matrices. The response must be integer-valued and
/// nonnegative.
ModelFrame build_design(const FormulaAst& ast, const DataTable& table);

}  // namespace countdiag
