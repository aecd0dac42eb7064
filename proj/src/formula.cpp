#include "countdiag/formula.hpp"

#include <cctype>
#include <cmath>

#include "countdiag/error.hpp"

namespace countdiag {

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  FormulaAst parse() {
    FormulaAst ast;
    skip_ws();
    if (at_end()) throw ParseError("empty formula", pos_);
    ast.response = identifier("response name");
    skip_ws();
    if (at_end() || s_[pos_] != '~') throw ParseError("expected '~'", pos_);
    ++pos_;
    ast.rhs = part(ast.response);
    skip_ws();
    if (!at_end() && s_[pos_] == '|') {
      ++pos_;
      ast.zero_part = part(ast.response);
      skip_ws();
    }
    if (!at_end()) {
      throw ParseError(std::string("unexpected token '") + s_[pos_] + "'", pos_);
    }
    return ast;
  }

 private:
  bool at_end() const { return pos_ >= s_.size(); }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  }

  std::string identifier(const char* what) {
    skip_ws();
    if (at_end() || !ident_start(s_[pos_])) {
      throw ParseError(std::string("expected ") + what, pos_);
    }
    const auto start = pos_;
    while (!at_end() && ident_char(s_[pos_])) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  int integer() {
    skip_ws();
    const auto start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) throw ParseError("expected integer", start);
    if (pos_ - start > 6) throw ParseError("integer too large", start);
    return std::stoi(s_.substr(start, pos_ - start));
  }

  TermList part(const std::string& response) {
    TermList list;
    bool any = false;
    for (;;) {
      skip_ws();
      const auto start = pos_;
      if (at_end() || s_[pos_] == '|' || s_[pos_] == '+') {
        throw ParseError(any ? "expected term after '+'" : "empty term list", pos_);
      }
      if (std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        const int lit = integer();
        if (lit != 0 && lit != 1) {
          throw ParseError("only the literals 0 and 1 are allowed as terms", start);
        }
        list.intercept = lit == 1;
      } else {
        Term t{identifier("term"), 1};
        skip_ws();
        if (!at_end() && s_[pos_] == '^') {
          ++pos_;
          t.power = integer();
          if (t.power < 1) throw ParseError("power must be a positive integer", pos_);
        }
        if (t.variable == response) {
          throw ParseError("response '" + response + "' used as a term", start);
        }
        for (const auto& other : list.terms) {
          if (other == t) throw ParseError("duplicate term '" + t.variable + "'", start);
        }
        list.terms.push_back(std::move(t));
      }
      any = true;
      skip_ws();
      if (!at_end() && s_[pos_] == '+') {
        ++pos_;
        continue;
      }
      break;
    }
    if (list.terms.empty() && !list.intercept) {
      throw ParseError("model part has neither intercept nor terms", pos_);
    }
    return list;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

std::string unparse_part(const TermList& part) {
  std::string out;
  auto append = [&](const std::string& s) {
    if (!out.empty()) out += " + ";
    out += s;
  };
  if (!part.intercept) append("0");
  else if (part.terms.empty()) append("1");
  for (const auto& t : part.terms) {
    append(t.power == 1 ? t.variable : t.variable + "^" + std::to_string(t.power));
  }
  return out;
}

}  // namespace

FormulaAst parse_formula(const std::string& text) { return Parser(text).parse(); }

std::string unparse_formula(const FormulaAst& ast) {
  std::string out = ast.response + " ~ " + unparse_part(ast.rhs);
  if (ast.zero_part) out += " | " + unparse_part(*ast.zero_part);
  return out;
}

DesignMatrix build_terms(const TermList& part, const DataTable& table) {
  const auto n = static_cast<Eigen::Index>(table.n_rows());
  std::vector<Eigen::VectorXd> cols;
  DesignMatrix dm;
  if (part.intercept) {
    cols.push_back(Eigen::VectorXd::Ones(n));
    dm.column_names.emplace_back("(Intercept)");
    dm.has_intercept = true;
  }
  for (const auto& term : part.terms) {
    const Column& col = table.column(term.variable);
    if (col.is_numeric()) {
      const auto& v = std::get<NumericColumn>(col.data).values;
      Eigen::VectorXd x(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        x[i] = std::pow(v[static_cast<std::size_t>(i)], term.power);
      }
      cols.push_back(std::move(x));
      dm.column_names.push_back(term.power == 1
                                    ? term.variable
                                    : term.variable + "^" + std::to_string(term.power));
    } else {
      if (term.power != 1) {
        throw DataError("cannot raise categorical column '" + term.variable +
                        "' to a power");
      }
      const auto& cat = std::get<CategoricalColumn>(col.data);
      if (cat.levels.size() < 2) {
        throw DataError("categorical column '" + term.variable +
                        "' has a single level");
      }
      for (std::size_t lvl = 1; lvl < cat.levels.size(); ++lvl) {
        Eigen::VectorXd x(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          x[i] = cat.codes[static_cast<std::size_t>(i)] == static_cast<int>(lvl) ? 1.0 : 0.0;
        }
        cols.push_back(std::move(x));
        dm.column_names.push_back(term.variable + ": " + cat.levels[lvl] + "/" +
                                  cat.levels[0]);
      }
    }
  }

  dm.values.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto& x = cols[c];
    if (!x.allFinite()) {
      throw DataError("design column '" + dm.column_names[c] + "' has non-finite values");
    }
    const bool is_intercept = dm.has_intercept && c == 0;
    if (!is_intercept && n > 0 && (x.array() == x[0]).all()) {
      throw DataError("design column '" + dm.column_names[c] + "' is constant");
    }
    dm.values.col(static_cast<Eigen::Index>(c)) = x;
  }
  return dm;
}

ModelFrame build_design(const FormulaAst& ast, const DataTable& table) {
  const Column& rc = table.column(ast.response);
  if (!rc.is_numeric()) {
    throw DataError("response '" + ast.response + "' is not numeric");
  }
  const auto& yv = std::get<NumericColumn>(rc.data).values;
  ModelFrame frame;
  frame.response.resize(static_cast<Eigen::Index>(yv.size()));
  for (std::size_t i = 0; i < yv.size(); ++i) {
    if (yv[i] < 0 || std::floor(yv[i]) != yv[i]) {
      throw DataError("response '" + ast.response + "' must be a nonnegative integer (row " +
                      std::to_string(i + 1) + " has " + std::to_string(yv[i]) + ")");
    }
    frame.response[static_cast<Eigen::Index>(i)] = yv[i];
  }
  frame.count = build_terms(ast.rhs, table);
  if (ast.zero_part) frame.zero = build_terms(*ast.zero_part, table);
  return frame;
}

}  // namespace countdiag
