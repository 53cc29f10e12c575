#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "expr.hpp"
#include "lexer.hpp"

namespace featkit {

/// Raw arithmetic expression tree as written in the source; lowered to an
/// affine LinExpr once the name environment (variables vs. constants) is
/// known.
struct Ast {
    enum class Kind { Num, Name, Add, Sub, Mul, Div, Neg };

    Kind kind = Kind::Num;
    double num = 0.0;
    std::string name;
    bool primed = false;
    std::unique_ptr<Ast> a, b;
    int line = 1, col = 1;
};

/// Parses `term (('+'|'-') term)*` with the usual precedence. Primed names
/// (`x'`) are accepted only when `allow_primes` is set.
Ast parse_arith(Lexer& lx, bool allow_primes);

/// Name environment for lowering. `constant_value` answers for names that
/// fold to numbers (model parameters); `is_term` answers for names that stay
/// symbolic (variables, feature formals and locals).
struct AffineEnv {
    std::function<std::optional<double>(const std::string&)> constant_value;
    std::function<bool(const std::string&)> is_term;
};

/// Lowers the tree to constant + sum(coeff*name). Products must have at
/// least one side that folds to a number; anything else is rejected as
/// non-affine with the offending position. Primed names are always rejected
/// here (resets handle primes structurally before lowering).
LinExpr lower_affine(const Ast& ast, const AffineEnv& env);

}  // namespace featkit
