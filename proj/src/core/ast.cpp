#include "ast.hpp"

#include "diag.hpp"

namespace featkit {

namespace {

Ast make_node(Ast::Kind k, int line, int col) {
    Ast n;
    n.kind = k;
    n.line = line;
    n.col = col;
    return n;
}

Ast parse_factor(Lexer& lx, bool allow_primes) {
    const Token& t = lx.peek();
    switch (t.kind) {
        case Tok::Number: {
            Token tok = lx.next();
            Ast n = make_node(Ast::Kind::Num, tok.line, tok.col);
            n.num = tok.num;
            return n;
        }
        case Tok::Ident: {
            Token tok = lx.next();
            Ast n = make_node(Ast::Kind::Name, tok.line, tok.col);
            n.name = tok.text;
            if (lx.peek().kind == Tok::Prime) {
                if (!allow_primes)
                    fail_input("primed name '" + tok.text + "'' not allowed here", tok.line,
                               tok.col);
                lx.next();
                n.primed = true;
            }
            return n;
        }
        case Tok::LParen: {
            lx.next();
            Ast inner = parse_arith(lx, allow_primes);
            if (lx.peek().kind != Tok::RParen)
                fail_input("expected ')'", lx.peek().line, lx.peek().col);
            lx.next();
            return inner;
        }
        case Tok::Minus: {
            Token tok = lx.next();
            Ast n = make_node(Ast::Kind::Neg, tok.line, tok.col);
            n.a = std::make_unique<Ast>(parse_factor(lx, allow_primes));
            return n;
        }
        case Tok::Plus: {
            lx.next();
            return parse_factor(lx, allow_primes);
        }
        default:
            fail_input("expected an expression, got '" + t.text + "'", t.line, t.col);
    }
}

Ast parse_term(Lexer& lx, bool allow_primes) {
    Ast left = parse_factor(lx, allow_primes);
    while (lx.peek().kind == Tok::Star || lx.peek().kind == Tok::Slash) {
        Token op = lx.next();
        Ast n = make_node(op.kind == Tok::Star ? Ast::Kind::Mul : Ast::Kind::Div, op.line, op.col);
        n.a = std::make_unique<Ast>(std::move(left));
        n.b = std::make_unique<Ast>(parse_factor(lx, allow_primes));
        left = std::move(n);
    }
    return left;
}

}  // namespace

Ast parse_arith(Lexer& lx, bool allow_primes) {
    Ast left = parse_term(lx, allow_primes);
    while (lx.peek().kind == Tok::Plus || lx.peek().kind == Tok::Minus) {
        Token op = lx.next();
        Ast n = make_node(op.kind == Tok::Plus ? Ast::Kind::Add : Ast::Kind::Sub, op.line, op.col);
        n.a = std::make_unique<Ast>(std::move(left));
        n.b = std::make_unique<Ast>(parse_term(lx, allow_primes));
        left = std::move(n);
    }
    return left;
}

LinExpr lower_affine(const Ast& ast, const AffineEnv& env) {
    switch (ast.kind) {
        case Ast::Kind::Num:
            return LinExpr::constant_of(ast.num);
        case Ast::Kind::Name: {
            if (ast.primed)
                fail_input("primed name '" + ast.name + "'' not allowed in this expression",
                           ast.line, ast.col);
            if (env.is_term && env.is_term(ast.name)) return LinExpr::variable(ast.name);
            if (env.constant_value) {
                if (auto v = env.constant_value(ast.name)) return LinExpr::constant_of(*v);
            }
            fail_input("undeclared name '" + ast.name + "'", ast.line, ast.col);
        }
        case Ast::Kind::Add: {
            LinExpr l = lower_affine(*ast.a, env);
            l += lower_affine(*ast.b, env);
            return l;
        }
        case Ast::Kind::Sub: {
            LinExpr l = lower_affine(*ast.a, env);
            l -= lower_affine(*ast.b, env);
            return l;
        }
        case Ast::Kind::Mul: {
            LinExpr l = lower_affine(*ast.a, env);
            LinExpr r = lower_affine(*ast.b, env);
            if (!l.is_constant() && !r.is_constant())
                fail_input("non-affine expression: product of two non-constant factors", ast.line,
                           ast.col);
            if (l.is_constant()) {
                r.scale(l.constant);
                return r;
            }
            l.scale(r.constant);
            return l;
        }
        case Ast::Kind::Div: {
            LinExpr l = lower_affine(*ast.a, env);
            LinExpr r = lower_affine(*ast.b, env);
            if (!r.is_constant())
                fail_input("non-affine expression: division by a non-constant", ast.line, ast.col);
            if (r.constant == 0.0) fail_input("division by zero", ast.line, ast.col);
            l.scale(1.0 / r.constant);
            return l;
        }
        case Ast::Kind::Neg: {
            LinExpr l = lower_affine(*ast.a, env);
            l.scale(-1.0);
            return l;
        }
    }
    fail_input("malformed expression", ast.line, ast.col);
}

}  // namespace featkit
