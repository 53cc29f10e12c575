#include "feature.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ast.hpp"
#include "diag.hpp"
#include "lexer.hpp"
#include "numio.hpp"

namespace featkit {

namespace {

const std::set<std::string> kKeywords = {"feature", "begin", "end", "var", "state", "mode"};

class FeatureParser {
public:
    explicit FeatureParser(const std::string& text) : lx_(text) {}

    FeatureSpec run() {
        parse();
        return std::move(spec_);
    }

private:
    Lexer lx_;
    FeatureSpec spec_;

    Token expect(Tok kind, const char* what) {
        const Token& t = lx_.peek();
        if (t.kind != kind) {
            if (t.kind == Tok::End)
                fail_input(std::string("unexpected end of input, expected ") + what,
                           lx_.last_line(), 1);
            fail_input(std::string("expected ") + what + ", got '" + t.text + "'", t.line, t.col);
        }
        return lx_.next();
    }

    Token expect_ident(const char* what) {
        Token t = expect(Tok::Ident, what);
        if (kKeywords.count(t.text))
            fail_input("keyword '" + t.text + "' cannot be used as " + what, t.line, t.col);
        return t;
    }

    Token expect_keyword(const char* word) {
        const Token& t = lx_.peek();
        if (t.kind != Tok::Ident || t.text != word) {
            if (t.kind == Tok::End)
                fail_input(std::string("unexpected end of input, expected '") + word + "'",
                           lx_.last_line(), 1);
            fail_input(std::string("expected '") + word + "', got '" + t.text + "'", t.line,
                       t.col);
        }
        return lx_.next();
    }

    bool is_local(const std::string& n) const {
        return std::find(spec_.locals.begin(), spec_.locals.end(), n) != spec_.locals.end();
    }

    bool is_formal(const std::string& n) const {
        return std::find(spec_.formals.begin(), spec_.formals.end(), n) != spec_.formals.end();
    }

    /// Guards and capture right-hand sides: locals are excluded, everything
    /// else (model variables, formals) stays symbolic until bind time.
    AffineEnv guard_env() {
        AffineEnv env;
        env.is_term = [this](const std::string& n) { return !is_local(n); };
        env.constant_value = [](const std::string&) { return std::nullopt; };
        return env;
    }

    Rel parse_rel() {
        const Token& t = lx_.peek();
        switch (t.kind) {
            case Tok::Le: lx_.next(); return Rel::Le;
            case Tok::Lt: lx_.next(); return Rel::Lt;
            case Tok::Ge: lx_.next(); return Rel::Ge;
            case Tok::Gt: lx_.next(); return Rel::Gt;
            case Tok::EqEq: lx_.next(); return Rel::Eq;
            default:
                fail_input("expected a relation (<=, <, >=, >, ==)", t.line, t.col);
        }
    }

    Porv parse_porv() {
        // `(porv)` and `(arith) REL arith` both start with '('; try the
        // predicate reading first and fall back to arithmetic grouping.
        if (lx_.peek().kind == Tok::LParen) {
            size_t save = lx_.position();
            lx_.next();
            try {
                Porv inner = parse_porv();
                if (lx_.peek().kind == Tok::RParen) {
                    lx_.next();
                    return inner;
                }
            } catch (const Error&) {
            }
            lx_.rewind(save);
        }
        const Token& t = lx_.peek();
        if (t.kind == Tok::Ident && (t.text == "state" || t.text == "mode")) {
            lx_.next();
            if (lx_.peek().kind != Tok::EqEq)
                fail_input("expected '==' after 'state'", lx_.peek().line, lx_.peek().col);
            lx_.next();
            Token label = expect_ident("a location name");
            return Porv::state_eq(label.text);
        }
        AffineEnv env = guard_env();
        Ast lhs = parse_arith(lx_, false);
        Rel rel = parse_rel();
        Ast rhs = parse_arith(lx_, false);
        return Porv::compare(lower_affine(lhs, env), rel, lower_affine(rhs, env));
    }

    EventEdge parse_event() {
        Token at = expect(Tok::AtPlus, "'@+'");
        expect(Tok::LParen, "'('");
        EventEdge ev;
        ev.predicate.add(parse_porv());
        while (lx_.peek().kind == Tok::AndAnd) {
            lx_.next();
            ev.predicate.add(parse_porv());
        }
        expect(Tok::RParen, "')'");
        int numeric = 0, state = 0;
        for (const auto& p : ev.predicate.conjuncts) (p.is_state() ? state : numeric)++;
        if (numeric > 1 || (numeric == 1 && state > 0))
            fail_input(
                "event predicate must be either state predicates or a single numeric predicate",
                at.line, at.col);
        return ev;
    }

    CaptureExpr parse_capture_expr() {
        const Token& t = lx_.peek();
        if (t.kind == Tok::DollarIdent) {
            if (t.text != "$time")
                fail_input("unknown capture '" + t.text + "', only $time is supported", t.line,
                           t.col);
            lx_.next();
            CaptureExpr c;
            c.kind = CaptureExpr::Kind::NowTime;
            return c;
        }
        CaptureExpr c;
        c.kind = CaptureExpr::Kind::Linear;
        Ast e = parse_arith(lx_, false);
        c.expr = lower_affine(e, guard_env());
        return c;
    }

    Stage parse_stage() {
        Stage st;
        while (true) {
            if (lx_.peek().kind == Tok::AtMinus)
                fail_input("falling edges ('@-') are not supported, use '@+'", lx_.peek().line,
                           lx_.peek().col);
            if (lx_.peek().kind == Tok::AtPlus) {
                if (!st.events.empty())
                    fail_input("at most one event per stage", lx_.peek().line, lx_.peek().col);
                st.events.push_back(parse_event());
            } else {
                st.guard.add(parse_porv());
            }
            if (lx_.peek().kind == Tok::AndAnd) {
                lx_.next();
                continue;
            }
            break;
        }
        // Captures: `, name = expr` until the next delay or the implication.
        while (lx_.peek().kind == Tok::Comma) {
            lx_.next();
            Token name = expect_ident("a capture target");
            if (!is_local(name.text))
                fail_input("capture of undeclared local '" + name.text + "'", name.line,
                           name.col);
            for (const auto& s : spec_.stages)
                for (const auto& [c, _] : s.captures)
                    if (c == name.text)
                        fail_input("local '" + name.text + "' is captured more than once",
                                   name.line, name.col);
            for (const auto& [c, _] : st.captures)
                if (c == name.text)
                    fail_input("local '" + name.text + "' is captured more than once", name.line,
                               name.col);
            expect(Tok::Assign, "'='");
            st.captures.emplace_back(name.text, parse_capture_expr());
        }
        if (st.guard.is_true() && st.events.empty())
            fail_input("empty stage", lx_.peek().line, lx_.peek().col);
        return st;
    }

    DelayWindow parse_delay() {
        Token hh = expect(Tok::HashHash, "'##'");
        expect(Tok::LBracket, "'['");
        DelayWindow w;
        if (lx_.peek().kind == Tok::Dollar)
            fail_input("'$' cannot be a delay lower bound", lx_.peek().line, lx_.peek().col);
        Token lo = expect(Tok::Number, "a delay lower bound");
        w.lower = lo.num;
        expect(Tok::Colon, "':'");
        if (lx_.peek().kind == Tok::Dollar) {
            lx_.next();
        } else {
            Token hi = expect(Tok::Number, "a delay upper bound or '$'");
            w.upper = hi.num;
            if (*w.upper < w.lower)
                fail_input("empty delay window [" + lo.text + ":" + hi.text + "]", hh.line,
                           hh.col);
        }
        expect(Tok::RBracket, "']'");
        return w;
    }

    void parse() {
        expect_keyword("feature");
        Token name = expect_ident("a feature name");
        spec_.name = name.text;
        expect(Tok::LParen, "'('");
        if (lx_.peek().kind != Tok::RParen) {
            while (true) {
                Token f = expect_ident("a formal parameter");
                if (is_formal(f.text))
                    fail_input("duplicate formal '" + f.text + "'", f.line, f.col);
                spec_.formals.push_back(f.text);
                if (lx_.peek().kind == Tok::Comma) {
                    lx_.next();
                    continue;
                }
                break;
            }
        }
        expect(Tok::RParen, "')'");
        expect(Tok::Semi, "';'");
        expect_keyword("begin");

        while (lx_.peek().kind == Tok::Ident && lx_.peek().text == "var") {
            lx_.next();
            while (true) {
                Token v = expect_ident("a local name");
                if (is_local(v.text) || is_formal(v.text))
                    fail_input("duplicate declaration of '" + v.text + "'", v.line, v.col);
                spec_.locals.push_back(v.text);
                if (lx_.peek().kind == Tok::Comma) {
                    lx_.next();
                    continue;
                }
                break;
            }
            expect(Tok::Semi, "';'");
        }

        spec_.stages.push_back(parse_stage());
        while (lx_.peek().kind == Tok::HashHash) {
            DelayWindow w = parse_delay();
            spec_.stages.back().delay_to_next = w;
            spec_.stages.push_back(parse_stage());
        }

        Token arrow = expect(Tok::MapsTo, "'|->'");
        Token target = expect_ident("the feature name");
        if (target.text != spec_.name)
            fail_input("the '|->' assignment target must be the feature name '" + spec_.name +
                           "'",
                       target.line, target.col);
        expect(Tok::Assign, "'='");
        Ast compute = parse_arith(lx_, false);
        expect(Tok::Semi, "';'");
        expect_keyword("end");
        if (lx_.peek().kind != Tok::End)
            fail_input("unexpected text after 'end'", lx_.peek().line, lx_.peek().col);

        AffineEnv env;
        env.is_term = [this](const std::string& n) { return is_local(n) || is_formal(n); };
        env.constant_value = [](const std::string&) { return std::nullopt; };
        try {
            spec_.compute = lower_affine(compute, env);
        } catch (const Error& e) {
            fail_input(
                "compute expression may reference only feature locals and formals (" +
                    std::string(e.what()) + ")",
                e.line() ? e.line() : arrow.line, e.column());
        }
        for (const auto& t : spec_.compute.terms) {
            if (!is_local(t.name)) continue;
            bool captured = false;
            for (const auto& s : spec_.stages)
                for (const auto& [c, _] : s.captures) captured = captured || c == t.name;
            if (!captured)
                fail_input("local '" + t.name + "' is used in compute but never captured",
                           arrow.line, arrow.col);
        }
    }
};

void fold_formals(LinExpr& e, const ParamMap& values) {
    for (const auto& [name, v] : values) e.substitute(name, v);
}

void fold_formals(Condition& c, const ParamMap& values) {
    for (auto& p : c.conjuncts) {
        if (p.is_state()) continue;
        fold_formals(p.lhs, values);
        fold_formals(p.rhs, values);
    }
}

}  // namespace

FeatureSpec parse_feature(const std::string& text) {
    return FeatureParser(text).run();
}

BoundFeature bind_feature_params(const FeatureSpec& spec, const ParamMap& values) {
    for (const auto& [name, _] : values) {
        if (std::find(spec.formals.begin(), spec.formals.end(), name) == spec.formals.end())
            fail_input("unknown formal '" + name + "' in binding for feature " + spec.name);
    }
    for (const auto& f : spec.formals) {
        if (!values.count(f))
            fail_input("missing binding for formal '" + f + "' of feature " + spec.name);
    }

    BoundFeature bf;
    bf.spec = spec;
    bf.bindings = values;
    bf.stages = spec.stages;
    bf.compute = spec.compute;
    for (auto& st : bf.stages) {
        fold_formals(st.guard, values);
        for (auto& ev : st.events) fold_formals(ev.predicate, values);
        for (auto& [_, cap] : st.captures)
            if (cap.kind == CaptureExpr::Kind::Linear) fold_formals(cap.expr, values);
    }
    fold_formals(bf.compute, values);
    return bf;
}

namespace {

void print_expr(std::ostream& os, const LinExpr& e) {
    bool first = true;
    for (const auto& t : e.terms) {
        if (!first) os << " + ";
        first = false;
        if (t.coeff == 1.0)
            os << t.name;
        else if (t.coeff == -1.0)
            os << "-" << t.name;
        else
            os << format_double(t.coeff) << "*" << t.name;
    }
    if (e.constant != 0.0 || first) {
        if (!first) os << " + ";
        os << format_double(e.constant);
    }
}

void print_porv(std::ostream& os, const Porv& p) {
    if (p.is_state()) {
        os << "state==" << p.state_label;
        return;
    }
    print_expr(os, p.lhs);
    os << rel_text(p.rel);
    print_expr(os, p.rhs);
}

}  // namespace

std::string print_feature(const FeatureSpec& f) {
    std::ostringstream os;
    os << "feature " << f.name << "(";
    for (size_t i = 0; i < f.formals.size(); ++i) {
        if (i) os << ",";
        os << f.formals[i];
    }
    os << ");\nbegin\n";
    if (!f.locals.empty()) {
        os << "  var ";
        for (size_t i = 0; i < f.locals.size(); ++i) {
            if (i) os << ", ";
            os << f.locals[i];
        }
        os << ";\n";
    }
    for (size_t si = 0; si < f.stages.size(); ++si) {
        const Stage& st = f.stages[si];
        os << "  ";
        if (si) {
            const auto& w = *f.stages[si - 1].delay_to_next;
            os << "##[" << format_double(w.lower) << ":"
               << (w.upper ? format_double(*w.upper) : "$") << "] ";
        }
        bool first = true;
        for (const auto& ev : st.events) {
            os << "@+(";
            for (size_t i = 0; i < ev.predicate.conjuncts.size(); ++i) {
                if (i) os << " && ";
                print_porv(os, ev.predicate.conjuncts[i]);
            }
            os << ")";
            first = false;
        }
        for (const auto& p : st.guard.conjuncts) {
            if (!first) os << " && ";
            first = false;
            os << "(";
            print_porv(os, p);
            os << ")";
        }
        for (const auto& [name, cap] : st.captures) {
            os << ", " << name << "=";
            if (cap.kind == CaptureExpr::Kind::NowTime)
                os << "$time";
            else
                print_expr(os, cap.expr);
        }
        os << "\n";
    }
    os << "    |-> " << f.name << " = ";
    print_expr(os, f.compute);
    os << ";\nend\n";
    return os.str();
}

}  // namespace featkit
