#include "haslac.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "ast.hpp"
#include "diag.hpp"
#include "lexer.hpp"
#include "numio.hpp"

namespace featkit {

namespace {

const std::set<std::string> kKeywords = {
    "module", "endmodule", "output",   "parameter", "mode",        "urgent", "begin",
    "end",    "ddt",       "property", "inv",       "trans",       "initial", "set",
    "state",  "endproperty"};

bool is_keyword(const std::string& s) { return kKeywords.count(s) > 0; }

// One conjunct of a property/initial condition before interpretation.
struct RawConjunct {
    bool is_mode_atom = false;   // `mode == NAME` / `state == NAME`
    bool mode_primed = false;    // `mode' == NAME`
    std::string mode_label;
    bool used_state_keyword = false;  // spelled with `state` rather than `mode`
    Ast lhs;
    Rel rel = Rel::Le;
    Ast rhs;
    int line = 1, col = 1;
};

struct RawProperty {
    bool is_trans = false;
    std::string name;
    std::vector<RawConjunct> antecedent;
    std::vector<RawConjunct> consequent;
    int line = 1, col = 1;
};

struct RawMode {
    std::string name;
    bool urgent = false;
    std::vector<std::pair<std::string, Ast>> flows;  // var -> rhs
    std::vector<int> flow_lines;
    int line = 1, col = 1;
};

class HaslacParser {
public:
    explicit HaslacParser(const HaslacSource& src) : lx_(src.text) {}

    HybridAutomaton run() {
        parse_module();
        return lower();
    }

private:
    Lexer lx_;
    HybridAutomaton ha_;
    std::vector<RawMode> modes_;
    std::vector<RawProperty> props_;
    std::vector<RawConjunct> initial_;
    bool saw_initial_ = false;
    int initial_line_ = 1;
    std::vector<std::pair<std::string, Ast>> raw_params_;

    [[noreturn]] void err(const std::string& msg, const Token& at) {
        fail_input(msg, at.line, at.col);
    }

    Token expect(Tok kind, const char* what) {
        const Token& t = lx_.peek();
        if (t.kind != kind) {
            if (t.kind == Tok::End)
                fail_input(std::string("unexpected end of input, expected ") + what,
                           lx_.last_line(), 1);
            err(std::string("expected ") + what + ", got '" + t.text + "'", t);
        }
        return lx_.next();
    }

    Token expect_ident(const char* what) {
        Token t = expect(Tok::Ident, what);
        if (is_keyword(t.text))
            fail_input("keyword '" + t.text + "' cannot be used as " + what, t.line, t.col);
        return t;
    }

    bool eat_ident(const char* word) {
        const Token& t = lx_.peek();
        if (t.kind == Tok::Ident && t.text == word) {
            lx_.next();
            return true;
        }
        return false;
    }

    Token expect_keyword(const char* word) {
        const Token& t = lx_.peek();
        if (t.kind != Tok::Ident || t.text != word) {
            if (t.kind == Tok::End)
                fail_input(std::string("unexpected end of input, expected '") + word + "'",
                           lx_.last_line(), 1);
            err(std::string("expected '") + word + "', got '" + t.text + "'", t);
        }
        return lx_.next();
    }

    Rel parse_rel() {
        const Token& t = lx_.peek();
        switch (t.kind) {
            case Tok::Le: lx_.next(); return Rel::Le;
            case Tok::Lt: lx_.next(); return Rel::Lt;
            case Tok::Ge: lx_.next(); return Rel::Ge;
            case Tok::Gt: lx_.next(); return Rel::Gt;
            case Tok::EqEq: lx_.next(); return Rel::Eq;
            default: err("expected a relation (<=, <, >=, >, ==)", t);
        }
    }

    RawConjunct parse_conjunct(bool allow_primes) {
        if (lx_.peek().kind == Tok::LParen) {
            size_t save = lx_.position();
            lx_.next();
            try {
                RawConjunct inner = parse_conjunct(allow_primes);
                if (lx_.peek().kind == Tok::RParen) {
                    lx_.next();
                    return inner;
                }
            } catch (const Error&) {
            }
            lx_.rewind(save);
        }
        RawConjunct rc;
        const Token& t = lx_.peek();
        rc.line = t.line;
        rc.col = t.col;
        if (t.kind == Tok::Ident && (t.text == "mode" || t.text == "state")) {
            rc.used_state_keyword = t.text == "state";
            Token kw = lx_.next();
            if (lx_.peek().kind == Tok::Prime) {
                if (!allow_primes) err("primed mode selector not allowed here", kw);
                lx_.next();
                rc.mode_primed = true;
            }
            if (lx_.peek().kind != Tok::EqEq)
                err("expected '==' after '" + kw.text + "'", lx_.peek());
            lx_.next();
            Token label = expect_ident("a location name");
            rc.is_mode_atom = true;
            rc.mode_label = label.text;
            return rc;
        }
        rc.lhs = parse_arith(lx_, allow_primes);
        rc.rel = parse_rel();
        rc.rhs = parse_arith(lx_, allow_primes);
        return rc;
    }

    std::vector<RawConjunct> parse_condition(bool allow_primes) {
        std::vector<RawConjunct> out;
        out.push_back(parse_conjunct(allow_primes));
        while (lx_.peek().kind == Tok::AndAnd) {
            lx_.next();
            out.push_back(parse_conjunct(allow_primes));
        }
        return out;
    }

    void parse_module() {
        expect_keyword("module");
        Token name = expect_ident("a module name");
        ha_.name = name.text;
        expect(Tok::LParen, "'('");
        while (true) {
            Token v = expect_ident("a variable name");
            if (std::find(ha_.variables.begin(), ha_.variables.end(), v.text) !=
                ha_.variables.end())
                fail_input("duplicate variable '" + v.text + "'", v.line, v.col);
            ha_.variables.push_back(v.text);
            if (lx_.peek().kind == Tok::Comma) {
                lx_.next();
                continue;
            }
            break;
        }
        expect(Tok::RParen, "')'");

        while (true) {
            const Token& t = lx_.peek();
            if (t.kind == Tok::End)
                fail_input("unexpected end of input, expected 'endmodule'", lx_.last_line(), 1);
            if (t.kind != Tok::Ident) err("expected a declaration", t);
            if (t.text == "endmodule") {
                lx_.next();
                break;
            }
            if (t.text == "output") {
                lx_.next();
                // Accepted for source compatibility; carries no semantics here.
                expect_ident("a variable name");
                while (lx_.peek().kind == Tok::Comma) {
                    lx_.next();
                    expect_ident("a variable name");
                }
                expect(Tok::Semi, "';'");
                continue;
            }
            if (t.text == "parameter") {
                lx_.next();
                while (true) {
                    Token pn = expect_ident("a parameter name");
                    expect(Tok::Assign, "'='");
                    Ast value = parse_arith(lx_, false);
                    raw_params_.emplace_back(pn.text, std::move(value));
                    if (lx_.peek().kind == Tok::Comma) {
                        lx_.next();
                        continue;
                    }
                    break;
                }
                expect(Tok::Semi, "';'");
                continue;
            }
            if (t.text == "mode" || t.text == "urgent") {
                parse_mode();
                continue;
            }
            if (t.text == "property") {
                parse_property();
                continue;
            }
            if (t.text == "initial") {
                parse_initial();
                continue;
            }
            err("unexpected '" + t.text + "'", t);
        }
        if (lx_.peek().kind != Tok::End)
            err("unexpected text after 'endmodule'", lx_.peek());
    }

    void parse_mode() {
        RawMode m;
        if (eat_ident("urgent")) m.urgent = true;
        Token kw = expect_keyword("mode");
        m.line = kw.line;
        m.col = kw.col;
        Token name = expect_ident("a mode name");
        m.name = name.text;
        expect_keyword("begin");
        while (lx_.peek().kind == Tok::Ident && lx_.peek().text == "ddt") {
            lx_.next();
            Token var = expect_ident("a variable name");
            expect(Tok::Assign, "'='");
            Ast rhs = parse_arith(lx_, false);
            expect(Tok::Semi, "';'");
            m.flows.emplace_back(var.text, std::move(rhs));
            m.flow_lines.push_back(var.line);
        }
        expect_keyword("end");
        modes_.push_back(std::move(m));
    }

    void parse_property() {
        Token kw = expect_keyword("property");
        RawProperty p;
        p.line = kw.line;
        p.col = kw.col;
        if (eat_ident("inv")) {
            p.is_trans = false;
        } else if (eat_ident("trans")) {
            p.is_trans = true;
        } else {
            err("expected 'inv' or 'trans' after 'property'", lx_.peek());
        }
        Token name = expect_ident("a property name");
        p.name = name.text;
        p.antecedent = parse_condition(p.is_trans);
        expect(Tok::Implies, "'|=>'");
        p.consequent = parse_condition(p.is_trans);
        if (lx_.peek().kind == Tok::Semi) lx_.next();
        expect_keyword("endproperty");
        props_.push_back(std::move(p));
    }

    void parse_initial() {
        Token kw = expect_keyword("initial");
        if (saw_initial_) err("duplicate initial block", kw);
        saw_initial_ = true;
        initial_line_ = kw.line;
        expect_keyword("begin");
        expect_keyword("set");
        expect_keyword("begin");
        while (!(lx_.peek().kind == Tok::Ident && lx_.peek().text == "end")) {
            if (lx_.peek().kind == Tok::End)
                fail_input("unexpected end of input in initial block", lx_.last_line(), 1);
            initial_.push_back(parse_conjunct(false));
            expect(Tok::Semi, "';'");
        }
        expect_keyword("end");
        expect_keyword("end");
    }

    // ------------------------------------------------------------------
    // Lowering
    // ------------------------------------------------------------------

    AffineEnv model_env() const {
        AffineEnv env;
        env.is_term = [this](const std::string& n) { return ha_.has_variable(n); };
        env.constant_value = [this](const std::string& n) -> std::optional<double> {
            if (const double* v = ha_.parameters.find(n)) return *v;
            return std::nullopt;
        };
        return env;
    }

    Porv lower_conjunct(const RawConjunct& rc, const AffineEnv& env) const {
        if (rc.is_mode_atom) return Porv::state_eq(rc.mode_label);
        return Porv::compare(lower_affine(rc.lhs, env), rc.rel, lower_affine(rc.rhs, env));
    }

    HybridAutomaton lower() {
        // Parameters fold to numbers; earlier parameters may appear in later
        // right-hand sides.
        for (auto& [pn, ast] : raw_params_) {
            if (ha_.parameters.contains(pn))
                fail_input("duplicate parameter '" + pn + "'", ast.line, ast.col);
            if (ha_.has_variable(pn))
                fail_input("parameter '" + pn + "' collides with a variable", ast.line, ast.col);
            AffineEnv env;
            env.constant_value = [this](const std::string& n) -> std::optional<double> {
                if (const double* v = ha_.parameters.find(n)) return *v;
                return std::nullopt;
            };
            LinExpr value = lower_affine(ast, env);
            if (!value.is_constant())
                fail_input("parameter '" + pn + "' must be a constant", ast.line, ast.col);
            ha_.parameters.set(pn, value.constant);
        }

        AffineEnv env = model_env();

        // Modes become locations; every declared variable needs an ODE.
        for (const auto& m : modes_) {
            if (ha_.location_index(m.name) >= 0)
                fail_input("duplicate mode '" + m.name + "'", m.line, m.col);
            Location loc;
            loc.name = m.name;
            loc.urgent = m.urgent;
            for (size_t i = 0; i < m.flows.size(); ++i) {
                const auto& [var, rhs] = m.flows[i];
                if (!ha_.has_variable(var))
                    fail_input("ddt for undeclared variable '" + var + "'", m.flow_lines[i], 1);
                if (loc.flow.contains(var))
                    fail_input("duplicate ddt for '" + var + "' in mode " + m.name,
                               m.flow_lines[i], 1);
                loc.flow.set(var, lower_affine(rhs, env));
            }
            for (const auto& v : ha_.variables) {
                if (!loc.flow.contains(v))
                    fail_input("mode '" + m.name + "' has no ODE for variable '" + v + "'",
                               m.line, m.col);
            }
            ha_.locations.push_back(std::move(loc));
        }
        if (ha_.locations.empty()) fail_input("module declares no mode", 1, 1);

        for (const auto& p : props_) {
            if (p.is_trans)
                lower_trans_property(p, env);
            else
                lower_inv_property(p, env);
        }

        lower_initial(env);
        return std::move(ha_);
    }

    void lower_inv_property(const RawProperty& p, const AffineEnv& env) {
        if (p.antecedent.size() != 1 || !p.antecedent[0].is_mode_atom ||
            p.antecedent[0].mode_primed)
            fail_input("invariant property antecedent must be a single 'mode==NAME'", p.line,
                       p.col);
        const std::string& loc_name = p.antecedent[0].mode_label;
        int li = ha_.location_index(loc_name);
        if (li < 0)
            fail_input("invariant property references undeclared mode '" + loc_name + "'",
                       p.line, p.col);
        for (const auto& rc : p.consequent) {
            if (rc.is_mode_atom)
                fail_input("mode predicate not allowed in an invariant consequent", rc.line,
                           rc.col);
            ha_.locations[li].invariant.add(lower_conjunct(rc, env));
        }
    }

    void lower_trans_property(const RawProperty& p, const AffineEnv& env) {
        Transition tr;
        bool have_source = false, have_target = false;
        for (const auto& rc : p.antecedent) {
            if (rc.is_mode_atom && !rc.mode_primed) {
                if (rc.used_state_keyword) {
                    tr.guard.add(Porv::state_eq(rc.mode_label));
                    continue;
                }
                if (have_source)
                    fail_input("duplicate source selector in transition property", rc.line,
                               rc.col);
                have_source = true;
                tr.source = rc.mode_label;
                continue;
            }
            if (rc.is_mode_atom && rc.mode_primed) {
                if (have_target)
                    fail_input("duplicate target selector in transition property", rc.line,
                               rc.col);
                have_target = true;
                tr.target = rc.mode_label;
                continue;
            }
            // Remaining unprimed conjuncts form the guard; primed arithmetic
            // belongs in the consequent.
            Porv porv = Porv::compare(lower_affine(rc.lhs, env), rc.rel,
                                      lower_affine(rc.rhs, env));
            tr.guard.add(std::move(porv));
        }
        if (!have_source || !have_target)
            fail_input("transition property needs 'mode==A && mode'==B' in its antecedent",
                       p.line, p.col);
        if (ha_.location_index(tr.source) < 0)
            fail_input("transition property references undeclared mode '" + tr.source + "'",
                       p.line, p.col);
        if (ha_.location_index(tr.target) < 0)
            fail_input("transition property references undeclared mode '" + tr.target + "'",
                       p.line, p.col);

        for (const auto& rc : p.consequent) {
            if (rc.is_mode_atom)
                fail_input("mode predicate not allowed in a transition consequent", rc.line,
                           rc.col);
            if (rc.rel != Rel::Eq || rc.lhs.kind != Ast::Kind::Name || !rc.lhs.primed)
                fail_input("transition consequent must be a conjunction of \"x'==expr\" resets",
                           rc.line, rc.col);
            const std::string& var = rc.lhs.name;
            if (!ha_.has_variable(var))
                fail_input("reset of undeclared variable '" + var + "'", rc.line, rc.col);
            if (tr.reset.contains(var))
                fail_input("duplicate reset for '" + var + "'", rc.line, rc.col);
            LinExpr rhs = lower_affine(rc.rhs, env);
            if (rhs.is_single_variable() && rhs.terms[0].name == var) continue;  // identity
            tr.reset.set(var, std::move(rhs));
        }
        ha_.transitions.push_back(std::move(tr));
    }

    void lower_initial(const AffineEnv& env) {
        bool have_loc = false;
        for (const auto& rc : initial_) {
            if (rc.is_mode_atom) {
                if (rc.mode_primed)
                    fail_input("primed mode selector in initial block", rc.line, rc.col);
                if (have_loc)
                    fail_input("duplicate mode selector in initial block", rc.line, rc.col);
                have_loc = true;
                if (ha_.location_index(rc.mode_label) < 0)
                    fail_input("initial block references undeclared mode '" + rc.mode_label + "'",
                               rc.line, rc.col);
                ha_.initial_location = rc.mode_label;
                continue;
            }
            ha_.initial.add(lower_conjunct(rc, env));
        }
        if (!have_loc) ha_.initial_location = ha_.locations.front().name;
    }
};

// ----------------------------------------------------------------------
// Printing
// ----------------------------------------------------------------------

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

void print_porv(std::ostream& os, const Porv& p, bool selector_keyword) {
    if (p.is_state()) {
        os << (selector_keyword ? "mode" : "state") << "==" << p.state_label;
        return;
    }
    print_expr(os, p.lhs);
    os << rel_text(p.rel);
    print_expr(os, p.rhs);
}

void print_condition(std::ostream& os, const Condition& c) {
    for (size_t i = 0; i < c.conjuncts.size(); ++i) {
        if (i) os << " && ";
        print_porv(os, c.conjuncts[i], false);
    }
}

}  // namespace

HybridAutomaton parse_haslac(const HaslacSource& src) {
    return HaslacParser(src).run();
}

std::string print_haslac(const HybridAutomaton& ha) {
    std::ostringstream os;
    os << "module " << ha.name << "(";
    for (size_t i = 0; i < ha.variables.size(); ++i) {
        if (i) os << ",";
        os << ha.variables[i];
    }
    os << ")\n";
    os << "    output ";
    for (size_t i = 0; i < ha.variables.size(); ++i) {
        if (i) os << ",";
        os << ha.variables[i];
    }
    os << ";\n";
    if (!ha.parameters.empty()) {
        os << "    parameter\n";
        size_t i = 0;
        for (const auto& [pn, pv] : ha.parameters) {
            os << "        " << pn << " = " << format_double(pv);
            os << (++i == ha.parameters.size() ? ";\n" : ",\n");
        }
    }
    for (const auto& loc : ha.locations) {
        os << "    " << (loc.urgent ? "urgent mode " : "mode ") << loc.name << "\n";
        os << "    begin\n";
        for (const auto& v : ha.variables) {
            const LinExpr* rhs = loc.flow.find(v);
            if (!rhs) continue;
            os << "        ddt " << v << " = ";
            print_expr(os, *rhs);
            os << ";\n";
        }
        os << "    end\n";
    }
    for (const auto& loc : ha.locations) {
        if (loc.invariant.is_true()) continue;
        os << "    property inv " << loc.name << "\n";
        os << "        mode==" << loc.name << " |=> ";
        print_condition(os, loc.invariant);
        os << ";\n    endproperty\n";
    }
    std::map<std::string, int> name_uses;
    for (const auto& tr : ha.transitions) {
        std::string base = tr.source + "_" + tr.target;
        int n = ++name_uses[base];
        std::string pname = n == 1 ? base : base + "_" + std::to_string(n);
        os << "    property trans " << pname << "\n";
        os << "        mode==" << tr.source << " && mode'==" << tr.target;
        for (const auto& p : tr.guard.conjuncts) {
            os << " && ";
            if (p.is_state())
                os << "state==" << p.state_label;
            else
                print_porv(os, p, false);
        }
        os << " |=> ";
        if (tr.reset.empty()) {
            for (size_t i = 0; i < ha.variables.size(); ++i) {
                if (i) os << " && ";
                os << ha.variables[i] << "'==" << ha.variables[i];
            }
        } else {
            bool first = true;
            for (const auto& v : ha.variables) {
                const LinExpr* rhs = tr.reset.find(v);
                if (!rhs) continue;
                if (!first) os << " && ";
                first = false;
                os << v << "'==";
                print_expr(os, *rhs);
            }
        }
        os << ";\n    endproperty\n";
    }
    os << "    initial begin\n        set begin\n";
    os << "            mode == " << ha.initial_location << ";\n";
    for (const auto& p : ha.initial.conjuncts) {
        os << "            ";
        print_porv(os, p, false);
        os << ";\n";
    }
    os << "        end\n    end\n";
    os << "endmodule\n";
    return os.str();
}

}  // namespace featkit
