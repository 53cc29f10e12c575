#include "drh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lexer.hpp"
#include "numio.hpp"

namespace featkit {

using nlohmann::json;

namespace {

void print_drh_expr(std::ostream& os, const LinExpr& e, const ParamMap& params) {
    bool first = true;
    for (const auto& t : e.terms) {
        auto pit = params.find(t.name);
        if (!first) os << " + ";
        first = false;
        if (pit != params.end()) {
            os << format_double(t.coeff * pit->second);
            continue;
        }
        if (t.coeff == 1.0)
            os << t.name;
        else
            os << format_double(t.coeff) << " * " << t.name;
    }
    if (e.constant != 0.0 || first) {
        if (!first) os << " + ";
        os << format_double(e.constant);
    }
}

std::string drh_rel(Rel r) {
    switch (r) {
        case Rel::Le: return "<=";
        case Rel::Lt: return "<";
        case Rel::Ge: return ">=";
        case Rel::Gt: return ">";
        case Rel::Eq: return "=";
    }
    return "<=";
}

void print_atom(std::ostream& os, const Porv& p, const ParamMap& params) {
    os << "(";
    print_drh_expr(os, p.lhs, params);
    os << " " << drh_rel(p.rel) << " ";
    print_drh_expr(os, p.rhs, params);
    os << ")";
}

void print_cond(std::ostream& os, const Condition& c, const ParamMap& params) {
    std::vector<const Porv*> numeric;
    for (const auto& p : c.conjuncts)
        if (!p.is_state()) numeric.push_back(&p);
    if (numeric.empty()) {
        os << "(0 <= 0)";
        return;
    }
    if (numeric.size() == 1) {
        print_atom(os, *numeric[0], params);
        return;
    }
    os << "(and";
    for (const Porv* p : numeric) {
        os << " ";
        print_atom(os, *p, params);
    }
    os << ")";
}

}  // namespace

std::string emit_drh(const ProductModel& pm, const CompiledModel& cm,
                     const std::vector<Interval>& var_ranges, double a, double b,
                     double horizon) {
    if (a > b) fail_input("empty goal interval: lower bound exceeds upper bound");
    const HybridAutomaton& ha = pm.automaton;
    ParamMap params = ha.param_map();
    if (ha.has_variable("time"))
        fail_input("variable named 'time' cannot be emitted (reserved in the target format)");

    bool any_urgent = false;
    for (const auto& l : ha.locations) any_urgent = any_urgent || l.urgent;
    const std::string uclk = "uclk";
    if (any_urgent && ha.has_variable(uclk))
        fail_input("variable name 'uclk' is reserved for urgent-location encoding");

    std::ostringstream os;

    // Variable ranges: hull widened by 10%, covering the goal interval and
    // the register sentinel.
    for (size_t vi = 0; vi < cm.vars.size(); ++vi) {
        Interval r = var_ranges[vi];
        if (!(std::isfinite(r.lo) && std::isfinite(r.hi)))
            fail_input("variable '" + cm.vars[vi] + "' has no finite declared range");
        bool is_register = static_cast<int>(vi) != cm.clock_idx &&
                           static_cast<int>(vi) != cm.time_idx &&
                           std::find(pm.monitor_vars.begin(), pm.monitor_vars.end(),
                                     cm.vars[vi]) != pm.monitor_vars.end();
        if (is_register) {
            r.lo = std::min(r.lo, pm.feat_sentinel);
            if (static_cast<int>(vi) == cm.feat_idx) {
                r.lo = std::min(r.lo, a);
                r.hi = std::max(r.hi, b);
            }
        }
        double pad = 0.1 * std::max(1e-9, r.width()) + 1e-9;
        os << "[" << format_double(r.lo - pad) << ", " << format_double(r.hi + pad) << "] "
           << cm.vars[vi] << ";\n";
    }
    if (any_urgent) os << "[0, " << format_double(horizon) << "] " << uclk << ";\n";
    os << "[0, " << format_double(horizon) << "] time;\n\n";

    // Mode blocks, numbered in location order.
    for (size_t li = 0; li < ha.locations.size(); ++li) {
        const Location& loc = ha.locations[li];
        os << "{ mode " << li + 1 << ";\n";
        os << "invt:\n";
        for (const auto& p : loc.invariant.conjuncts) {
            if (p.is_state()) continue;
            print_atom(os, p, params);
            os << ";\n";
        }
        if (any_urgent && loc.urgent) os << "(" << uclk << " <= 0);\n";
        os << "flow:\n";
        for (const auto& v : ha.variables) {
            const LinExpr* rhs = loc.flow.find(v);
            if (!rhs) continue;
            os << "d/dt[" << v << "] = ";
            print_drh_expr(os, *rhs, params);
            os << ";\n";
        }
        if (any_urgent) os << "d/dt[" << uclk << "] = 1;\n";
        os << "jump:\n";
        for (const auto& tr : ha.transitions) {
            if (tr.source != loc.name) continue;
            int target = ha.location_index(tr.target);
            print_cond(os, tr.guard, params);
            os << " ==> @" << target + 1 << " (and";
            for (const auto& v : ha.variables) {
                os << " (" << v << "' = ";
                const LinExpr* rhs = tr.reset.find(v);
                if (rhs)
                    print_drh_expr(os, *rhs, params);
                else
                    os << v;
                os << ")";
            }
            if (any_urgent) {
                bool target_urgent = ha.locations[target].urgent;
                os << " (" << uclk << "' = " << (target_urgent ? "0" : uclk) << ")";
            }
            os << ");\n";
        }
        os << "}\n";
    }

    // Initial clause.
    int init_idx = ha.location_index(ha.initial_location);
    os << "init:\n@" << init_idx + 1 << " ";
    Condition init = ha.initial;
    if (any_urgent)
        init.add(Porv::compare(LinExpr::variable(uclk), Rel::Eq, LinExpr::constant_of(0.0)));
    print_cond(os, init, params);
    os << ";\n";

    // Goal: the feature value lands in [a, b] at an accept location.
    os << "goal:\n";
    for (const auto& acc : pm.accept_locations) {
        int idx = ha.location_index(acc);
        os << "@" << idx + 1 << " (and (" << pm.feat_var << " >= " << format_double(a) << ") ("
           << pm.feat_var << " <= " << format_double(b) << "));\n";
    }
    return os.str();
}

std::string emit_drh(const ProductModel& pm, double a, double b, const SimSettings& sim) {
    auto diags = validate(pm.automaton);
    if (!diags.empty()) fail_input("model does not validate: " + join_diagnostics(diags));
    CompiledModel cm = compile_model(pm);
    ReachSets rs = flowpipe(cm, sim);
    IBox init = initial_box(cm);
    std::vector<Interval> ranges(init.begin(), init.end());
    for (const auto& per_loc : rs.hulls) {
        for (const auto& slot : per_loc) {
            if (!slot) continue;
            for (size_t vi = 0; vi < ranges.size(); ++vi)
                ranges[vi] = ranges[vi].hull((*slot)[vi]);
        }
    }
    return emit_drh(pm, cm, ranges, a, b, sim.horizon);
}

// ============================================================================
// Grammar check
// ============================================================================

namespace {

/// Recursive-descent recognizer, deliberately independent of the emitter.
class DrhChecker {
public:
    explicit DrhChecker(const std::string& text) : lx_(text) {}

    std::vector<ParseDiagnostic> run() {
        try {
            parse();
        } catch (const Error& e) {
            diags_.push_back({e.line(), e.column(), e.what()});
        }
        return diags_;
    }

private:
    Lexer lx_;
    std::vector<ParseDiagnostic> diags_;
    std::set<std::string> vars_;
    std::set<int> modes_;
    std::vector<std::pair<int, int>> jump_targets_;  // (line, target mode id)

    void note(const Token& at, const std::string& msg) {
        diags_.push_back({at.line, at.col, msg});
    }

    Token expect(Tok kind, const char* what) {
        const Token& t = lx_.peek();
        if (t.kind != kind)
            fail_input(std::string("expected ") + what + ", got '" + t.text + "'", t.line, t.col);
        return lx_.next();
    }

    bool is_kw(const char* word) {
        return lx_.peek().kind == Tok::Ident && lx_.peek().text == word;
    }

    void number() {
        if (lx_.peek().kind == Tok::Minus) lx_.next();
        expect(Tok::Number, "a number");
    }

    void expr() {
        term();
        while (lx_.peek().kind == Tok::Plus || lx_.peek().kind == Tok::Minus) {
            lx_.next();
            term();
        }
    }

    void term() {
        factor();
        while (lx_.peek().kind == Tok::Star || lx_.peek().kind == Tok::Slash) {
            lx_.next();
            factor();
        }
    }

    void factor() {
        const Token& t = lx_.peek();
        if (t.kind == Tok::Number) {
            lx_.next();
            return;
        }
        if (t.kind == Tok::Minus) {
            lx_.next();
            factor();
            return;
        }
        if (t.kind == Tok::Ident) {
            Token name = lx_.next();
            bool primed = false;
            if (lx_.peek().kind == Tok::Prime) {
                lx_.next();
                primed = true;
            }
            (void)primed;
            if (!vars_.count(name.text) && name.text != "time")
                note(name, "undeclared variable '" + name.text + "'");
            return;
        }
        if (t.kind == Tok::LParen) {
            lx_.next();
            expr();
            expect(Tok::RParen, "')'");
            return;
        }
        fail_input("expected an expression, got '" + t.text + "'", t.line, t.col);
    }

    void relation() {
        switch (lx_.peek().kind) {
            case Tok::Le:
            case Tok::Lt:
            case Tok::Ge:
            case Tok::Gt:
            case Tok::Assign:
                lx_.next();
                return;
            default:
                fail_input("expected a relation, got '" + lx_.peek().text + "'", lx_.peek().line,
                           lx_.peek().col);
        }
    }

    /// `(expr rel expr)` or `(and cond cond ...)`.
    void condition() {
        expect(Tok::LParen, "'('");
        if (is_kw("and")) {
            lx_.next();
            while (lx_.peek().kind == Tok::LParen) condition();
            expect(Tok::RParen, "')'");
            return;
        }
        expr();
        relation();
        expr();
        expect(Tok::RParen, "')'");
    }

    void var_decl() {
        expect(Tok::LBracket, "'['");
        number();
        expect(Tok::Comma, "','");
        number();
        expect(Tok::RBracket, "']'");
        Token name = expect(Tok::Ident, "a variable name");
        if (!vars_.insert(name.text).second)
            note(name, "duplicate variable declaration '" + name.text + "'");
        expect(Tok::Semi, "';'");
    }

    void mode_block() {
        expect(Tok::LBrace, "'{'");
        Token kw = expect(Tok::Ident, "'mode'");
        if (kw.text != "mode") fail_input("expected 'mode'", kw.line, kw.col);
        Token id = expect(Tok::Number, "a mode id");
        if (!modes_.insert(static_cast<int>(id.num)).second) note(id, "duplicate mode id");
        expect(Tok::Semi, "';'");

        Token invt = expect(Tok::Ident, "'invt'");
        if (invt.text != "invt") fail_input("expected 'invt'", invt.line, invt.col);
        expect(Tok::Colon, "':'");
        while (lx_.peek().kind == Tok::LParen) {
            condition();
            expect(Tok::Semi, "';'");
        }

        Token flow = expect(Tok::Ident, "'flow'");
        if (flow.text != "flow") fail_input("expected 'flow'", flow.line, flow.col);
        expect(Tok::Colon, "':'");
        while (is_kw("d")) {
            lx_.next();
            expect(Tok::Slash, "'/'");
            Token dt = expect(Tok::Ident, "'dt'");
            if (dt.text != "dt") fail_input("expected 'dt'", dt.line, dt.col);
            expect(Tok::LBracket, "'['");
            Token v = expect(Tok::Ident, "a variable name");
            if (!vars_.count(v.text)) note(v, "flow for undeclared variable '" + v.text + "'");
            expect(Tok::RBracket, "']'");
            expect(Tok::Assign, "'='");
            expr();
            expect(Tok::Semi, "';'");
        }

        Token jump = expect(Tok::Ident, "'jump'");
        if (jump.text != "jump") fail_input("expected 'jump'", jump.line, jump.col);
        expect(Tok::Colon, "':'");
        while (lx_.peek().kind == Tok::LParen) {
            condition();
            // `==>` lexes as '==' followed by '>'.
            expect(Tok::EqEq, "'==>'");
            expect(Tok::Gt, "'==>'");
            Token at = expect(Tok::At, "'@'");
            Token target = expect(Tok::Number, "a mode id");
            jump_targets_.emplace_back(at.line, static_cast<int>(target.num));
            condition();
            expect(Tok::Semi, "';'");
        }
        expect(Tok::RBrace, "'}'");
    }

    void at_clause() {
        expect(Tok::At, "'@'");
        Token id = expect(Tok::Number, "a mode id");
        if (!modes_.count(static_cast<int>(id.num)))
            note(id, "clause references unknown mode id");
        condition();
        expect(Tok::Semi, "';'");
    }

    void parse() {
        while (lx_.peek().kind == Tok::LBracket) var_decl();
        if (vars_.empty()) note(lx_.peek(), "no variable declarations");
        while (lx_.peek().kind == Tok::LBrace) mode_block();
        if (modes_.empty()) note(lx_.peek(), "no mode blocks");

        Token init = expect(Tok::Ident, "'init'");
        if (init.text != "init") fail_input("expected 'init'", init.line, init.col);
        expect(Tok::Colon, "':'");
        at_clause();

        Token goal = expect(Tok::Ident, "'goal'");
        if (goal.text != "goal") fail_input("expected 'goal'", goal.line, goal.col);
        expect(Tok::Colon, "':'");
        at_clause();
        while (lx_.peek().kind == Tok::At) at_clause();

        if (lx_.peek().kind != Tok::End) note(lx_.peek(), "unexpected trailing text");
        for (const auto& [line, target] : jump_targets_) {
            if (!modes_.count(target))
                diags_.push_back(
                    {line, 1, "jump targets unknown mode id " + std::to_string(target)});
        }
    }
};

}  // namespace

std::vector<ParseDiagnostic> check_drh(const std::string& text) {
    return DrhChecker(text).run();
}

// ============================================================================
// Solver trace adapter
// ============================================================================

namespace {

[[noreturn]] void trace_error(const std::string& path, const std::string& what) {
    fail_input("solver trace: " + path + ": " + what);
}

}  // namespace

Trace parse_solver_trace(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail_input("solver trace is not valid JSON");
    if (!j.is_object()) trace_error("$", "expected an object");
    if (!j.contains("steps") || !j["steps"].is_array())
        trace_error("steps", "missing or not an array");

    Trace tr;
    tr.source = "solver";
    if (j.contains("model") && j["model"].is_string()) tr.model = j["model"];

    // Collect variable names in first-appearance order.
    for (const auto& js : j["steps"]) {
        if (js.is_null() || !js.is_object() || !js.contains("values")) continue;
        if (!js["values"].is_object()) continue;
        for (auto it = js["values"].begin(); it != js["values"].end(); ++it)
            if (tr.var_index(it.key()) < 0) tr.vars.push_back(it.key());
    }

    double prev_t = 0.0;
    for (size_t si = 0; si < j["steps"].size(); ++si) {
        const json& js = j["steps"][si];
        std::string path = "steps[" + std::to_string(si) + "]";
        TraceStep st;
        st.index = static_cast<int>(si);
        if (js.is_null() || (js.is_object() && js.contains("mode") && js["mode"].is_null())) {
            st.is_null = true;
            st.t0 = st.t1 = prev_t;
            tr.steps.push_back(std::move(st));
            continue;
        }
        if (!js.is_object()) trace_error(path, "expected an object or null");
        if (!js.contains("mode") || !js["mode"].is_string())
            trace_error(path + ".mode", "missing required field");
        st.mode = js["mode"];
        if (!js.contains("domain") || !js["domain"].is_array() || js["domain"].size() != 2)
            trace_error(path + ".domain", "expected [t0, t1]");
        st.t0 = js["domain"][0].get<double>();
        st.t1 = js["domain"][1].get<double>();
        prev_t = st.t1;

        TraceSample s0{st.t0, std::vector<double>(tr.vars.size(), 0.0)};
        TraceSample s1{st.t1, std::vector<double>(tr.vars.size(), 0.0)};
        if (!js.contains("values") || !js["values"].is_object())
            trace_error(path + ".values", "missing required field");
        for (size_t vi = 0; vi < tr.vars.size(); ++vi) {
            const std::string& var = tr.vars[vi];
            if (!js["values"].contains(var))
                trace_error(path + ".values." + var, "missing variable enclosure");
            const json& pair = js["values"][var];
            if (!pair.is_array() || pair.size() != 2)
                trace_error(path + ".values." + var, "expected [enclosure@t0, enclosure@t1]");
            double width = 0.0;
            double mids[2];
            for (int end = 0; end < 2; ++end) {
                const json& enc = pair[end];
                if (!enc.is_array() || enc.size() != 2 || !enc[0].is_number() ||
                    !enc[1].is_number())
                    trace_error(path + ".values." + var, "enclosure must be [lo, hi]");
                double lo = enc[0].get<double>(), hi = enc[1].get<double>();
                mids[end] = 0.5 * (lo + hi);
                width = std::max(width, hi - lo);
            }
            s0.values[vi] = mids[0];
            s1.values[vi] = mids[1];
            if (width > 0.0) st.widths[var] = width;
        }
        st.samples.push_back(std::move(s0));
        if (st.t1 > st.t0) st.samples.push_back(std::move(s1));
        tr.steps.push_back(std::move(st));
    }
    return tr;
}

}  // namespace featkit
