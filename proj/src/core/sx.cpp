#include "sx.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <map>
#include <set>
#include <sstream>

#include "ast.hpp"
#include "diag.hpp"
#include "lexer.hpp"
#include "numio.hpp"

namespace featkit {

// ============================================================================
// Minimal XML reader (elements, attributes, text, comments, entities)
// ============================================================================

namespace {

struct XmlNode {
    std::string tag;
    std::map<std::string, std::string> attrs;
    std::vector<XmlNode> children;
    std::string text;

    std::string attr(const std::string& name, const std::string& fallback = "") const {
        auto it = attrs.find(name);
        return it == attrs.end() ? fallback : it->second;
    }

    const XmlNode* child(const std::string& t) const {
        for (const auto& c : children)
            if (c.tag == t) return &c;
        return nullptr;
    }
};

class XmlParser {
public:
    explicit XmlParser(const std::string& src) : s_(src) {}

    XmlNode run() {
        skip_prolog();
        XmlNode root = element();
        skip_ws_and_comments();
        if (pos_ < s_.size()) fail("trailing content after the document element");
        return root;
    }

private:
    const std::string& s_;
    size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) {
        int line = 1;
        for (size_t i = 0; i < pos_ && i < s_.size(); ++i)
            if (s_[i] == '\n') ++line;
        fail_input("malformed XML: " + msg, line);
    }

    bool starts_with(const char* p) const { return s_.compare(pos_, strlen(p), p) == 0; }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    void skip_ws_and_comments() {
        while (true) {
            skip_ws();
            if (starts_with("<!--")) {
                size_t end = s_.find("-->", pos_ + 4);
                if (end == std::string::npos) fail("unterminated comment");
                pos_ = end + 3;
                continue;
            }
            return;
        }
    }

    void skip_prolog() {
        skip_ws();
        if (starts_with("<?")) {
            size_t end = s_.find("?>", pos_);
            if (end == std::string::npos) fail("unterminated XML declaration");
            pos_ = end + 2;
        }
        skip_ws_and_comments();
        while (starts_with("<!")) {  // doctype etc.
            size_t end = s_.find('>', pos_);
            if (end == std::string::npos) fail("unterminated declaration");
            pos_ = end + 1;
            skip_ws_and_comments();
        }
    }

    static std::string strip_ns(const std::string& name) {
        size_t colon = name.find(':');
        return colon == std::string::npos ? name : name.substr(colon + 1);
    }

    std::string name() {
        size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' ||
                s_[pos_] == '-' || s_[pos_] == '.' || s_[pos_] == ':'))
            ++pos_;
        if (pos_ == start) fail("expected a name");
        return s_.substr(start, pos_ - start);
    }

    static std::string decode_entities(const std::string& raw) {
        std::string out;
        out.reserve(raw.size());
        for (size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] != '&') {
                out += raw[i];
                continue;
            }
            size_t semi = raw.find(';', i);
            if (semi == std::string::npos) {
                out += raw[i];
                continue;
            }
            std::string ent = raw.substr(i + 1, semi - i - 1);
            if (ent == "lt")
                out += '<';
            else if (ent == "gt")
                out += '>';
            else if (ent == "amp")
                out += '&';
            else if (ent == "quot")
                out += '"';
            else if (ent == "apos")
                out += '\'';
            else {
                out += raw.substr(i, semi - i + 1);
            }
            i = semi;
        }
        return out;
    }

    XmlNode element() {
        skip_ws_and_comments();
        if (pos_ >= s_.size() || s_[pos_] != '<') fail("expected an element");
        ++pos_;
        XmlNode node;
        node.tag = strip_ns(name());
        while (true) {
            skip_ws();
            if (pos_ >= s_.size()) fail("unterminated start tag");
            if (s_[pos_] == '/') {
                if (pos_ + 1 >= s_.size() || s_[pos_ + 1] != '>') fail("bad self-closing tag");
                pos_ += 2;
                return node;
            }
            if (s_[pos_] == '>') {
                ++pos_;
                break;
            }
            std::string an = strip_ns(name());
            skip_ws();
            if (pos_ >= s_.size() || s_[pos_] != '=') fail("expected '=' in attribute");
            ++pos_;
            skip_ws();
            if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\''))
                fail("expected a quoted attribute value");
            char quote = s_[pos_++];
            size_t end = s_.find(quote, pos_);
            if (end == std::string::npos) fail("unterminated attribute value");
            node.attrs[an] = decode_entities(s_.substr(pos_, end - pos_));
            pos_ = end + 1;
        }
        // Content.
        while (true) {
            size_t text_start = pos_;
            while (pos_ < s_.size() && s_[pos_] != '<') ++pos_;
            if (pos_ > text_start)
                node.text += decode_entities(s_.substr(text_start, pos_ - text_start));
            if (pos_ >= s_.size()) fail("unterminated element <" + node.tag + ">");
            if (starts_with("<!--")) {
                size_t end = s_.find("-->", pos_ + 4);
                if (end == std::string::npos) fail("unterminated comment");
                pos_ = end + 3;
                continue;
            }
            if (starts_with("</")) {
                pos_ += 2;
                std::string closing = strip_ns(name());
                if (closing != node.tag)
                    fail("mismatched closing tag </" + closing + "> for <" + node.tag + ">");
                skip_ws();
                if (pos_ >= s_.size() || s_[pos_] != '>') fail("bad closing tag");
                ++pos_;
                return node;
            }
            node.children.push_back(element());
        }
    }
};

// ============================================================================
// SX text expression helpers
// ============================================================================

/// Splits an SX condition/assignment body on `&` / `&&`.
struct SxStatement {
    std::string lhs;  // identifier (possibly primed) for assignments
    bool primed = false;
    Rel rel = Rel::Eq;
    bool is_assign = false;  // `:=`
    Ast lhs_ast;
    Ast rhs_ast;
};

Rel token_rel(Tok k) {
    switch (k) {
        case Tok::Le: return Rel::Le;
        case Tok::Lt: return Rel::Lt;
        case Tok::Ge: return Rel::Ge;
        case Tok::Gt: return Rel::Gt;
        default: return Rel::Eq;
    }
}

std::vector<SxStatement> parse_sx_statements(const std::string& text, bool allow_assign) {
    std::vector<SxStatement> out;
    Lexer lx(text);
    if (lx.peek().kind == Tok::End) return out;
    // Bare "true" is accepted and contributes nothing.
    while (true) {
        if (lx.peek().kind == Tok::Ident && lx.peek().text == "true") {
            lx.next();
        } else {
            SxStatement st;
            st.lhs_ast = parse_arith(lx, true);
            const Token& t = lx.peek();
            switch (t.kind) {
                case Tok::Le:
                case Tok::Lt:
                case Tok::Ge:
                case Tok::Gt:
                case Tok::EqEq:
                case Tok::Assign:
                    st.rel = token_rel(lx.next().kind);
                    break;
                case Tok::Colon: {
                    lx.next();
                    if (lx.peek().kind != Tok::Assign)
                        fail_input("expected ':=' in assignment", t.line, t.col);
                    lx.next();
                    st.is_assign = true;
                    st.rel = Rel::Eq;
                    break;
                }
                default:
                    fail_input("expected a relation in '" + text + "'", t.line, t.col);
            }
            if (!allow_assign && st.is_assign)
                fail_input("assignment not allowed here", t.line, t.col);
            st.rhs_ast = parse_arith(lx, false);
            out.push_back(std::move(st));
        }
        if (lx.peek().kind == Tok::Amp || lx.peek().kind == Tok::AndAnd) {
            lx.next();
            continue;
        }
        break;
    }
    if (lx.peek().kind != Tok::End)
        fail_input("unexpected trailing text in '" + text + "'", lx.peek().line,
                   lx.peek().col);
    return out;
}

std::string sanitize_ident(const std::string& raw) {
    std::string out;
    for (char c : raw) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
            out += c;
        else
            out += '_';
    }
    if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) out = "m_" + out;
    return out;
}

}  // namespace

const SxLocation* SxComponent::location_by_id(const std::string& lid) const {
    for (const auto& l : locations)
        if (l.id == lid) return &l;
    return nullptr;
}

const SxComponent* SxDocument::find(const std::string& id) const {
    for (const auto& c : components)
        if (c.id == id) return &c;
    return nullptr;
}

// ============================================================================
// parse_sx
// ============================================================================

namespace {

/// Affinity check with dummy constants for const params: catches nonlinear
/// text early, before binds fix the actual values.
void check_affine(const SxComponent& comp, const std::string& text, bool allow_assign,
                  const std::string& where) {
    if (text.empty()) return;
    std::set<std::string> const_names;
    for (const auto& p : comp.params)
        if (p.is_const) const_names.insert(p.name);
    AffineEnv env;
    env.is_term = [&](const std::string& n) { return !const_names.count(n); };
    env.constant_value = [&](const std::string& n) -> std::optional<double> {
        if (const_names.count(n)) return 1.0;
        return std::nullopt;
    };
    try {
        for (const auto& st : parse_sx_statements(text, allow_assign)) {
            bool primed_lhs = st.lhs_ast.kind == Ast::Kind::Name && st.lhs_ast.primed;
            if (!primed_lhs) lower_affine(st.lhs_ast, env);
            lower_affine(st.rhs_ast, env);
        }
    } catch (const Error& e) {
        std::string msg(e.what());
        if (msg.find("non-affine") != std::string::npos)
            fail_input("non-affine flow or condition in " + where + ": " + msg);
        throw;
    }
}

}  // namespace

SxDocument parse_sx(const std::string& xml) {
    XmlNode root = XmlParser(xml).run();
    if (root.tag != "sspaceex") fail_input("not an SX document (expected <sspaceex>)");

    SxDocument doc;
    for (const auto& comp_node : root.children) {
        if (comp_node.tag != "component") continue;
        SxComponent comp;
        comp.id = comp_node.attr("id");
        if (comp.id.empty()) fail_input("component without an id");
        for (const auto& child : comp_node.children) {
            if (child.tag == "param") {
                SxParam p;
                p.name = child.attr("name");
                p.is_const = child.attr("dynamics", "any") == "const";
                p.local = child.attr("local", "false") == "true";
                if (child.attr("type", "real") == "label") continue;  // sync labels ignored
                comp.params.push_back(std::move(p));
            } else if (child.tag == "location") {
                SxLocation l;
                l.id = child.attr("id");
                l.name = child.attr("name", "loc" + l.id);
                if (const XmlNode* inv = child.child("invariant")) l.invariant_text = inv->text;
                if (const XmlNode* fl = child.child("flow")) l.flow_text = fl->text;
                comp.locations.push_back(std::move(l));
            } else if (child.tag == "transition") {
                SxTransition t;
                t.source = child.attr("source");
                t.target = child.attr("target");
                if (const XmlNode* g = child.child("guard")) t.guard_text = g->text;
                if (const XmlNode* a = child.child("assignment")) t.assignment_text = a->text;
                if (const XmlNode* lbl = child.child("label")) t.label = lbl->text;
                comp.transitions.push_back(std::move(t));
            } else if (child.tag == "bind") {
                SxBind b;
                b.component = child.attr("component");
                b.as = child.attr("as");
                for (const auto& m : child.children) {
                    if (m.tag != "map") continue;
                    b.maps.emplace_back(m.attr("key"), m.text);
                }
                comp.binds.push_back(std::move(b));
            }
        }
        // Location ids unique per component.
        std::set<std::string> ids;
        for (const auto& l : comp.locations)
            if (!ids.insert(l.id).second)
                fail_input("duplicate location id '" + l.id + "' in component " + comp.id);
        for (const auto& l : comp.locations) {
            check_affine(comp, l.flow_text, false, "component " + comp.id + " location " + l.name);
            check_affine(comp, l.invariant_text, false,
                         "component " + comp.id + " location " + l.name);
        }
        doc.components.push_back(std::move(comp));
    }
    if (doc.components.empty()) fail_input("SX document declares no components");
    for (const auto& comp : doc.components) {
        for (const auto& b : comp.binds) {
            if (!doc.find(b.component))
                fail_input("bind references unknown component '" + b.component + "'");
        }
    }
    return doc;
}

// ============================================================================
// Config
// ============================================================================

SxConfig parse_sx_config(const std::string& text) {
    SxConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            size_t b = s.find_first_not_of(" \t\r");
            size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        size_t eq = trimmed.find('=');
        if (eq == std::string::npos)
            fail_input("malformed configuration line (expected key = value)", lineno);
        std::string key = trim(trimmed.substr(0, eq));
        std::string value = trim(trimmed.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key == "system") {
            cfg.system = value;
        } else if (key == "initially") {
            cfg.initially = value;
        } else if (key == "time-horizon") {
            double h = 0;
            if (!parse_double(value, h))
                fail_input("bad time-horizon value '" + value + "'", lineno);
            cfg.time_horizon = h;
        }
        // Other SpaceEx keys are accepted and ignored.
    }
    return cfg;
}

// ============================================================================
// flatten
// ============================================================================

namespace {

struct Substitution {
    std::map<std::string, std::string> renames;
    std::map<std::string, double> constants;
};

Ast rename_ast(const Ast& a, const Substitution& sub);

std::unique_ptr<Ast> rename_child(const std::unique_ptr<Ast>& c, const Substitution& sub) {
    if (!c) return nullptr;
    return std::make_unique<Ast>(rename_ast(*c, sub));
}

Ast rename_ast(const Ast& a, const Substitution& sub) {
    Ast out;
    out.kind = a.kind;
    out.num = a.num;
    out.name = a.name;
    out.primed = a.primed;
    out.line = a.line;
    out.col = a.col;
    if (a.kind == Ast::Kind::Name) {
        auto it = sub.renames.find(a.name);
        if (it != sub.renames.end()) out.name = it->second;
    }
    out.a = rename_child(a.a, sub);
    out.b = rename_child(a.b, sub);
    return out;
}

}  // namespace

HybridAutomaton flatten(const SxDocument& doc, const SxConfig& cfg) {
    // Resolve the system component.
    const SxComponent* system = nullptr;
    if (!cfg.system.empty()) {
        system = doc.find(cfg.system);
        if (!system) fail_input("config names unknown system component '" + cfg.system + "'");
    } else if (doc.components.size() == 1) {
        system = &doc.components.front();
    } else {
        fail_input("a configuration with a 'system' key is required for multi-component "
                   "documents");
    }

    const SxComponent* base = system;
    Substitution sub;
    NamedSeq<double> parameters;

    if (!system->binds.empty()) {
        if (system->binds.size() > 1)
            fail_input("synchronized composition is not supported (multiple binds in component "
                       "'" + system->id + "')");
        const SxBind& bind = system->binds.front();
        base = doc.find(bind.component);
        if (!base->binds.empty())
            fail_input("nested networks beyond one level are not supported (component '" +
                       base->id + "' also binds)");
        for (const auto& [key, value] : bind.maps) {
            double num = 0;
            if (parse_double(value, num)) {
                sub.constants[key] = num;
            } else {
                sub.renames[key] = sanitize_ident(value);
            }
        }
    }

    HybridAutomaton ha;
    ha.name = sanitize_ident(system->id);

    // Effective names: non-const params become variables, const params need
    // numeric values from the bind map.
    auto effective_name = [&](const std::string& raw) {
        auto it = sub.renames.find(raw);
        return it == sub.renames.end() ? sanitize_ident(raw) : it->second;
    };
    for (const auto& p : base->params) {
        auto cit = sub.constants.find(p.name);
        if (p.is_const) {
            if (cit != sub.constants.end()) {
                parameters.set(effective_name(p.name), cit->second);
            } else {
                fail_input("constant parameter '" + p.name + "' of component '" + base->id +
                           "' has no bound value");
            }
            continue;
        }
        if (cit != sub.constants.end()) {
            // A continuous variable pinned to a number by the bind.
            parameters.set(effective_name(p.name), cit->second);
            continue;
        }
        ha.variables.push_back(effective_name(p.name));
    }
    ha.parameters = parameters;

    AffineEnv env;
    env.is_term = [&](const std::string& n) { return ha.has_variable(n); };
    env.constant_value = [&](const std::string& n) -> std::optional<double> {
        if (const double* v = ha.parameters.find(n)) return *v;
        return std::nullopt;
    };

    auto lower_renamed = [&](const Ast& a) { return lower_affine(rename_ast(a, sub), env); };

    // Locations.
    for (const auto& sl : base->locations) {
        Location loc;
        loc.name = sanitize_ident(sl.name);
        for (const auto& st : parse_sx_statements(sl.invariant_text, false)) {
            if (st.lhs_ast.primed) fail_input("primed name in an invariant");
            loc.invariant.add(
                Porv::compare(lower_renamed(st.lhs_ast), st.rel, lower_renamed(st.rhs_ast)));
        }
        for (const auto& st : parse_sx_statements(sl.flow_text, false)) {
            if (st.lhs_ast.kind != Ast::Kind::Name || !st.lhs_ast.primed || st.rel != Rel::Eq)
                fail_input("flow statements must have the form x' == expr (location " + sl.name +
                           ")");
            std::string var = effective_name(st.lhs_ast.name);
            if (!ha.has_variable(var)) {
                if (ha.parameters.contains(var)) continue;  // pinned by a bind
                fail_input("flow for unknown variable '" + var + "'");
            }
            loc.flow.set(var, lower_renamed(st.rhs_ast));
        }
        // SX models may omit flows; absent means the quantity holds still.
        for (const auto& v : ha.variables)
            if (!loc.flow.contains(v)) loc.flow.set(v, LinExpr::constant_of(0.0));
        ha.locations.push_back(std::move(loc));
    }
    if (ha.locations.empty()) fail_input("component '" + base->id + "' has no locations");

    // Transitions.
    for (const auto& st : base->transitions) {
        const SxLocation* src = base->location_by_id(st.source);
        const SxLocation* tgt = base->location_by_id(st.target);
        if (!src || !tgt)
            fail_input("transition references unknown location id '" +
                       (src ? st.target : st.source) + "'");
        Transition tr;
        tr.source = sanitize_ident(src->name);
        tr.target = sanitize_ident(tgt->name);
        for (const auto& g : parse_sx_statements(st.guard_text, false)) {
            tr.guard.add(Porv::compare(lower_renamed(g.lhs_ast), g.rel,
                                       lower_renamed(g.rhs_ast)));
        }
        for (const auto& a : parse_sx_statements(st.assignment_text, true)) {
            if (a.lhs_ast.kind != Ast::Kind::Name)
                fail_input("assignments must have the form x' := expr");
            std::string var = effective_name(a.lhs_ast.name);
            if (!ha.has_variable(var)) fail_input("assignment to unknown variable '" + var + "'");
            LinExpr rhs = lower_renamed(a.rhs_ast);
            if (rhs.is_single_variable() && rhs.terms[0].name == var) continue;
            tr.reset.set(var, std::move(rhs));
        }
        ha.transitions.push_back(std::move(tr));
    }

    // Initial state. `initially` is a &-joined conjunction whose loc()
    // clauses pick the location; the remaining conjuncts form the condition.
    ha.initial_location = ha.locations.front().name;
    if (!cfg.initially.empty()) {
        std::vector<std::string> conjuncts;
        std::string piece;
        for (char c : cfg.initially) {
            if (c == '&') {
                if (!piece.empty()) conjuncts.push_back(piece);
                piece.clear();
            } else {
                piece += c;
            }
        }
        if (!piece.empty()) conjuncts.push_back(piece);

        std::string rest;
        for (std::string conj : conjuncts) {
            size_t b = conj.find_first_not_of(" \t");
            if (b == std::string::npos) continue;
            conj = conj.substr(b);
            if (conj.rfind("loc(", 0) == 0) {
                size_t eq = conj.find("==");
                if (eq == std::string::npos)
                    fail_input("malformed loc() clause in 'initially'");
                size_t name_start = eq + 2;
                while (name_start < conj.size() &&
                       std::isspace(static_cast<unsigned char>(conj[name_start])))
                    ++name_start;
                size_t name_end = name_start;
                while (name_end < conj.size() &&
                       (std::isalnum(static_cast<unsigned char>(conj[name_end])) ||
                        conj[name_end] == '_'))
                    ++name_end;
                std::string loc_name =
                    sanitize_ident(conj.substr(name_start, name_end - name_start));
                if (ha.location_index(loc_name) < 0)
                    fail_input("'initially' names unknown location '" + loc_name + "'");
                ha.initial_location = loc_name;
                continue;
            }
            if (!rest.empty()) rest += " & ";
            rest += conj;
        }
        for (const auto& st : parse_sx_statements(rest, false)) {
            ha.initial.add(
                Porv::compare(lower_renamed(st.lhs_ast), st.rel, lower_renamed(st.rhs_ast)));
        }
    }

    auto diags = validate(ha);
    if (!diags.empty())
        fail_input("imported model does not validate: " + join_diagnostics(diags));
    return ha;
}

}  // namespace featkit
