#pragma once

#include <string>

#include "automaton.hpp"

namespace featkit {

/// Model text plus where it came from (for messages only).
struct HaslacSource {
    std::string text;
    std::string origin = "<memory>";
};

/// Parses the HASLAC model language into a validated automaton.
///
/// Grammar (statements are `;`-terminated, comments run `//` to end of line,
/// `&&` is the only Boolean connective):
///
///   module    := "module" NAME "(" var ("," var)* ")" item* "endmodule"
///   item      := "output" names ";"
///              | "parameter" NAME "=" const ("," NAME "=" const)* ";"
///              | ["urgent"] "mode" NAME "begin" ("ddt" var "=" expr ";")* "end"
///              | "property" ("inv"|"trans") NAME cond "|=>" cond ";" "endproperty"
///              | "initial" "begin" "set" "begin" (porv ";")* "end" "end"
///
/// `property inv M` requires antecedent `mode==M`; the consequent becomes M's
/// invariant. `property trans N` takes source/target from `mode==A` and
/// `mode'==B` in the antecedent (the property name is decorative), remaining
/// unprimed conjuncts become the guard and primed consequent equalities the
/// resets. Expressions must be affine; parameters fold to numbers here.
HybridAutomaton parse_haslac(const HaslacSource& src);

/// Canonical text emission. For any automaton with empty validate()
/// diagnostics, parse_haslac(print_haslac(ha)) is structurally identical to
/// ha, and a second print of the reparsed automaton is byte-identical.
std::string print_haslac(const HybridAutomaton& ha);

}  // namespace featkit
