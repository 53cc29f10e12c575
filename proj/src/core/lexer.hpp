#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace featkit {

enum class Tok {
    Ident,
    Number,
    LParen,
    RParen,
    Comma,
    Semi,
    Assign,   // =
    EqEq,     // ==
    Le,       // <=
    Ge,       // >=
    Lt,       // <
    Gt,       // >
    AndAnd,   // &&
    Amp,      // & (SX conjunction)
    Implies,  // |=>
    MapsTo,   // |->
    Prime,    // '
    Star,
    Plus,
    Minus,
    Slash,
    HashHash,  // ##
    LBracket,
    RBracket,
    Colon,
    AtPlus,       // @+
    AtMinus,      // @-
    At,           // bare @ (solver model text)
    LBrace,
    RBrace,
    Dollar,       // $
    DollarIdent,  // $time and friends
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;  // identifier spelling / raw number / "$time"
    double num = 0.0;
    int line = 1;
    int col = 1;
};

/// Shared tokenizer for the model and feature languages. Comments run from
/// `//` to end of line. Throws Error{Input} with position on a bad character.
class Lexer {
public:
    explicit Lexer(std::string_view src);

    const Token& peek(size_t ahead = 0) const;
    Token next();
    bool at_end() const;

    /// Save/restore for limited backtracking (parenthesized predicates).
    size_t position() const { return pos_; }
    void rewind(size_t pos) { pos_ = pos; }

    /// Line number of the last token (for end-of-input diagnostics).
    int last_line() const { return last_line_; }

private:
    std::vector<Token> tokens_;
    size_t pos_ = 0;
    int last_line_ = 1;
};

}  // namespace featkit
