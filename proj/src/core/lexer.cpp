#include "lexer.hpp"

#include <cctype>

#include "diag.hpp"
#include "numio.hpp"

namespace featkit {

namespace {

bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

Lexer::Lexer(std::string_view src) {
    size_t i = 0;
    int line = 1, col = 1;
    auto advance = [&](size_t n) {
        for (size_t k = 0; k < n; ++k) {
            if (i + k < src.size() && src[i + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += n;
    };
    auto push = [&](Tok kind, std::string text, double num, int l, int c) {
        tokens_.push_back({kind, std::move(text), num, l, c});
    };

    while (i < src.size()) {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        int tl = line, tc = col;
        if (ident_start(c)) {
            size_t j = i;
            while (j < src.size() && ident_char(src[j])) ++j;
            push(Tok::Ident, std::string(src.substr(i, j - i)), 0, tl, tc);
            advance(j - i);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            if (j < src.size() && src[j] == '.') {
                ++j;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
                if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
                    ++k;
                    while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
                    j = k;
                }
            }
            std::string text(src.substr(i, j - i));
            double value = 0;
            if (!parse_double(text, value))
                fail_input("bad numeric literal '" + text + "'", tl, tc);
            push(Tok::Number, text, value, tl, tc);
            advance(j - i);
            continue;
        }
        auto two = [&](char a, char b) {
            return c == a && i + 1 < src.size() && src[i + 1] == b;
        };
        if (two('=', '=')) { push(Tok::EqEq, "==", 0, tl, tc); advance(2); continue; }
        if (two('<', '=')) { push(Tok::Le, "<=", 0, tl, tc); advance(2); continue; }
        if (two('>', '=')) { push(Tok::Ge, ">=", 0, tl, tc); advance(2); continue; }
        if (two('&', '&')) { push(Tok::AndAnd, "&&", 0, tl, tc); advance(2); continue; }
        if (c == '&') { push(Tok::Amp, "&", 0, tl, tc); advance(1); continue; }
        if (two('#', '#')) { push(Tok::HashHash, "##", 0, tl, tc); advance(2); continue; }
        if (two('@', '+')) { push(Tok::AtPlus, "@+", 0, tl, tc); advance(2); continue; }
        if (two('@', '-')) { push(Tok::AtMinus, "@-", 0, tl, tc); advance(2); continue; }
        if (c == '@') { push(Tok::At, "@", 0, tl, tc); advance(1); continue; }
        if (c == '|' && i + 2 < src.size() && src[i + 1] == '=' && src[i + 2] == '>') {
            push(Tok::Implies, "|=>", 0, tl, tc);
            advance(3);
            continue;
        }
        if (c == '|' && i + 2 < src.size() && src[i + 1] == '-' && src[i + 2] == '>') {
            push(Tok::MapsTo, "|->", 0, tl, tc);
            advance(3);
            continue;
        }
        if (c == '$') {
            size_t j = i + 1;
            while (j < src.size() && ident_char(src[j])) ++j;
            if (j > i + 1) {
                push(Tok::DollarIdent, std::string(src.substr(i, j - i)), 0, tl, tc);
                advance(j - i);
            } else {
                push(Tok::Dollar, "$", 0, tl, tc);
                advance(1);
            }
            continue;
        }
        switch (c) {
            case '(': push(Tok::LParen, "(", 0, tl, tc); break;
            case ')': push(Tok::RParen, ")", 0, tl, tc); break;
            case ',': push(Tok::Comma, ",", 0, tl, tc); break;
            case ';': push(Tok::Semi, ";", 0, tl, tc); break;
            case '=': push(Tok::Assign, "=", 0, tl, tc); break;
            case '<': push(Tok::Lt, "<", 0, tl, tc); break;
            case '>': push(Tok::Gt, ">", 0, tl, tc); break;
            case '\'': push(Tok::Prime, "'", 0, tl, tc); break;
            case '*': push(Tok::Star, "*", 0, tl, tc); break;
            case '+': push(Tok::Plus, "+", 0, tl, tc); break;
            case '-': push(Tok::Minus, "-", 0, tl, tc); break;
            case '/': push(Tok::Slash, "/", 0, tl, tc); break;
            case '[': push(Tok::LBracket, "[", 0, tl, tc); break;
            case ']': push(Tok::RBracket, "]", 0, tl, tc); break;
            case ':': push(Tok::Colon, ":", 0, tl, tc); break;
            case '{': push(Tok::LBrace, "{", 0, tl, tc); break;
            case '}': push(Tok::RBrace, "}", 0, tl, tc); break;
            default:
                fail_input(std::string("unexpected character '") + c + "'", tl, tc);
        }
        advance(1);
    }
    last_line_ = line;
    tokens_.push_back({Tok::End, "", 0, line, col});
}

const Token& Lexer::peek(size_t ahead) const {
    size_t k = pos_ + ahead;
    if (k >= tokens_.size()) k = tokens_.size() - 1;
    return tokens_[k];
}

Token Lexer::next() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
}

bool Lexer::at_end() const {
    return tokens_[pos_].kind == Tok::End;
}

}  // namespace featkit
