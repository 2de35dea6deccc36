#ifndef KSYMP_PARSER_HPP
#define KSYMP_PARSER_HPP

#include <cctype>
#include <string>

#include "ksymp/expr.hpp"

namespace ksymp {

struct ParseError : std::runtime_error {
    std::size_t position;
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
};

// Recursive-descent parser for the ASCII expression grammar:
//   identifiers [A-Za-z][A-Za-z0-9_]*, velocity v[x,a], formal call F(x,y),
//   formal derivative D[m1,...]F(x,y), operators + - * / ^, unary minus,
//   parentheses, integer literals. Division only by nonzero rational
//   constants. Velocities of coordinate x in direction a resolve against the
//   table's velocity symbols.
class Parser {
public:
    Parser(const std::string& text, const SymbolTable& tab) : s_(text), tab_(tab) {}

    Expr parse() {
        Expr e = parse_sum();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    const std::string& s_;
    const SymbolTable& tab_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    Expr parse_sum() {
        Expr e = parse_product();
        for (;;) {
            if (eat('+'))
                e = add(e, parse_product());
            else if (eat('-'))
                e = sub(e, parse_product());
            else
                return e;
        }
    }

    Expr parse_product() {
        Expr e = parse_unary();
        for (;;) {
            if (eat('*')) {
                e = mul(e, parse_unary());
            } else if (eat('/')) {
                std::size_t at = pos_;
                Expr d = parse_unary();
                if (!d.is_rational() || d.is_zero())
                    throw ParseError("division only by nonzero rational constants", at);
                e = scale(e, Rat(1) / d.rational_value());
            } else {
                return e;
            }
        }
    }

    Expr parse_unary() {
        if (eat('-')) return neg(parse_unary());
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (eat('^')) {
            long e = parse_int("exponent");
            if (e < 0 && !base.is_rational()) fail("negative power of a non-constant");
            return pow(base, e);
        }
        return base;
    }

    long parse_int(const char* what) {
        skip_ws();
        bool negated = eat('-');
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ == start) fail(std::string("expected integer ") + what);
        long v = std::stol(s_.substr(start, pos_ - start));
        return negated ? -v : v;
    }

    std::string parse_ident() {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ >= s_.size() || !(std::isalpha(static_cast<unsigned char>(s_[pos_]))))
            fail("expected identifier");
        ++pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        return s_.substr(start, pos_ - start);
    }

    SymId parse_arg_symbol() {
        std::size_t at = pos_;
        std::string id = parse_ident();
        if (id == "v" && peek() == '[') return parse_velocity();
        if (!tab_.has_symbol(id)) throw ParseError("unknown identifier '" + id + "'", at);
        return tab_.symbol(id);
    }

    SymId parse_velocity() {
        if (!eat('[')) fail("expected '[' after v");
        std::size_t at = pos_;
        std::string coord = parse_ident();
        if (!eat(',')) fail("expected ',' in velocity");
        long dir = parse_int("direction");
        if (!eat(']')) fail("expected ']' in velocity");
        if (!tab_.has_symbol(coord)) throw ParseError("unknown coordinate '" + coord + "'", at);
        SymId c = tab_.symbol(coord);
        if (tab_.info(c).kind != SymKind::Coordinate)
            throw ParseError("'" + coord + "' is not a coordinate", at);
        int ci = tab_.info(c).coord_index;
        for (SymId v = 0; v < tab_.symbol_count(); ++v) {
            const auto& si = tab_.info(v);
            if (si.kind == SymKind::Velocity && si.coord_index == ci && si.direction == dir)
                return v;
        }
        throw ParseError("no velocity v[" + coord + "," + std::to_string(dir) + "]", at);
    }

    Expr parse_primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            return Expr::constant(Rat::from_string(s_.substr(start, pos_ - start)));
        }
        if (c == '(') {
            ++pos_;
            Expr e = parse_sum();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t at = pos_;
            // D[multi]Head(args): formal-derivative atom
            if (c == 'D' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '[') {
                pos_ += 2;
                std::vector<std::uint16_t> multi;
                for (;;) {
                    long m = parse_int("multi-index entry");
                    if (m < 0) fail("negative multi-index");
                    multi.push_back(static_cast<std::uint16_t>(m));
                    if (eat(']')) break;
                    if (!eat(',')) fail("expected ',' or ']' in multi-index");
                }
                std::string head = parse_ident();
                return parse_atom_call(head, at, std::move(multi));
            }
            std::string id = parse_ident();
            if (id == "v" && peek() == '[') return Expr::var(parse_velocity());
            if (peek() == '(') {
                return parse_atom_call(id, at, {});
            }
            if (!tab_.has_symbol(id)) throw ParseError("unknown identifier '" + id + "'", at);
            SymId s = tab_.symbol(id);
            if (tab_.info(s).kind == SymKind::FunctionHead)
                return Expr::var(tab_.intern_atom(s, {}, {})); // zero-argument atom
            return Expr::var(s);
        }
        fail("unexpected character");
    }

    Expr parse_atom_call(const std::string& head, std::size_t at, std::vector<std::uint16_t> multi) {
        if (!tab_.has_symbol(head)) throw ParseError("unknown function '" + head + "'", at);
        SymId h = tab_.symbol(head);
        if (tab_.info(h).kind != SymKind::FunctionHead)
            throw ParseError("'" + head + "' is not a formal function", at);
        std::vector<SymId> args;
        if (eat('(')) {
            if (!eat(')')) {
                for (;;) {
                    args.push_back(parse_arg_symbol());
                    if (eat(')')) break;
                    if (!eat(',')) fail("expected ',' or ')' in argument list");
                }
            }
        }
        if (multi.empty()) multi.assign(args.size(), 0);
        if (multi.size() != args.size()) throw ParseError("multi-index length mismatch", at);
        return Expr::var(tab_.intern_atom(h, std::move(args), std::move(multi)));
    }
};

inline Expr parse_expr(const std::string& text, const SymbolTable& tab) {
    return Parser(text, tab).parse();
}

// Canonical rendering; parse(to_string(e)) reproduces e.
inline std::string to_string(const Expr& e, const SymbolTable& tab) {
    if (e.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (const auto& t : e.terms()) {
        Rat c = t.c;
        bool negative = c.sign() < 0;
        if (first) {
            if (negative) out += "-";
        } else {
            out += negative ? " - " : " + ";
        }
        if (negative) c = -c;
        first = false;
        if (t.m.is_one()) {
            out += c.str();
            continue;
        }
        bool printed = false;
        if (!c.is_one()) {
            out += c.str();
            printed = true;
        }
        for (auto& p : t.m.f) {
            if (printed) out += "*";
            out += tab.var_name(p.first);
            if (p.second > 1) out += "^" + std::to_string(p.second);
            printed = true;
        }
    }
    return out;
}

} // namespace ksymp

#endif // KSYMP_PARSER_HPP
