#pragma once

// Text form of observables:
//   expr  := sign? term (('+'|'-') term)*
//   term  := coeff? ('*'? 's[' int ']')+
//   coeff := decimal literal
// Whitespace is ignored between tokens.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mising/error.hpp"
#include "mising/observable.hpp"

namespace mising {

class ParseError : public Error {
public:
    ParseError(std::string_view message, std::size_t position)
        : Error(ErrorKind::precondition,
                std::string(message) + " at position " + std::to_string(position)),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

namespace detail {

class ObservableParser {
public:
    explicit ObservableParser(std::string_view text) : text_(text) {}

    Observable parse() {
        std::vector<Monomial> terms;
        skip_ws();
        double sign = 1.0;
        if (peek() == '+' || peek() == '-') {
            sign = get() == '-' ? -1.0 : 1.0;
        }
        terms.push_back(term(sign));
        for (;;) {
            skip_ws();
            if (at_end()) break;
            const char c = peek();
            if (c != '+' && c != '-') fail("expected '+' or '-'");
            ++pos_;
            terms.push_back(term(c == '-' ? -1.0 : 1.0));
        }
        return Observable(std::move(terms));
    }

private:
    Monomial term(double sign) {
        skip_ws();
        Monomial m;
        m.coef = sign;
        if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') m.coef *= coefficient();
        bool first = true;
        for (;;) {
            skip_ws();
            const std::size_t mark = pos_;
            bool star = false;
            if (peek() == '*') {
                ++pos_;
                skip_ws();
                star = true;
            }
            if (peek() != 's') {
                if (first || star) fail("expected 's['");
                pos_ = mark;
                break;
            }
            ++pos_;
            skip_ws();
            expect('[');
            skip_ws();
            m.indices.push_back(index());
            skip_ws();
            expect(']');
            first = false;
        }
        return m;
    }

    double coefficient() {
        const std::size_t start = pos_;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) ++pos_;
        if (!at_end() && (peek() == 'e' || peek() == 'E')) {
            ++pos_;
            if (!at_end() && (peek() == '+' || peek() == '-')) ++pos_;
            while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        }
        double value = 0.0;
        const auto* first = text_.data() + start;
        const auto* last = text_.data() + pos_;
        const auto res = std::from_chars(first, last, value);
        if (res.ec != std::errc() || res.ptr != last) fail("malformed coefficient", start);
        return value;
    }

    std::uint64_t index() {
        const std::size_t start = pos_;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        if (start == pos_) fail("expected index");
        std::uint64_t value = 0;
        const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (res.ec != std::errc()) fail("index out of range", start);
        if (value == 0) fail("index must be >= 1", start);
        return value;
    }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }
    char get() { return text_[pos_++]; }

    [[noreturn]] void fail(std::string_view message) const { throw ParseError(message, pos_); }
    [[noreturn]] void fail(std::string_view message, std::size_t at) const { throw ParseError(message, at); }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses and canonicalizes an observable expression such as "s[1]*s[2] - 0.5 s[3]".
inline Observable parse_observable(std::string_view text) {
    try {
        return detail::ObservableParser(text).parse();
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(e.what(), 0);
    }
}

}  // namespace mising
