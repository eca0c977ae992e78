#include "restrictlab/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <string>

namespace restrictlab {

namespace {

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& vars) : text_(text), vars_(vars) {}

    std::vector<Expression::Op> run() {
        parse_sum();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
        return std::move(ops_);
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("expression '" + std::string(text_) + "' at offset " + std::to_string(pos_) + ": " + what);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void parse_sum() {
        parse_product();
        for (;;) {
            if (accept('+')) {
                parse_product();
                ops_.push_back({Expression::OpCode::Add});
            } else if (accept('-')) {
                parse_product();
                ops_.push_back({Expression::OpCode::Sub});
            } else {
                return;
            }
        }
    }

    void parse_product() {
        parse_unary();
        for (;;) {
            if (accept('*')) {
                parse_unary();
                ops_.push_back({Expression::OpCode::Mul});
            } else if (accept('/')) {
                parse_unary();
                ops_.push_back({Expression::OpCode::Div});
            } else {
                return;
            }
        }
    }

    void parse_unary() {
        if (accept('-')) {
            parse_unary();
            ops_.push_back({Expression::OpCode::Neg});
            return;
        }
        if (accept('+')) {
            parse_unary();
            return;
        }
        parse_power();
    }

    void parse_power() {
        parse_atom();
        if (accept('^')) {
            skip_space();
            bool negative = false;
            bool paren = accept('(');
            if (accept('-')) negative = true;
            skip_space();
            const std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (start == pos_) fail("exponent must be an integer literal");
            int n = 0;
            std::from_chars(text_.data() + start, text_.data() + pos_, n);
            if (paren && !accept(')')) fail("missing ')' after exponent");
            if (pos_ < text_.size() && text_[pos_] == '.') fail("exponent must be an integer literal");
            ops_.push_back({Expression::OpCode::Pow, 0.0, negative ? -n : n});
        }
    }

    void parse_atom() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            parse_sum();
            if (!accept(')')) fail("missing ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
                ++pos_;
            }
            if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
                std::size_t p = pos_ + 1;
                if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
                if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                    pos_ = p;
                    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
                }
            }
            double value = 0.0;
            const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
            if (res.ec != std::errc() || res.ptr != text_.data() + pos_) fail("bad numeric literal");
            ops_.push_back({Expression::OpCode::Constant, value, 0});
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            const std::string_view name = text_.substr(start, pos_ - start);
            if (name == "sin" || name == "cos") {
                if (!accept('(')) fail("expected '(' after " + std::string(name));
                parse_sum();
                if (!accept(')')) fail("missing ')'");
                ops_.push_back({name == "sin" ? Expression::OpCode::Sin : Expression::OpCode::Cos});
                return;
            }
            const auto it = std::find(vars_.begin(), vars_.end(), name);
            if (it == vars_.end()) {
                pos_ = start;
                fail("unknown variable '" + std::string(name) + "'");
            }
            ops_.push_back({Expression::OpCode::Variable, 0.0, static_cast<int>(it - vars_.begin())});
            return;
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    std::string_view text_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
    std::vector<Expression::Op> ops_;
};

}  // namespace

Expression Expression::parse(std::string_view text, const std::vector<std::string>& variables) {
    Expression e;
    e.source_ = std::string(text);
    e.n_vars_ = variables.size();
    e.ops_ = Parser(text, variables).run();
    return e;
}

int Expression::polynomial_degree() const {
    std::vector<int> stack;
    for (const auto& op : ops_) {
        switch (op.code) {
        case OpCode::Constant: stack.push_back(0); break;
        case OpCode::Variable: stack.push_back(1); break;
        case OpCode::Neg: break;
        case OpCode::Sin:
        case OpCode::Cos: stack.back() = -1; break;
        case OpCode::Pow:
            if (op.index < 0 || stack.back() < 0) stack.back() = -1;
            else stack.back() *= op.index;
            break;
        default: {
            const int rhs = stack.back();
            stack.pop_back();
            int& lhs = stack.back();
            if (lhs < 0 || rhs < 0) lhs = -1;
            else if (op.code == OpCode::Mul) lhs += rhs;
            else if (op.code == OpCode::Div) lhs = rhs == 0 ? lhs : -1;
            else lhs = std::max(lhs, rhs);
        }
        }
    }
    return stack.empty() ? 0 : stack.back();
}

}  // namespace restrictlab
