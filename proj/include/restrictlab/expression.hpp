#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "restrictlab/dual.hpp"
#include "restrictlab/errors.hpp"

namespace restrictlab {

/// Arithmetic expression over a fixed list of named variables, compiled to
/// postfix form so it can be evaluated on any scalar type (double, Jet,
/// Dual, HyperDual).
///
/// Grammar: sums and differences of products and quotients of factors;
/// a factor is a numeric literal, a variable, a parenthesized expression,
/// a unary minus, sin(...) or cos(...), or a factor raised to an integer
/// literal with '^'.
class Expression {
public:
    enum class OpCode { Constant, Variable, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos };
    struct Op {
        OpCode code;
        double value = 0.0;  // Constant
        int index = 0;       // Variable slot or Pow exponent
    };

    /// Throws ParseError with the offending position on malformed input.
    static Expression parse(std::string_view text, const std::vector<std::string>& variables);

    const std::string& source() const { return source_; }
    std::size_t variable_count() const { return n_vars_; }

    /// Highest polynomial degree, or -1 when a division makes the
    /// expression non-polynomial.
    int polynomial_degree() const;

    template <typename T, std::size_t N>
    T evaluate(const std::array<T, N>& vars) const {
        using std::cos;
        using std::sin;
        std::vector<T> stack;
        stack.reserve(ops_.size());
        for (const auto& op : ops_) {
            switch (op.code) {
            case OpCode::Constant: stack.emplace_back(op.value); break;
            case OpCode::Variable: stack.push_back(vars[static_cast<std::size_t>(op.index)]); break;
            case OpCode::Neg: stack.back() = -stack.back(); break;
            case OpCode::Pow: stack.back() = ipow(stack.back(), op.index); break;
            case OpCode::Sin: stack.back() = sin(stack.back()); break;
            case OpCode::Cos: stack.back() = cos(stack.back()); break;
            default: {
                T rhs = std::move(stack.back());
                stack.pop_back();
                T& lhs = stack.back();
                if (op.code == OpCode::Add) lhs = lhs + rhs;
                else if (op.code == OpCode::Sub) lhs = lhs - rhs;
                else if (op.code == OpCode::Mul) lhs = lhs * rhs;
                else lhs = lhs / rhs;
            }
            }
        }
        return stack.back();
    }

private:
    std::string source_;
    std::size_t n_vars_ = 0;
    std::vector<Op> ops_;
};

}  // namespace restrictlab
