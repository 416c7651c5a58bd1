#include "structlim/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace structlim {

std::string rational_string(const Rational& q) {
    std::string s = numerator(q).str();
    if (denominator(q) != 1) {
        s += '/';
        s += denominator(q).str();
    }
    return s;
}

Rational parse_rational(std::string_view text) {
    auto fail = [&] {
        throw std::invalid_argument("not a rational: '" + std::string(text) + "'");
    };
    if (text.empty()) fail();

    auto slash = text.find('/');
    if (slash != std::string_view::npos) {
        std::string num(text.substr(0, slash));
        std::string den(text.substr(slash + 1));
        if (num.empty() || den.empty()) fail();
        try {
            BigInt n(num), d(den);
            if (d == 0) throw std::invalid_argument("zero denominator: '" + std::string(text) + "'");
            return Rational(n, d);
        } catch (const std::invalid_argument&) {
            throw;
        } catch (...) {
            fail();
        }
    }

    auto dot = text.find('.');
    if (dot != std::string_view::npos) {
        std::string head(text.substr(0, dot));
        std::string tail(text.substr(dot + 1));
        if (tail.empty()) fail();
        for (char c : tail)
            if (!std::isdigit(static_cast<unsigned char>(c))) fail();
        bool negative = !head.empty() && head[0] == '-';
        if (!head.empty() && (head[0] == '+' || head[0] == '-')) head.erase(0, 1);
        if (head.empty()) head = "0";
        try {
            BigInt scale = 1;
            for (std::size_t i = 0; i < tail.size(); ++i) scale *= 10;
            BigInt n = BigInt(head) * scale + BigInt(tail);
            if (negative) n = -n;
            return Rational(n, scale);
        } catch (...) {
            fail();
        }
    }

    try {
        return Rational(BigInt(std::string(text)));
    } catch (...) {
        fail();
    }
    return Rational();  // unreachable
}

double to_double(const Rational& q) {
    return q.convert_to<double>();
}

BigInt pow2(unsigned e) {
    return BigInt(1) << e;
}

}  // namespace structlim
