#include "magsim/quantity.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "magsim/errors.hpp"

namespace magsim {

namespace {

struct UnitPart {
    double factor = 1.0;
    std::string base;
};

double prefix_factor(char p) {
    switch (p) {
        case 'n': return 1e-9;
        case 'u': return 1e-6;
        case 'm': return 1e-3;
        case 'k': return 1e3;
        case 'M': return 1e6;
        case 'G': return 1e9;
        default: return 0.0;
    }
}

bool is_base(std::string_view s) {
    return s == "s" || s == "T" || s == "m" || s == "Hz" || s == "K";
}

UnitPart parse_unit_part(std::string_view token, std::string_view original) {
    // Accept the micro sign as a prefix.
    std::string t;
    for (size_t i = 0; i < token.size();) {
        if (token.compare(i, 2, "\xc2\xb5") == 0 || token.compare(i, 2, "\xce\xbc") == 0) {
            t += 'u';
            i += 2;
        } else {
            t += token[i];
            ++i;
        }
    }
    if (is_base(t)) return {1.0, t};
    if (t.size() >= 2) {
        const double f = prefix_factor(t[0]);
        const std::string rest = t.substr(1);
        if (f != 0.0 && is_base(rest)) return {f, rest};
    }
    throw ConfigError("unrecognized unit '" + t + "' in quantity '" + std::string(original) + "'");
}

}  // namespace

double parse_quantity(std::string_view text, std::string_view expected_dimension) {
    size_t begin = 0, end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    const std::string_view body = text.substr(begin, end - begin);
    if (body.empty()) throw ConfigError("empty quantity");
    if (body == "inf" || body == "+inf" || body == "infinity")
        return std::numeric_limits<double>::infinity();

    double value = 0.0;
    const char* first = body.data();
    const char* last = body.data() + body.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc())
        throw ConfigError("cannot parse number in quantity '" + std::string(body) + "'");
    std::string_view unit(ptr, static_cast<size_t>(last - ptr));
    while (!unit.empty() && std::isspace(static_cast<unsigned char>(unit.front())))
        unit.remove_prefix(1);

    if (unit.empty()) return value;  // bare number: already SI

    std::string dim;
    const size_t slash = unit.find('/');
    if (slash == std::string_view::npos) {
        const UnitPart part = parse_unit_part(unit, body);
        value *= part.factor;
        dim = part.base;
    } else {
        const UnitPart num = parse_unit_part(unit.substr(0, slash), body);
        const UnitPart den = parse_unit_part(unit.substr(slash + 1), body);
        value *= num.factor / den.factor;
        dim = num.base + "/" + den.base;
    }
    if (!expected_dimension.empty() && dim != expected_dimension)
        throw ConfigError("quantity '" + std::string(body) + "' has dimension " + dim +
                          ", expected " + std::string(expected_dimension));
    return value;
}

std::string format_quantity(double value, std::string_view dimension) {
    std::ostringstream os;
    os.precision(12);
    os << value;
    if (!dimension.empty()) os << ' ' << dimension;
    return os.str();
}

}  // namespace magsim
