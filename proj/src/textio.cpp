#include "nml/textio.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "nml/error.hpp"

namespace nml {

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

template <typename T>
T parse_with(std::string_view s, std::string_view what) {
    s = trim(s);
    T value{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw format_error(detail::msg("cannot parse ", what, " from '", s, "'"));
    return value;
}

} // namespace

double parse_double(std::string_view s, std::string_view what) {
    return parse_with<double>(s, what);
}

long long parse_ll(std::string_view s, std::string_view what) {
    return parse_with<long long>(s, what);
}

unsigned long long parse_ull(std::string_view s, std::string_view what) {
    return parse_with<unsigned long long>(s, what);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == delim) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::vector<long long> parse_int_list(std::string_view s, std::string_view what) {
    std::vector<long long> out;
    for (const auto piece : split(s, ',')) {
        const auto tok = trim(piece);
        if (tok.empty()) continue;
        const auto dash = tok.find('-', 1); // allow leading '-' of a negative number
        if (dash != std::string_view::npos) {
            const long long lo = parse_ll(tok.substr(0, dash), what);
            const long long hi = parse_ll(tok.substr(dash + 1), what);
            if (lo > hi) throw format_error(detail::msg("empty range '", tok, "' in ", what));
            for (long long v = lo; v <= hi; ++v) out.push_back(v);
        } else {
            out.push_back(parse_ll(tok, what));
        }
    }
    return out;
}

std::vector<double> parse_double_grid(std::string_view s, std::string_view what) {
    s = trim(s);
    const auto colons = split(s, ':');
    if (colons.size() == 3) {
        const double start = parse_double(colons[0], what);
        const double step = parse_double(colons[1], what);
        const double end = parse_double(colons[2], what);
        if (step <= 0.0) throw format_error(detail::msg(what, ": grid step must be > 0"));
        std::vector<double> out;
        for (int i = 0;; ++i) {
            const double v = start + step * i;
            if (v > end + 1e-9) break;
            out.push_back(v);
        }
        if (out.empty()) throw format_error(detail::msg(what, ": empty grid '", s, "'"));
        return out;
    }
    std::vector<double> out;
    for (const auto piece : split(s, ',')) {
        const auto tok = trim(piece);
        if (!tok.empty()) out.push_back(parse_double(tok, what));
    }
    if (out.empty()) throw format_error(detail::msg(what, ": empty list '", s, "'"));
    return out;
}

} // namespace nml
