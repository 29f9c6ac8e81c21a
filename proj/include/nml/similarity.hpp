#pragma once

#include <string_view>

#include "nml/error.hpp"

namespace nml {

enum class Similarity { inner_product, cosine };

inline std::string_view to_string(Similarity s) {
    return s == Similarity::inner_product ? "inner_product" : "cosine";
}

inline Similarity parse_similarity(std::string_view s) {
    if (s == "inner_product") return Similarity::inner_product;
    if (s == "cosine") return Similarity::cosine;
    throw config_error(detail::msg("unknown similarity '", s, "' (expected inner_product|cosine)"));
}

} // namespace nml
