#include "testmine/text/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "testmine/error.hpp"

namespace testmine::text {

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t shared = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++shared;
            ++ia;
            ++ib;
        }
    }
    const std::size_t uni = a.size() + b.size() - shared;
    return static_cast<double>(shared) / static_cast<double>(uni);
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw Error(ErrorCode::validation, "cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                                               std::to_string(v.size()) + ")");
    }
    double dot = 0, nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) {
        throw Error(ErrorCode::undefined_similarity, "cosine: zero vector");
    }
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

}  // namespace testmine::text
