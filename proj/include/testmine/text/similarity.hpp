#pragma once

#include <set>
#include <span>
#include <string>

namespace testmine::text {

/// |A ∩ B| / |A ∪ B|, or 0 when both sets are empty.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

/// Cosine of the angle between two equal-length vectors. Throws
/// Error(undefined_similarity) if either is all zeros, Error(validation)
/// on a dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

}  // namespace testmine::text
