#pragma once

#include <cstdint>

#include "convex_order/measures.hpp"

namespace convex_order {

struct MeasurePair {
  DiscreteMeasure mu;
  DiscreteMeasure nu;
};

/// mu = N(0, sigma^2 I), nu = N(0, I): n samples each, both recentred to
/// zero mean so finite-sample drift in the means does not masquerade as an
/// order violation.
MeasurePair gaussian_samples(int dim, double sigma, int n, std::uint64_t seed);

/// One-dimensional variant binned into `bins` equal cells over the pooled
/// sample range; mu and nu share the bin centres.
MeasurePair gaussian_histograms(double sigma, int n, int bins, std::uint64_t seed);

/// mu = (delta_{-1-s} + delta_{1+s}) / 2, nu = (delta_{-1} + delta_1) / 2.
MeasurePair two_point(double s);

/// mu = uniform on the cross {(+-1, 0), (0, +-1)}, nu = the cross scaled by 1 + s.
MeasurePair cross(double s);

}  // namespace convex_order
