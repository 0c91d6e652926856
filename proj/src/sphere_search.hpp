#pragma once

#include "chaosx/homog.hpp"

namespace chaosx::homog::detail {

// Surface measure of S^{d-1}.
double sphere_area(int d);

// Chart angles, Jacobian and chart Hessian determinant at a maximizer; the
// chart is rotated when the natural one is near a pole.
Maximizer describe_point(const HomogeneousSpec& spec, const Vec& e, bool closed_form);

// Multi-start maximization on the sphere, clustering, rank detection and
// (case ii) quadrature over the maximizer manifold.
SphereAnalysis analyze_numeric(const HomogeneousSpec& spec, const AnalysisOptions& opts);

}  // namespace chaosx::homog::detail
