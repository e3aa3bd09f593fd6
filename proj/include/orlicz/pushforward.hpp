#pragma once

#include <cstddef>
#include <functional>
#include <utility>

#include "orlicz/grid.hpp"
#include "orlicz/potential.hpp"

namespace orlicz {

/// psi on nodes y_i = i*dy, dy = y_max/n_grid (n_grid + 1 nodes). Each node
/// carries the exact average of psi over its trapezoid cell, computed from the
/// sublevel measure, so the trapezoid mass equals |{phi <= y_max}| to rounding
/// and integrable singularities are handled without special cases.
GridDensity build_psi(const Potential& p, double y_max, std::size_t n_grid);

/// Pointwise sum over the preimage of 1/|phi'(s)|; +inf at critical points.
double psi_at(const Potential& p, double y);

/// (integral of f(phi(s)) ds, integral of f(y) psi(y) dy); f must vanish above y_max.
std::pair<double, double> change_of_variables_check(const Potential& p, const std::function<double(double)>& f,
                                                    double y_max, std::size_t n_grid = 1u << 14);

/// e^{alpha y} psi(y), normalized on the lattice. Throws when alpha >= alpha_max.
GridDensity tilt_density(const GridDensity& psi, double alpha, double alpha_max = kInf);

}  // namespace orlicz
