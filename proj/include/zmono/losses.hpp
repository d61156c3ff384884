#pragma once

#include <vector>

#include "zmono/heightmap.hpp"

namespace zmono {

// Loss value plus its gradient with respect to every predicted height
// (R^2 entries, same layout as HeightMap::heights).
struct LossTerm {
  double value = 0.0;
  std::vector<double> grad;
};

// Differences below this count as ties. Root solves leave ~1e-16 of noise
// that Adam, being scale free, would otherwise grow into full steps.
inline constexpr double kTieTolerance = 1e-9;

// Mean over valid target cells of |pred - target|. Subgradient 0 at ties.
LossTerm loss_height(const HeightMap& pred, const HeightMap& target);

// Mean over interior cells of (h - mean of its 4 neighbors)^2. Residuals
// that tie with zero carry no gradient.
LossTerm loss_laplacian(const HeightMap& pred);

// Unit normals n ~ (-dh/dx, -dh/dy, 1) from central differences (one-sided
// at the border, spacing 2/R in normalized units); the loss is
//   mean ||n(u,v) - n(u+1,v)|| + mean ||n(u,v) - n(u,v+1)||.
// Pairs whose normals tie contribute a zero subgradient.
LossTerm loss_normal_tv(const HeightMap& pred);

}  // namespace zmono
