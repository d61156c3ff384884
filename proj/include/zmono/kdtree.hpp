#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zmono/geom.hpp"

namespace zmono {

// Exact 3-d nearest-neighbour index (median splits on the widest axis).
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  struct Hit {
    std::size_t index = 0;
    double dist2 = 0.0;
  };
  Hit nearest(const Vec3& q) const;
  std::size_t size() const { return pts_.size(); }

 private:
  struct Node {
    std::uint32_t begin = 0, end = 0;  // range in order_
    std::int32_t left = -1, right = -1;
    int axis = 0;
    double split = 0.0;
  };
  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& q, Hit& best) const;

  std::vector<Vec3> pts_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace zmono
