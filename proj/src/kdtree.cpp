#include "zmono/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace zmono {
namespace {
constexpr std::uint32_t kLeafSize = 8;
}

KdTree::KdTree(std::span<const Vec3> points) : pts_(points.begin(), points.end()) {
  if (pts_.empty()) throw std::invalid_argument("kd-tree over an empty point set");
  if (pts_.size() >= std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("too many points");
  order_.resize(pts_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * pts_.size() / kLeafSize + 1);
  build(0, static_cast<std::uint32_t>(pts_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  if (end - begin <= kLeafSize) return id;
  Bounds3 b;
  for (std::uint32_t i = begin; i < end; ++i) b.extend(pts_[order_[i]]);
  const Vec3 e = b.extent();
  const int axis = e.x >= e.y && e.x >= e.z ? 0 : (e.y >= e.z ? 1 : 2);
  if (e[axis] == 0.0) return id;  // all coincident: keep as a leaf
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t c) { return pts_[a][axis] < pts_[c][axis]; });
  const double split = pts_[order_[mid]][axis];
  const std::int32_t l = build(begin, mid);
  const std::int32_t r = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

void KdTree::search(std::int32_t n, const Vec3& q, Hit& best) const {
  const Node& node = nodes_[n];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const Vec3 d = pts_[order_[i]] - q;
      const double d2 = dot(d, d);
      // Equal distances resolve to the lower index, matching a linear scan.
      if (d2 < best.dist2 || (d2 == best.dist2 && order_[i] < best.index)) best = {order_[i], d2};
    }
    return;
  }
  // Left holds coordinates <= split, right holds >= split.
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  search(near, q, best);
  if (diff * diff <= best.dist2) search(far, q, best);
}

KdTree::Hit KdTree::nearest(const Vec3& q) const {
  Hit best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
  search(0, q, best);
  return best;
}

}  // namespace zmono
