//
// Project rxncond
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <set>

#include "rxncond/interpret.hpp"

namespace rxncond {
namespace {

using Adjacency = std::vector<std::vector<std::size_t>>;

constexpr double kPi = std::numbers::pi;

// Shortest path from `from` to `to` avoiding the direct edge between them.
std::vector<std::size_t> path_avoiding_edge(const Adjacency &adj, std::size_t from,
                                            std::size_t to) {
  std::vector<std::size_t> parent(adj.size(), adj.size());
  std::queue<std::size_t> queue;
  parent[from] = from;
  queue.push(from);
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop();
    if (u == to)
      break;
    for (std::size_t v: adj[u]) {
      if (u == from && v == to)
        continue;
      if (parent[v] == adj.size()) {
        parent[v] = u;
        queue.push(v);
      }
    }
  }
  if (parent[to] == adj.size())
    return { };
  std::vector<std::size_t> path;
  for (std::size_t v = to; v != from; v = parent[v])
    path.push_back(v);
  path.push_back(from);
  std::reverse(path.begin(), path.end());
  return path;
}

// Smallest ring through every bond that closes a cycle, de-duplicated.
std::vector<std::vector<std::size_t>> find_rings(const Adjacency &adj,
                                                 std::span<const Bond> bonds) {
  std::vector<std::vector<std::size_t>> rings;
  std::set<std::vector<std::size_t>> seen;
  for (const Bond &b: bonds) {
    std::vector<std::size_t> ring = path_avoiding_edge(adj, b.begin, b.end);
    if (ring.size() < 3)
      continue;
    std::vector<std::size_t> key = ring;
    std::sort(key.begin(), key.end());
    if (seen.insert(key).second)
      rings.push_back(std::move(ring));
  }
  return rings;
}

double angle_of(const Point &from, const Point &to) {
  return std::atan2(to.y - from.y, to.x - from.x);
}

// Middle of the widest angular gap left by the placed neighbours of `u`.
double free_direction(const Adjacency &adj, const std::vector<Point> &pos,
                      const std::vector<bool> &placed, std::size_t u) {
  std::vector<double> angles;
  for (std::size_t v: adj[u]) {
    if (placed[v])
      angles.push_back(angle_of(pos[u], pos[v]));
  }
  if (angles.empty())
    return 0.0;
  if (angles.size() == 1)
    return angles[0] + kPi;
  std::sort(angles.begin(), angles.end());
  double best_gap = -1.0, best_dir = 0.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double a = angles[i];
    const double b = i + 1 < angles.size() ? angles[i + 1] : angles[0] + 2 * kPi;
    if (b - a > best_gap + 1e-9) {
      best_gap = b - a;
      best_dir = a + (b - a) / 2;
    }
  }
  return best_dir;
}

void place_ring(const std::vector<std::size_t> &ring, const Adjacency &adj,
                std::vector<Point> &pos, std::vector<bool> &placed, std::size_t anchor) {
  const std::size_t n = ring.size();
  const double step = 2 * kPi / static_cast<double>(n);

  // Rotate so the anchor comes first; prefer a placed ring neighbour second.
  std::vector<std::size_t> order(ring.begin(), ring.end());
  std::rotate(order.begin(), std::find(order.begin(), order.end(), anchor), order.end());
  if (!placed[order[1]] && placed[order[n - 1]])
    std::reverse(order.begin() + 1, order.end());

  Point center;
  double start = 0.0;
  double sign = 1.0;
  double radius = 1.0 / (2 * std::sin(kPi / static_cast<double>(n)));
  if (placed[order[1]]) {
    const Point a = pos[order[0]], b = pos[order[1]];
    const double side = std::max(std::hypot(b.x - a.x, b.y - a.y), 1e-6);
    radius = side / (2 * std::sin(kPi / static_cast<double>(n)));
    const double apothem = side / (2 * std::tan(kPi / static_cast<double>(n)));
    const Point mid { (a.x + b.x) / 2, (a.y + b.y) / 2 };
    const Point normal { -(b.y - a.y) / side, (b.x - a.x) / side };

    // Open the ring away from the atoms already drawn around the shared edge.
    Point crowd { 0.0, 0.0 };
    std::size_t count = 0;
    for (std::size_t end: { order[0], order[1] }) {
      for (std::size_t v: adj[end]) {
        if (placed[v] && v != order[0] && v != order[1]) {
          crowd.x += pos[v].x;
          crowd.y += pos[v].y;
          ++count;
        }
      }
    }
    double side_sign = 1.0;
    if (count > 0) {
      crowd.x /= static_cast<double>(count);
      crowd.y /= static_cast<double>(count);
      const double dot = (crowd.x - mid.x) * normal.x + (crowd.y - mid.y) * normal.y;
      side_sign = dot > 0 ? -1.0 : 1.0;
    }
    center = { mid.x + side_sign * normal.x * apothem, mid.y + side_sign * normal.y * apothem };
    start = angle_of(center, a);
    const double to_b = angle_of(center, b);
    const double forward = std::remainder(to_b - (start + step), 2 * kPi);
    sign = std::abs(forward) < 1e-6 ? 1.0 : -1.0;
  } else {
    const double dir = free_direction(adj, pos, placed, anchor);
    center = { pos[anchor].x + radius * std::cos(dir), pos[anchor].y + radius * std::sin(dir) };
    start = dir + kPi;
  }

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t v = order[k];
    if (placed[v])
      continue;
    const double a = start + sign * step * static_cast<double>(k);
    pos[v] = { center.x + radius * std::cos(a), center.y + radius * std::sin(a) };
    placed[v] = true;
  }
}

}  // namespace

std::vector<Point> layout_molecule(std::size_t num_atoms, std::span<const Bond> bonds) {
  Adjacency adj(num_atoms);
  for (const Bond &b: bonds) {
    adj[b.begin].push_back(b.end);
    adj[b.end].push_back(b.begin);
  }
  const std::vector<std::vector<std::size_t>> rings = find_rings(adj, bonds);
  std::vector<std::vector<std::size_t>> rings_of(num_atoms);
  for (std::size_t r = 0; r < rings.size(); ++r) {
    for (std::size_t v: rings[r])
      rings_of[v].push_back(r);
  }

  std::vector<Point> pos(num_atoms);
  std::vector<bool> placed(num_atoms, false);
  std::vector<bool> ring_done(rings.size(), false);
  double offset_x = 0.0;

  for (std::size_t root = 0; root < num_atoms; ++root) {
    if (placed[root])
      continue;
    pos[root] = { 0.0, 0.0 };
    placed[root] = true;
    std::vector<std::size_t> component;
    std::queue<std::size_t> queue;
    queue.push(root);
    std::vector<bool> queued(num_atoms, false);
    queued[root] = true;

    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop();
      component.push_back(u);
      for (std::size_t r: rings_of[u]) {
        if (!ring_done[r]) {
          place_ring(rings[r], adj, pos, placed, u);
          ring_done[r] = true;
        }
      }
      std::vector<std::size_t> fresh;
      for (std::size_t v: adj[u]) {
        if (!placed[v])
          fresh.push_back(v);
      }
      if (!fresh.empty()) {
        // Spread new neighbours across the widest free gap.
        const double dir = free_direction(adj, pos, placed, u);
        const bool has_placed = std::any_of(adj[u].begin(), adj[u].end(),
                                            [&](std::size_t v) { return placed[v]; });
        const double spread = has_placed ? 2 * kPi / 3 : 2 * kPi;
        const double count = static_cast<double>(fresh.size());
        for (std::size_t k = 0; k < fresh.size(); ++k) {
          double a;
          if (has_placed) {
            a = fresh.size() == 1
                ? dir
                : dir - spread / 2 + spread * static_cast<double>(k) / (count - 1);
          } else {
            a = spread * static_cast<double>(k) / count;
          }
          pos[fresh[k]] = { pos[u].x + std::cos(a), pos[u].y + std::sin(a) };
          placed[fresh[k]] = true;
        }
      }
      for (std::size_t v: adj[u]) {
        if (!queued[v]) {
          queued[v] = true;
          queue.push(v);
        }
      }
    }

    double min_x = 0.0, max_x = 0.0;
    bool first = true;
    for (std::size_t v: component) {
      if (first || pos[v].x < min_x) min_x = pos[v].x;
      if (first || pos[v].x > max_x) max_x = pos[v].x;
      first = false;
    }
    for (std::size_t v: component)
      pos[v].x += offset_x - min_x;
    offset_x += (max_x - min_x) + 1.5;
  }
  return pos;
}

}  // namespace rxncond
