#include "shapeforge/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace shapeforge {

namespace {

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
}

// Positive when d lies strictly inside the circumcircle of the ccw triangle (a, b, c).
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  return alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) + clift * (adx * bdy - ady * bdx);
}

struct Tri {
  std::array<int, 3> v;
  std::array<int, 3> n;  // n[i] is across the edge opposite v[i]
};

class Triangulator {
 public:
  explicit Triangulator(const std::vector<Vec2>& points) : pts_(points) {
    Vec2 lo = pts_.front(), hi = pts_.front();
    for (const auto& p : pts_) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const Vec2 mid = 0.5 * (lo + hi);
    const double span = std::max((hi - lo).maxCoeff(), 1e-300);
    scale_ = span;
    n_real_ = static_cast<int>(pts_.size());
    pts_.push_back(mid + Vec2(-100.0 * span, -100.0 * span));
    pts_.push_back(mid + Vec2(100.0 * span, -100.0 * span));
    pts_.push_back(mid + Vec2(0.0, 100.0 * span));
    tris_.push_back({{n_real_, n_real_ + 1, n_real_ + 2}, {-1, -1, -1}});
  }

  void insert_all() {
    for (int k : insertion_order()) insert(k);
  }

  void recover(const std::vector<std::pair<int, int>>& segments) {
    for (const auto& [a, b] : segments) constrained_.insert(edge_key(a, b));
    std::unordered_set<std::uint64_t> present;
    for (const auto& t : tris_) {
      for (int k = 0; k < 3; ++k) present.insert(edge_key(t.v[(k + 1) % 3], t.v[(k + 2) % 3]));
    }
    for (const auto& [a, b] : segments) {
      if (!present.count(edge_key(a, b))) force_edge(a, b);
    }
    restore_delaunay();
  }

  std::vector<std::array<int, 3>> real_triangles() const {
    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris_) {
      if (t.v[0] >= n_real_ || t.v[1] >= n_real_ || t.v[2] >= n_real_) continue;
      out.push_back(t.v);
    }
    return out;
  }

 private:
  std::vector<int> insertion_order() const {
    // Snake order over horizontal bands keeps point-location walks short.
    Vec2 lo = pts_.front();
    for (int i = 0; i < n_real_; ++i) lo = lo.cwiseMin(pts_[i]);
    const double band = scale_ / std::max(1.0, std::sqrt(static_cast<double>(n_real_)));
    std::vector<int> order(n_real_);
    std::iota(order.begin(), order.end(), 0);
    auto row = [&](int i) { return static_cast<long>(std::floor((pts_[i].y() - lo.y()) / band)); };
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      const long ri = row(i), rj = row(j);
      if (ri != rj) return ri < rj;
      const double xi = pts_[i].x(), xj = pts_[j].x();
      if (xi != xj) return (ri % 2 == 0) ? xi < xj : xi > xj;
      return i < j;
    });
    return order;
  }

  void replace_neighbor(int t, int old_n, int new_n) {
    if (t < 0) return;
    for (int& x : tris_[t].n) {
      if (x == old_n) {
        x = new_n;
        return;
      }
    }
  }

  int locate(const Vec2& p) {
    int t = last_;
    const int cap = 4 * static_cast<int>(tris_.size()) + 16;
    for (int step = 0; step < cap; ++step) {
      const Tri& tri = tris_[t];
      bool moved = false;
      for (int kk = 0; kk < 3; ++kk) {
        const int k = (kk + step) % 3;
        const Vec2& a = pts_[tri.v[(k + 1) % 3]];
        const Vec2& b = pts_[tri.v[(k + 2) % 3]];
        if (orient(a, b, p) < 0.0 && tri.n[k] >= 0) {
          t = tri.n[k];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    // Walk failed to terminate; fall back to a scan.
    for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
      const Tri& tri = tris_[i];
      if (orient(pts_[tri.v[0]], pts_[tri.v[1]], p) >= 0 && orient(pts_[tri.v[1]], pts_[tri.v[2]], p) >= 0 &&
          orient(pts_[tri.v[2]], pts_[tri.v[0]], p) >= 0) {
        return i;
      }
    }
    throw std::runtime_error("delaunay: point location failed");
  }

  void insert(int k) {
    const Vec2& p = pts_[k];
    const int t = locate(p);
    // Points on (or numerically on) an edge split that edge instead of the triangle.
    for (int i = 0; i < 3; ++i) {
      const Vec2& a = pts_[tris_[t].v[(i + 1) % 3]];
      const Vec2& b = pts_[tris_[t].v[(i + 2) % 3]];
      if (std::abs(orient(a, b, p)) <= 1e-12 * (b - a).norm() * ((p - a).norm() + (p - b).norm()) &&
          tris_[t].n[i] >= 0) {
        split_edge(t, i, k);
        return;
      }
    }
    split_triangle(t, k);
  }

  void split_triangle(int t, int k) {
    const Tri old = tris_[t];
    const int a = old.v[0], b = old.v[1], c = old.v[2];
    const int na = old.n[0], nb = old.n[1], nc = old.n[2];
    const int t0 = t;
    const int t1 = static_cast<int>(tris_.size());
    const int t2 = t1 + 1;
    tris_[t0] = {{k, b, c}, {na, t1, t2}};
    tris_.push_back({{a, k, c}, {t0, nb, t2}});
    tris_.push_back({{a, b, k}, {t0, t1, nc}});
    replace_neighbor(nb, t, t1);
    replace_neighbor(nc, t, t2);
    last_ = t0;
    legalize(t0, 0);
    legalize(t1, 1);
    legalize(t2, 2);
  }

  void split_edge(int t, int i, int k) {
    const Tri tt = tris_[t];
    const int u = tt.n[i];
    const Tri uu = tris_[u];
    int j = 0;
    while (uu.n[j] != t) ++j;
    const int p0 = tt.v[i], p1 = tt.v[(i + 1) % 3], p2 = tt.v[(i + 2) % 3];
    const int q = uu.v[j];
    const int A = t, C = u;
    const int B = static_cast<int>(tris_.size());
    const int D = B + 1;
    const int ext_a = tt.n[(i + 1) % 3], ext_b = tt.n[(i + 2) % 3];
    const int ext_c = uu.n[(j + 1) % 3], ext_d = uu.n[(j + 2) % 3];
    tris_[A] = {{k, p2, p0}, {ext_a, B, D}};
    tris_.push_back({{k, p0, p1}, {ext_b, C, A}});
    tris_[C] = {{k, p1, q}, {ext_c, D, B}};
    tris_.push_back({{k, q, p2}, {ext_d, A, C}});
    replace_neighbor(ext_b, t, B);
    replace_neighbor(ext_d, u, D);
    last_ = A;
    legalize(A, 0);
    legalize(B, 0);
    legalize(C, 0);
    legalize(D, 0);
  }

  // Flips the edge opposite v[i] of triangle t. The new triangles keep v[i]
  // at local index 0.
  std::pair<int, int> flip(int t, int i) {
    const Tri tt = tris_[t];
    const int u = tt.n[i];
    const Tri uu = tris_[u];
    int j = 0;
    while (uu.n[j] != t) ++j;
    const int p0 = tt.v[i], p1 = tt.v[(i + 1) % 3], p2 = tt.v[(i + 2) % 3];
    const int q = uu.v[j];
    const int t_n01 = tt.n[(i + 2) % 3];  // across (p0, p1)
    const int t_n20 = tt.n[(i + 1) % 3];  // across (p2, p0)
    const int u_n1q = uu.n[(j + 1) % 3];  // across (p1, q)
    const int u_nq2 = uu.n[(j + 2) % 3];  // across (q, p2)
    tris_[t] = {{p0, p1, q}, {u_n1q, u, t_n01}};
    tris_[u] = {{p0, q, p2}, {u_nq2, t_n20, t}};
    replace_neighbor(u_n1q, u, t);
    replace_neighbor(t_n20, t, u);
    return {t, u};
  }

  bool convex_quad(int t, int i) const {
    const Tri& tt = tris_[t];
    const int u = tt.n[i];
    if (u < 0) return false;
    const Tri& uu = tris_[u];
    int j = 0;
    while (uu.n[j] != t) ++j;
    const Vec2& p0 = pts_[tt.v[i]];
    const Vec2& p1 = pts_[tt.v[(i + 1) % 3]];
    const Vec2& p2 = pts_[tt.v[(i + 2) % 3]];
    const Vec2& q = pts_[uu.v[j]];
    return orient(p0, p1, q) > 0.0 && orient(p0, q, p2) > 0.0;
  }

  bool needs_flip(int t, int i) const {
    const Tri& tt = tris_[t];
    const int u = tt.n[i];
    if (u < 0) return false;
    if (constrained_.count(edge_key(tt.v[(i + 1) % 3], tt.v[(i + 2) % 3]))) return false;
    const Tri& uu = tris_[u];
    int j = 0;
    while (uu.n[j] != t) ++j;
    const Vec2& a = pts_[tt.v[0]];
    const Vec2& b = pts_[tt.v[1]];
    const Vec2& c = pts_[tt.v[2]];
    const Vec2& q = pts_[uu.v[j]];
    const double l2 = (b - a).squaredNorm() + (c - b).squaredNorm() + (a - c).squaredNorm();
    return incircle(a, b, c, q) > 1e-12 * l2 * l2 && convex_quad(t, i);
  }

  void legalize(int t, int i) {
    std::vector<std::pair<int, int>> stack{{t, i}};
    while (!stack.empty()) {
      auto [tt, ii] = stack.back();
      stack.pop_back();
      if (!needs_flip(tt, ii)) continue;
      auto [a, b] = flip(tt, ii);
      stack.emplace_back(a, 0);
      stack.emplace_back(b, 0);
    }
  }

  bool has_edge(int a, int b) const {
    for (const auto& t : tris_) {
      for (int k = 0; k < 3; ++k) {
        const int x = t.v[(k + 1) % 3], y = t.v[(k + 2) % 3];
        if ((x == a && y == b) || (x == b && y == a)) return true;
      }
    }
    return false;
  }

  bool crosses(int x, int y, int a, int b) const {
    if (x == a || x == b || y == a || y == b) return false;
    const Vec2 &pa = pts_[a], &pb = pts_[b], &px = pts_[x], &py = pts_[y];
    return orient(pa, pb, px) * orient(pa, pb, py) < 0.0 && orient(px, py, pa) * orient(px, py, pb) < 0.0;
  }

  void force_edge(int a, int b) {
    const int cap = 100000;
    for (int pass = 0; pass < cap; ++pass) {
      bool any = false;
      for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
        for (int k = 0; k < 3; ++k) {
          const int u = tris_[t].n[k];
          if (u < t) continue;  // visit each interior edge once
          const int x = tris_[t].v[(k + 1) % 3], y = tris_[t].v[(k + 2) % 3];
          if (!crosses(x, y, a, b)) continue;
          any = true;
          if (convex_quad(t, k)) {
            flip(t, k);
            break;
          }
        }
      }
      if (!any) break;
    }
    if (!has_edge(a, b)) throw std::runtime_error("delaunay: failed to recover constraint segment");
  }

  void restore_delaunay() {
    for (int sweep = 0; sweep < 1000; ++sweep) {
      bool flipped = false;
      for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
        for (int k = 0; k < 3; ++k) {
          if (tris_[t].n[k] > t && needs_flip(t, k)) {
            flip(t, k);
            flipped = true;
          }
        }
      }
      if (!flipped) return;
    }
  }

  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  std::unordered_set<std::uint64_t> constrained_;
  int n_real_ = 0;
  int last_ = 0;
  double scale_ = 1.0;
};

}  // namespace

std::vector<std::array<int, 3>> constrained_delaunay(const std::vector<Vec2>& points,
                                                     const std::vector<std::pair<int, int>>& segments) {
  if (points.size() < 3) throw std::invalid_argument("delaunay: need at least three points");
  Triangulator tri(points);
  tri.insert_all();
  tri.recover(segments);
  return tri.real_triangles();
}

}  // namespace shapeforge
