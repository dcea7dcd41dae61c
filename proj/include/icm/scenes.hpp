#pragma once

// Two-object polygonal scenes: visible-edge construction, support-line
// counting, and rotation-randomized inference of which object is in front.
//
// Polygons may be non-convex as long as they are simple; a back edge keeps
// exactly the parts of it that are not strictly inside the front polygon.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "icm/error.hpp"
#include "icm/rng.hpp"

namespace icm::scenes {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

inline Point rotate(Point p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

struct Segment {
  Point a;
  Point b;
  int owner = 0;  // 0 = back object, 1 = front object
  double length() const { return norm(b - a); }
};

namespace detail {

inline bool segments_cross_properly(Point p, Point q, Point r, Point s) {
  const double d1 = cross(q - p, r - p), d2 = cross(q - p, s - p);
  const double d3 = cross(s - r, p - r), d4 = cross(s - r, q - r);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

inline double point_segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double l2 = dot(ab, ab);
  const double t = l2 > 0.0 ? std::clamp(dot(p - a, ab) / l2, 0.0, 1.0) : 0.0;
  return norm(p - (a + t * ab));
}

}  // namespace detail

/// Simple polygon, vertices counterclockwise, in the object's own frame.
class Polygon {
 public:
  Polygon() = default;
  explicit Polygon(std::vector<Point> vertices, std::string label = {})
      : v_(std::move(vertices)), label_(std::move(label)) {
    if (v_.size() < 3) throw DataError("invalid polygon: needs at least 3 vertices");
    const double a = signed_area();
    double scale = 0.0;
    for (const auto& p : v_) scale = std::max(scale, std::max(std::abs(p.x), std::abs(p.y)));
    if (!(std::abs(a) > 1e-12 * std::max(scale * scale, 1e-300)))
      throw DataError("invalid polygon: zero area");
    if (a < 0.0) throw DataError("invalid polygon: vertices must be counterclockwise");
    const std::size_t n = v_.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (norm(v_[(i + 1) % n] - v_[i]) <= 1e-12 * scale)
        throw DataError("invalid polygon: repeated vertex");
      for (std::size_t j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;
        if (detail::segments_cross_properly(v_[i], v_[(i + 1) % n], v_[j], v_[(j + 1) % n]))
          throw DataError("invalid polygon: edges self-intersect");
      }
    }
  }

  const std::vector<Point>& vertices() const noexcept { return v_; }
  std::size_t size() const noexcept { return v_.size(); }
  const std::string& label() const noexcept { return label_; }

  double signed_area() const {
    double a = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i) a += cross(v_[i], v_[(i + 1) % v_.size()]);
    return 0.5 * a;
  }

  Point centroid() const {
    double a = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i) {
      const Point p = v_[i], q = v_[(i + 1) % v_.size()];
      const double c = cross(p, q);
      a += c;
      cx += (p.x + q.x) * c;
      cy += (p.y + q.y) * c;
    }
    return {cx / (3.0 * a), cy / (3.0 * a)};
  }

  bool is_convex() const {
    for (std::size_t i = 0; i < v_.size(); ++i) {
      const Point p = v_[i], q = v_[(i + 1) % v_.size()], r = v_[(i + 2) % v_.size()];
      if (cross(q - p, r - q) <= 0.0) return false;
    }
    return true;
  }

  std::vector<Segment> edges(int owner = 0) const {
    std::vector<Segment> out;
    for (std::size_t i = 0; i < v_.size(); ++i) out.push_back({v_[i], v_[(i + 1) % v_.size()], owner});
    return out;
  }

  /// True when p is inside and farther than `margin` from the boundary.
  bool strictly_contains(Point p, double margin) const {
    bool inside = false;
    const std::size_t n = v_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point a = v_[i], b = v_[j];
      if (detail::point_segment_distance(p, a, b) <= margin) return false;
      if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
        inside = !inside;
    }
    return inside;
  }

  Polygon transformed(double angle, Point shift) const {
    std::vector<Point> w;
    w.reserve(v_.size());
    for (const auto& p : v_) w.push_back(rotate(p, angle) + shift);
    Polygon out;
    out.v_ = std::move(w);
    out.label_ = label_;
    return out;
  }

 private:
  std::vector<Point> v_;
  std::string label_;
};

/// Object pose: world = position + R(orientation)·local.
struct Placement {
  Point position;
  double orientation = 0.0;
};

inline Polygon place(const Polygon& p, const Placement& where) {
  return p.transformed(where.orientation, where.position);
}

/// Same pose turned by `phi` about the placed polygon's centroid.
inline Placement rotate_about_centroid(const Polygon& local, const Placement& where, double phi) {
  const Point c_local = local.centroid();
  const Point c_world = where.position + rotate(c_local, where.orientation);
  Placement out;
  out.orientation = std::fmod(where.orientation + phi, 2.0 * M_PI);
  if (out.orientation < 0.0) out.orientation += 2.0 * M_PI;
  out.position = c_world - rotate(c_local, out.orientation);
  return out;
}

struct PlacedObject {
  Polygon shape;  // local frame
  Placement placement;
  Polygon world() const { return place(shape, placement); }
};

struct Scene {
  PlacedObject back;
  PlacedObject front;
  std::vector<Segment> visible_edges;  // front edges whole, back edges clipped
};

inline constexpr double kMinSegmentLength = 1e-9;

/// Parts of segment `s` not strictly inside `poly`; pieces shorter than
/// kMinSegmentLength are dropped.
inline std::vector<Segment> clip_outside(const Segment& s, const Polygon& poly) {
  const Point d = s.b - s.a;
  const double len = norm(d);
  if (len <= kMinSegmentLength) return {};
  std::vector<double> ts{0.0, 1.0};
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point p = v[i], e = v[(i + 1) % v.size()] - p;
    const double den = cross(d, e);
    if (std::abs(den) > 1e-15 * len * norm(e)) {
      const double t = cross(p - s.a, e) / den;
      const double u = cross(p - s.a, d) / den;
      if (t > 0.0 && t < 1.0 && u >= -1e-12 && u <= 1.0 + 1e-12) ts.push_back(t);
    } else {
      // Parallel: collinear overlaps contribute the edge endpoints.
      for (const Point q : {p, p + e}) {
        const double t = dot(q - s.a, d) / (len * len);
        if (t > 0.0 && t < 1.0 && detail::point_segment_distance(q, s.a, s.b) <= 1e-12 * len) ts.push_back(t);
      }
    }
  }
  std::sort(ts.begin(), ts.end());
  std::vector<Segment> out;
  bool open = false;
  double start = 0.0, close = 0.0;
  const double margin = 1e-10 * len;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    if (ts[k + 1] - ts[k] <= 0.0) continue;
    const double mid = 0.5 * (ts[k] + ts[k + 1]);
    const bool hidden = poly.strictly_contains(s.a + mid * d, margin);
    if (!hidden) {
      if (!open) start = ts[k];
      open = true;
      close = ts[k + 1];
    } else if (open) {
      out.push_back({s.a + start * d, s.a + close * d, s.owner});
      open = false;
    }
  }
  if (open) out.push_back({s.a + start * d, s.a + close * d, s.owner});
  std::erase_if(out, [](const Segment& g) { return g.length() < kMinSegmentLength; });
  return out;
}

inline Scene build_scene(const Polygon& back, const Placement& back_at, const Polygon& front,
                         const Placement& front_at) {
  Scene scene{{back, back_at}, {front, front_at}, {}};
  const Polygon bw = scene.back.world(), fw = scene.front.world();
  for (const auto& e : bw.edges(0)) {
    auto parts = clip_outside(e, fw);
    scene.visible_edges.insert(scene.visible_edges.end(), parts.begin(), parts.end());
  }
  for (const auto& e : fw.edges(1)) scene.visible_edges.push_back(e);
  return scene;
}

struct LineTolerance {
  double angle = 1e-6;   // radians
  double offset = 1e-6;  // in units of the scene diameter
};

namespace detail {

struct LineKey {
  double angle;   // direction angle in [0, π)
  double offset;  // signed distance of the line from the scene center
};

struct Normalizer {
  Point center;
  double scale = 1.0;
};

inline Normalizer normalizer(const std::vector<Segment>& segs) {
  Normalizer n;
  if (segs.empty()) return n;
  double xmin = segs[0].a.x, xmax = xmin, ymin = segs[0].a.y, ymax = ymin;
  std::vector<Point> pts;
  for (const auto& s : segs) {
    pts.push_back(s.a);
    pts.push_back(s.b);
  }
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.x), xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y), ymax = std::max(ymax, p.y);
  }
  n.center = {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
  double diam = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) diam = std::max(diam, norm(pts[i] - pts[j]));
  n.scale = diam > 0.0 ? 1.0 / diam : 1.0;
  return n;
}

inline LineKey line_key(const Segment& s, const Normalizer& n) {
  const Point a = n.scale * (s.a - n.center), b = n.scale * (s.b - n.center);
  double ang = std::atan2(b.y - a.y, b.x - a.x);
  if (ang < 0.0) ang += M_PI;
  if (ang >= M_PI) ang -= M_PI;
  const Point normal{-std::sin(ang), std::cos(ang)};
  return {ang, dot(normal, a)};
}

inline bool same_line(const LineKey& p, const LineKey& q, const LineTolerance& tol) {
  const double da = std::abs(p.angle - q.angle);
  if (da <= tol.angle) return std::abs(p.offset - q.offset) <= tol.offset;
  // Directions near 0 and near π describe the same orientation with flipped normals.
  if (M_PI - da <= tol.angle) return std::abs(p.offset + q.offset) <= tol.offset;
  return false;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

// Group index per segment; groups are lines.
inline std::vector<std::size_t> line_groups(const std::vector<Segment>& segs, const LineTolerance& tol) {
  const Normalizer n = normalizer(segs);
  std::vector<LineKey> keys;
  keys.reserve(segs.size());
  for (const auto& s : segs) keys.push_back(line_key(s, n));
  UnionFind uf(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i)
    for (std::size_t j = i + 1; j < segs.size(); ++j)
      if (same_line(keys[i], keys[j], tol)) uf.unite(i, j);
  std::vector<std::size_t> out(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) out[i] = uf.find(i);
  return out;
}

}  // namespace detail

/// Number of distinct lines carrying the visible edges.
inline std::size_t count_support_lines(const std::vector<Segment>& segs, const LineTolerance& tol = {}) {
  auto groups = detail::line_groups(segs, tol);
  std::sort(groups.begin(), groups.end());
  return static_cast<std::size_t>(std::unique(groups.begin(), groups.end()) - groups.begin());
}

inline std::size_t count_support_lines(const Scene& scene, const LineTolerance& tol = {}) {
  return count_support_lines(scene.visible_edges, tol);
}

/// True when both segment sets cover the same point set: per line, the
/// merged intervals agree within `tol` (scene-diameter units).
inline bool same_visible_geometry(const std::vector<Segment>& a, const std::vector<Segment>& b,
                                  double tol = 1e-6) {
  std::vector<Segment> all = a;
  all.insert(all.end(), b.begin(), b.end());
  if (all.empty()) return true;
  const detail::Normalizer n = detail::normalizer(all);
  const auto groups = detail::line_groups(all, {tol, tol});
  std::vector<std::size_t> ids = groups;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (std::size_t g : ids) {
    Point dir{0.0, 0.0};
    std::vector<std::pair<double, double>> ia, ib;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (groups[i] != g) continue;
      const Point p = n.scale * (all[i].a - n.center), q = n.scale * (all[i].b - n.center);
      if (dir.x == 0.0 && dir.y == 0.0) dir = (1.0 / norm(q - p)) * (q - p);
      double s = dot(p, dir), t = dot(q, dir);
      if (s > t) std::swap(s, t);
      (i < a.size() ? ia : ib).emplace_back(s, t);
    }
    auto merge = [tol](std::vector<std::pair<double, double>>& v) {
      std::sort(v.begin(), v.end());
      std::vector<std::pair<double, double>> out;
      for (const auto& iv : v) {
        if (!out.empty() && iv.first <= out.back().second + tol)
          out.back().second = std::max(out.back().second, iv.second);
        else
          out.push_back(iv);
      }
      return out;
    };
    const auto ma = merge(ia), mb = merge(ib);
    if (ma.size() != mb.size()) return false;
    for (std::size_t k = 0; k < ma.size(); ++k)
      if (std::abs(ma[k].first - mb[k].first) > tol || std::abs(ma[k].second - mb[k].second) > tol)
        return false;
  }
  return true;
}

/// One explanation of an observed scene: which object is behind, which in front.
struct OcclusionHypothesis {
  std::string name;
  PlacedObject back;
  PlacedObject front;
  Scene scene() const { return build_scene(back.shape, back.placement, front.shape, front.placement); }
};

struct OcclusionOptions {
  std::size_t n_rotations = 200;
  LineTolerance tolerance{};
  // Label of the object to rotate in every hypothesis; empty rotates the back object.
  std::string rotate_label;
};

struct HypothesisScore {
  std::string name;
  std::string rotated_object;
  std::size_t observed_count = 0;
  double typicality = 0.0;  // fraction of rotations preserving the count
  std::vector<std::size_t> rotated_counts;
};

enum class OcclusionVerdict { first, second, undecided };

inline std::string to_string(OcclusionVerdict v) {
  switch (v) {
    case OcclusionVerdict::first: return "first";
    case OcclusionVerdict::second: return "second";
    case OcclusionVerdict::undecided: return "undecided";
  }
  return "undecided";
}

struct OcclusionResult {
  std::size_t observed_count = 0;
  HypothesisScore first;
  HypothesisScore second;
  OcclusionVerdict verdict = OcclusionVerdict::undecided;
};

inline constexpr std::size_t kMinRotations = 50;

/// Rotations φ ~ U[0, 2π) of one object about its centroid; the score is the
/// fraction of rotated scenes whose line count equals the observed one.
inline HypothesisScore score_hypothesis(const OcclusionHypothesis& h, const OcclusionOptions& opt, Rng& rng) {
  HypothesisScore s;
  s.name = h.name;
  s.observed_count = count_support_lines(h.scene(), opt.tolerance);
  bool turn_front = false;
  if (!opt.rotate_label.empty()) {
    if (h.front.shape.label() == opt.rotate_label) {
      turn_front = true;
    } else if (h.back.shape.label() != opt.rotate_label) {
      throw ConfigError("hypothesis '" + h.name + "' has no object labeled '" + opt.rotate_label + "'");
    }
  }
  s.rotated_object = turn_front ? "front" : "back";
  std::size_t same = 0;
  s.rotated_counts.reserve(opt.n_rotations);
  for (std::size_t i = 0; i < opt.n_rotations; ++i) {
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    PlacedObject back = h.back, front = h.front;
    PlacedObject& target = turn_front ? front : back;
    target.placement = rotate_about_centroid(target.shape, target.placement, phi);
    const std::size_t c =
        count_support_lines(build_scene(back.shape, back.placement, front.shape, front.placement), opt.tolerance);
    s.rotated_counts.push_back(c);
    if (c == s.observed_count) ++same;
  }
  s.typicality = static_cast<double>(same) / static_cast<double>(opt.n_rotations);
  return s;
}

inline OcclusionResult infer_occlusion_order(const OcclusionHypothesis& first, const OcclusionHypothesis& second,
                                             const OcclusionOptions& opt, Rng& rng) {
  if (opt.n_rotations < kMinRotations) throw ConfigError("occlusion inference needs at least 50 rotations");
  const Scene sa = first.scene(), sb = second.scene();
  if (!same_visible_geometry(sa.visible_edges, sb.visible_edges))
    throw DataError("inconsistent hypothesis: '" + first.name + "' and '" + second.name +
                    "' do not produce the same visible scene");
  OcclusionResult r;
  r.first = score_hypothesis(first, opt, rng);
  r.second = score_hypothesis(second, opt, rng);
  r.observed_count = r.first.observed_count;
  if (r.first.typicality > r.second.typicality) r.verdict = OcclusionVerdict::first;
  else if (r.second.typicality > r.first.typicality) r.verdict = OcclusionVerdict::second;
  return r;
}

}  // namespace icm::scenes
