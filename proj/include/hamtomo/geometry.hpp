// geometry.hpp — Convex domains (balls and boxes in 2D/3D), chords, parallel
// ray families for tomography, and arclength sampling.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hamtomo/errors.hpp"

namespace hamtomo {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(const Vec3& v);

// Tangent chords shorter than this are rejected.
inline constexpr double kLenTol = 1e-9;

class ConvexDomain {
  public:
    enum class Kind { Ball, Box };

    static ConvexDomain ball(int dim, const Vec3& center, double radius);
    static ConvexDomain box(int dim, const Vec3& lo, const Vec3& hi);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    const Vec3& center() const { return center_; }
    double radius() const { return radius_; }
    const Vec3& lo() const { return lo_; }
    const Vec3& hi() const { return hi_; }

    bool contains(const Vec3& p, double tol = 1e-9) const;
    // Unsigned residual of the boundary equation; ~0 on the boundary.
    double boundary_residual(const Vec3& p) const;
    // Diameter of the circumscribed sphere; every chord offset fits inside it.
    double width() const;
    // Extent along one coordinate axis (0, 1, 2).
    double axis_extent(int axis) const;
    double axis_center(int axis) const;

  private:
    Kind kind_ = Kind::Ball;
    int dim_ = 2;
    Vec3 center_{};
    double radius_ = 1.0;
    Vec3 lo_{}, hi_{};
};

// gamma(t) = entry + t * direction, t in [0, length].
struct Ray {
    Vec3 entry;
    Vec3 direction;  // unit
    double length = 0.0;

    Vec3 point(double t) const { return entry + t * direction; }
};

// Discretization metadata: which slot in the sampling scheme a ray fills.
struct RayTag {
    int angle = 0;
    int offset = 0;
    int plane = 0;
    int axis = 0;  // slice-normal axis for 3D families
};

struct RayFamily {
    std::string kind;  // "parallel2d" or "beam3d"
    ConvexDomain domain = ConvexDomain::ball(2, {}, 1.0);
    int n_angles = 0;
    int n_offsets = 0;
    int n_planes = 1;
    std::vector<int> axes;  // slice orientations for beam3d

    std::vector<Ray> rays;
    std::vector<RayTag> tags;

    std::size_t size() const { return rays.size(); }
};

// Maximal chord through `point` in direction `direction` (unit). Empty when
// the line misses the domain or is tangent (length < kLenTol).
std::optional<Ray> chord(const ConvexDomain& domain, const Vec3& point, const Vec3& direction);

// 2D parallel-beam family: angles uniform in [0, pi), offsets midpoint-uniform
// across the domain width. Tangent and missing lines are dropped; the tags
// record the surviving (angle, offset) slots.
RayFamily parallel_beam(const ConvexDomain& domain, int n_angles, int n_offsets);

// 3D: stacked 2D parallel-beam slices, one family per requested slice-normal
// axis (default all three).
RayFamily beam_3d(const ConvexDomain& domain, int n_planes, int n_angles, int n_offsets,
                  std::vector<int> axes = {0, 1, 2});

// Midpoints of K = ceil(length/h) equal subintervals.
struct SampleNode {
    double t;       // arclength midpoint
    Vec3 point;
    double weight;  // subinterval width, length/K
};

std::vector<SampleNode> sample(const Ray& ray, double h);

// Serialization of the family header; rays are regenerated, never stored.
std::string ray_family_header_json(const RayFamily& family);
RayFamily ray_family_from_header_json(const std::string& json_text);

}  // namespace hamtomo
