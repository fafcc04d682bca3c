#include "hamtomo/geometry.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace hamtomo {

using nlohmann::json;

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

ConvexDomain ConvexDomain::ball(int dim, const Vec3& center, double radius) {
    if (dim != 2 && dim != 3) throw ConfigError("ConvexDomain: dim must be 2 or 3");
    if (radius <= 0.0) throw ConfigError("ConvexDomain: radius must be positive");
    ConvexDomain d;
    d.kind_ = Kind::Ball;
    d.dim_ = dim;
    d.center_ = center;
    if (dim == 2) d.center_.z = 0.0;
    d.radius_ = radius;
    return d;
}

ConvexDomain ConvexDomain::box(int dim, const Vec3& lo, const Vec3& hi) {
    if (dim != 2 && dim != 3) throw ConfigError("ConvexDomain: dim must be 2 or 3");
    if (lo.x >= hi.x || lo.y >= hi.y || (dim == 3 && lo.z >= hi.z)) {
        throw ConfigError("ConvexDomain: box min must be below max componentwise");
    }
    ConvexDomain d;
    d.kind_ = Kind::Box;
    d.dim_ = dim;
    d.lo_ = lo;
    d.hi_ = hi;
    if (dim == 2) d.lo_.z = d.hi_.z = 0.0;
    d.center_ = 0.5 * (d.lo_ + d.hi_);
    return d;
}

bool ConvexDomain::contains(const Vec3& p, double tol) const {
    if (kind_ == Kind::Ball) return norm(p - center_) <= radius_ + tol;
    const bool xy = p.x >= lo_.x - tol && p.x <= hi_.x + tol && p.y >= lo_.y - tol &&
                    p.y <= hi_.y + tol;
    if (dim_ == 2) return xy;
    return xy && p.z >= lo_.z - tol && p.z <= hi_.z + tol;
}

double ConvexDomain::boundary_residual(const Vec3& p) const {
    if (kind_ == Kind::Ball) return std::abs(norm(p - center_) - radius_);
    // Distance from the box boundary: max-norm to faces.
    const double dx = std::max({lo_.x - p.x, p.x - hi_.x});
    const double dy = std::max({lo_.y - p.y, p.y - hi_.y});
    const double dz = (dim_ == 3) ? std::max({lo_.z - p.z, p.z - hi_.z}) : -1e300;
    const double outer = std::max({dx, dy, dz});
    return std::abs(outer);  // 0 on the boundary, >0 outside, <0 clamped inside
}

double ConvexDomain::width() const {
    if (kind_ == Kind::Ball) return 2.0 * radius_;
    const Vec3 d = hi_ - lo_;
    const double z = (dim_ == 3) ? d.z : 0.0;
    return std::sqrt(d.x * d.x + d.y * d.y + z * z);
}

double ConvexDomain::axis_extent(int axis) const {
    if (kind_ == Kind::Ball) return 2.0 * radius_;
    const Vec3 d = hi_ - lo_;
    return axis == 0 ? d.x : (axis == 1 ? d.y : d.z);
}

double ConvexDomain::axis_center(int axis) const {
    return axis == 0 ? center_.x : (axis == 1 ? center_.y : center_.z);
}

std::optional<Ray> chord(const ConvexDomain& domain, const Vec3& point, const Vec3& direction) {
    const double dn = norm(direction);
    if (std::abs(dn - 1.0) > 1e-12) throw ConfigError("chord: direction must be a unit vector");

    double t0, t1;
    if (domain.kind() == ConvexDomain::Kind::Ball) {
        const Vec3 d = point - domain.center();
        const double b = dot(d, direction);
        const double c = dot(d, d) - domain.radius() * domain.radius();
        const double disc = b * b - c;
        if (disc <= 0.0) return std::nullopt;
        const double s = std::sqrt(disc);
        t0 = -b - s;
        t1 = -b + s;
    } else {
        // Slab clipping.
        t0 = -1e300;
        t1 = 1e300;
        const double lo[3] = {domain.lo().x, domain.lo().y, domain.lo().z};
        const double hi[3] = {domain.hi().x, domain.hi().y, domain.hi().z};
        const double p[3] = {point.x, point.y, point.z};
        const double v[3] = {direction.x, direction.y, direction.z};
        for (int ax = 0; ax < domain.dim(); ++ax) {
            if (std::abs(v[ax]) < 1e-15) {
                if (p[ax] < lo[ax] || p[ax] > hi[ax]) return std::nullopt;
                continue;
            }
            double a = (lo[ax] - p[ax]) / v[ax];
            double b = (hi[ax] - p[ax]) / v[ax];
            if (a > b) std::swap(a, b);
            t0 = std::max(t0, a);
            t1 = std::min(t1, b);
        }
        if (t0 >= t1) return std::nullopt;
    }

    const double length = t1 - t0;
    if (length < kLenTol) return std::nullopt;
    Ray r;
    r.entry = point + t0 * direction;
    r.direction = direction;
    r.length = length;
    return r;
}

RayFamily parallel_beam(const ConvexDomain& domain, int n_angles, int n_offsets) {
    if (domain.dim() != 2) throw ConfigError("parallel_beam: domain must be 2D");
    if (n_angles < 1 || n_offsets < 1) throw ConfigError("parallel_beam: counts must be >= 1");

    RayFamily fam;
    fam.kind = "parallel2d";
    fam.domain = domain;
    fam.n_angles = n_angles;
    fam.n_offsets = n_offsets;

    const double w = domain.width();
    for (int ia = 0; ia < n_angles; ++ia) {
        const double theta = M_PI * ia / n_angles;
        const Vec3 v{std::cos(theta), std::sin(theta), 0.0};
        const Vec3 nrm{-std::sin(theta), std::cos(theta), 0.0};
        for (int io = 0; io < n_offsets; ++io) {
            const double s = ((io + 0.5) / n_offsets - 0.5) * w;
            const Vec3 p = domain.center() + s * nrm;
            if (auto r = chord(domain, p, v)) {
                fam.rays.push_back(*r);
                fam.tags.push_back({ia, io, 0, 0});
            }
        }
    }
    return fam;
}

RayFamily beam_3d(const ConvexDomain& domain, int n_planes, int n_angles, int n_offsets,
                  std::vector<int> axes) {
    if (domain.dim() != 3) throw ConfigError("beam_3d: domain must be 3D");
    if (n_planes < 1 || n_angles < 1 || n_offsets < 1) {
        throw ConfigError("beam_3d: counts must be >= 1");
    }

    RayFamily fam;
    fam.kind = "beam3d";
    fam.domain = domain;
    fam.n_angles = n_angles;
    fam.n_offsets = n_offsets;
    fam.n_planes = n_planes;
    fam.axes = axes;

    const double w = domain.width();
    for (int axis : axes) {
        if (axis < 0 || axis > 2) throw ConfigError("beam_3d: axis must be 0, 1 or 2");
        // In-plane coordinate axes.
        const int u_axis = (axis + 1) % 3;
        const int v_axis = (axis + 2) % 3;
        auto unit = [](int ax) {
            return Vec3{ax == 0 ? 1.0 : 0.0, ax == 1 ? 1.0 : 0.0, ax == 2 ? 1.0 : 0.0};
        };
        const Vec3 eu = unit(u_axis), ev = unit(v_axis), en = unit(axis);

        for (int ip = 0; ip < n_planes; ++ip) {
            const double pc = domain.axis_center(axis) +
                              ((ip + 0.5) / n_planes - 0.5) * domain.axis_extent(axis);
            for (int ia = 0; ia < n_angles; ++ia) {
                const double theta = M_PI * ia / n_angles;
                const Vec3 dir = std::cos(theta) * eu + std::sin(theta) * ev;
                const Vec3 nrm = -std::sin(theta) * eu + std::cos(theta) * ev;
                for (int io = 0; io < n_offsets; ++io) {
                    const double s = ((io + 0.5) / n_offsets - 0.5) * w;
                    Vec3 p = domain.center() + s * nrm;
                    p = p + (pc - domain.axis_center(axis)) * en;
                    if (auto r = chord(domain, p, dir)) {
                        fam.rays.push_back(*r);
                        fam.tags.push_back({ia, io, ip, axis});
                    }
                }
            }
        }
    }
    return fam;
}

std::vector<SampleNode> sample(const Ray& ray, double h) {
    if (h <= 0.0) throw ConfigError("sample: step must be positive");
    const int k = std::max(1, static_cast<int>(std::ceil(ray.length / h)));
    const double w = ray.length / k;
    std::vector<SampleNode> nodes;
    nodes.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const double t = (i + 0.5) * w;
        nodes.push_back({t, ray.point(t), w});
    }
    return nodes;
}

std::string ray_family_header_json(const RayFamily& family) {
    json j;
    j["kind"] = family.kind;
    j["n_angles"] = family.n_angles;
    j["n_offsets"] = family.n_offsets;
    j["n_planes"] = family.n_planes;
    j["axes"] = family.axes;
    json dom;
    dom["dim"] = family.domain.dim();
    if (family.domain.kind() == ConvexDomain::Kind::Ball) {
        dom["kind"] = "ball";
        dom["center"] = {family.domain.center().x, family.domain.center().y,
                         family.domain.center().z};
        dom["radius"] = family.domain.radius();
    } else {
        dom["kind"] = "box";
        dom["lo"] = {family.domain.lo().x, family.domain.lo().y, family.domain.lo().z};
        dom["hi"] = {family.domain.hi().x, family.domain.hi().y, family.domain.hi().z};
    }
    j["domain"] = dom;
    return j.dump();
}

RayFamily ray_family_from_header_json(const std::string& json_text) {
    json j = json::parse(json_text);
    const json& dom = j.at("domain");
    ConvexDomain domain = ConvexDomain::ball(2, {}, 1.0);
    const int dim = dom.at("dim").get<int>();
    if (dom.at("kind") == "ball") {
        auto c = dom.at("center");
        domain = ConvexDomain::ball(dim, {c[0], c[1], c[2]}, dom.at("radius").get<double>());
    } else {
        auto lo = dom.at("lo");
        auto hi = dom.at("hi");
        domain = ConvexDomain::box(dim, {lo[0], lo[1], lo[2]}, {hi[0], hi[1], hi[2]});
    }
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "parallel2d") {
        return parallel_beam(domain, j.at("n_angles").get<int>(), j.at("n_offsets").get<int>());
    }
    if (kind == "beam3d") {
        return beam_3d(domain, j.at("n_planes").get<int>(), j.at("n_angles").get<int>(),
                       j.at("n_offsets").get<int>(), j.at("axes").get<std::vector<int>>());
    }
    throw ConfigError("ray_family_from_header_json: unknown family kind '" + kind + "'");
}

}  // namespace hamtomo
