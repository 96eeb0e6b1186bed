#ifndef LAB_VEC_HPP
#define LAB_VEC_HPP

// Small planar/spatial vector types, rotations, and the affine pose
// (translate + dilate + rotate) used to move shapes around.  Everything here
// is trivially copyable; poses validate themselves on construction.

#include <cmath>
#include <stdexcept>

namespace lab {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2() = default;
    Vec2(double xx, double yy) : x(xx), y(yy) {}

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2 operator-() const { return {-x, -y}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
};

inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3-D cross product; positive when b is ccw of a.
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }
// a rotated by +90 degrees.
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

// Euclidean distance from p to the segment [a,b].
inline double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = norm2(ab);
    if (len2 == 0.0) return norm(p - a);
    const double t = std::fmax(0.0, std::fmin(1.0, dot(p - a, ab) / len2));
    return norm(p - (a + t * ab));
}

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double xx, double yy, double zz) : x(xx), y(yy), z(zz) {}

    Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
};

inline Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(Vec3 a) { return dot(a, a); }
inline double norm(Vec3 a) { return std::sqrt(norm2(a)); }

// Plane rotation.  Stores the angle together with its cached cosine/sine so
// hot loops do not recompute them.
struct Rot2 {
    double angle = 0.0;
    double c = 1.0, s = 0.0;

    Rot2() = default;
    explicit Rot2(double a) : angle(a), c(std::cos(a)), s(std::sin(a)) {}

    Vec2 apply(Vec2 v) const { return {c * v.x - s * v.y, s * v.x + c * v.y}; }
    Vec2 apply_inverse(Vec2 v) const { return {c * v.x + s * v.y, -s * v.x + c * v.y}; }
};

// Unit quaternion for SO(3).
struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    Quat() = default;
    Quat(double ww, double xx, double yy, double zz) : w(ww), x(xx), y(yy), z(zz) {}

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

    Vec3 apply(Vec3 v) const {
        // v' = v + 2 q_vec x (q_vec x v + w v)
        Vec3 q{x, y, z};
        Vec3 t = cross(q, cross(q, v) + w * v);
        return v + 2.0 * t;
    }
    Quat conjugate() const { return {w, -x, -y, -z}; }
    Vec3 apply_inverse(Vec3 v) const { return conjugate().apply(v); }
};

// Affine pose x + tau * sigma(.) in dimension 2 or 3.  The rotation is an
// angle for d=2 and a unit quaternion for d=3 (|q| must be 1 within 1e-12,
// i.e. the rotation matrix is special orthogonal to that tolerance).
struct AffinePose {
    int dim = 2;
    Vec3 translation{};   // z ignored when dim == 2
    double dilation = 1.0;
    Rot2 rot2{};
    Quat quat{};

    AffinePose() = default;

    static AffinePose plane(Vec2 t, double tau, double angle) {
        AffinePose p;
        p.dim = 2;
        p.translation = {t.x, t.y, 0.0};
        p.dilation = tau;
        p.rot2 = Rot2(angle);
        p.validate();
        return p;
    }

    static AffinePose space(Vec3 t, double tau, Quat q) {
        AffinePose p;
        p.dim = 3;
        p.translation = t;
        p.dilation = tau;
        p.quat = q;
        p.validate();
        return p;
    }

    void validate() const {
        if (dim != 2 && dim != 3)
            throw std::invalid_argument("AffinePose: dimension must be 2 or 3");
        if (!(dilation > 0.0) || !std::isfinite(dilation))
            throw std::invalid_argument("AffinePose: dilation must be positive and finite");
        if (dim == 3 && std::fabs(quat.norm() - 1.0) > 1e-12)
            throw std::invalid_argument("AffinePose: quaternion must be unit length (1e-12)");
    }

    Vec2 xy() const { return {translation.x, translation.y}; }

    // Map a point of the reference shape into the posed copy.
    Vec2 apply(Vec2 p) const { return xy() + dilation * rot2.apply(p); }
    Vec3 apply(Vec3 p) const { return translation + dilation * quat.apply(p); }

    // Pull a world point back to reference coordinates: sigma^{-1}((p-x)/tau).
    Vec2 pull_back(Vec2 p) const { return rot2.apply_inverse((p - xy()) / dilation); }
    Vec3 pull_back(Vec3 p) const { return quat.apply_inverse((p - translation) / dilation); }
};

} // namespace lab

#endif
