#ifndef STEKLAB_COMMON_HPP
#define STEKLAB_COMMON_HPP

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace steklab {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

// All recoverable failures surface as Error with a descriptive message.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline double wrap_unit(double t) {
    double w = t - std::floor(t);
    return (w >= 1.0) ? 0.0 : w;
}

} // namespace steklab

#endif
