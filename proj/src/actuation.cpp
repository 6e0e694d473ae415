#include "vnav/actuation.hpp"

#include <cmath>

#include "vnav/errors.hpp"
#include "vnav/geometry.hpp"

namespace vnav {

void validate(const MotorParams& p)
{
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(p.rpm)) throw InvalidParams("motor rpm must be > 0");
    if (!positive(p.d)) throw InvalidParams("reduction ratio d must be > 0");
    if (!positive(p.r)) throw InvalidParams("friction-wheel radius r must be > 0");
    if (!std::isfinite(p.epsilon) || p.epsilon < 0.0) throw InvalidParams("correction epsilon must be >= 0");
    if (!positive(p.c)) throw InvalidParams("gear ratio c must be > 0");
}

double push_pull_duration_ms(double distance_mm, const MotorParams& p)
{
    validate(p);
    if (!(distance_mm >= 0.0)) throw InvalidParams("push-pull distance must be >= 0");
    return 60000.0 * distance_mm / (2.0 * kPi * p.rpm * p.d * (p.r + p.epsilon));
}

double rotation_duration_ms(double theta_deg, const MotorParams& p)
{
    validate(p);
    if (!(theta_deg >= 0.0)) throw InvalidParams("rotation angle must be >= 0");
    return 60000.0 * theta_deg / (360.0 * p.rpm * p.d * p.c);
}

double push_pull_distance_mm(double duration_ms, const MotorParams& p)
{
    validate(p);
    return duration_ms * 2.0 * kPi * p.rpm * p.d * (p.r + p.epsilon) / 60000.0;
}

double rotation_angle_deg(double duration_ms, const MotorParams& p)
{
    validate(p);
    return duration_ms * 360.0 * p.rpm * p.d * p.c / 60000.0;
}

}  // namespace vnav
