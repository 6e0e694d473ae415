#pragma once

namespace vnav {

// Drive-train constants for the push-pull and rotation motors.
struct MotorParams {
    double rpm = 60.0;      // motor speed, rev/min
    double d = 1.0;         // reduction ratio
    double r = 10.0;        // friction-wheel radius, mm
    double epsilon = 0.0;   // wheel-groove correction, mm
    double c = 1.0;         // driving/driven gear diameter ratio
};

// Throws InvalidParams unless rpm, d, r, c > 0 and epsilon >= 0.
void validate(const MotorParams& p);

// Run time (ms) of the push-pull motor to move the wire `distance_mm` >= 0:
// 60000 * S / (2 pi rpm d (r + epsilon)).
double push_pull_duration_ms(double distance_mm, const MotorParams& p);

// Run time (ms) of the rotation motor to turn the wire `theta_deg` >= 0:
// 60000 * theta / (360 rpm d c).
double rotation_duration_ms(double theta_deg, const MotorParams& p);

// Inverses of the two conversions above.
double push_pull_distance_mm(double duration_ms, const MotorParams& p);
double rotation_angle_deg(double duration_ms, const MotorParams& p);

}  // namespace vnav
