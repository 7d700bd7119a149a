#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "dash/calibration.hpp"
#include "dash/hand_model.hpp"

namespace dash::finger_sim {

/// Tendon moment arm r(theta) = r0 + r1*theta, theta in radians from the joint zero.
struct MomentArm {
    double r0_mm = 5.0;
    double r1_mm_per_rad = 0.0;

    double at(double theta_rad) const { return r0_mm + r1_mm_per_rad * theta_rad; }
    /// Tendon excursion accumulated from 0 to theta: r0*theta + r1*theta^2/2.
    double excursion(double theta_rad) const { return r0_mm * theta_rad + 0.5 * r1_mm_per_rad * theta_rad * theta_rad; }
    bool operator==(const MomentArm&) const = default;
};

struct FingerGeometry {
    std::array<double, 3> link_lengths_mm{45.0, 30.0, 25.0};  // proximal, middle, distal
    MomentArm mcp_fwd_arm;
    MomentArm pip_arm;
    MomentArm dip_arm;
    double pulley_radius_mm = 5.0;
    double side_moment_arm_mm = 5.0;
    /// When unset, derived so the widest tendon spans exactly one motor range.
    std::optional<double> max_winding_angle_rad;
    std::uint64_t seed = 0;

    bool constant_arms() const {
        return mcp_fwd_arm.r1_mm_per_rad == 0.0 && pip_arm.r1_mm_per_rad == 0.0 && dip_arm.r1_mm_per_rad == 0.0;
    }
    void validate() const;
};

FingerGeometry parse_geometry(const nlohmann::json& doc);
FingerGeometry load_geometry(const std::string& path);
nlohmann::json geometry_to_json(const FingerGeometry& g);

struct Excursion {
    double e0_mm = 0.0;  // side-to-side pair (signed)
    double e1_mm = 0.0;  // MCP forward flexion
    double e2_mm = 0.0;  // full-length curl over PIP and DIP
};

/// Tendon excursions for joint angles in degrees.
Excursion tendon_excursion(const RawJointAngles& raw, const FingerGeometry& g);

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct FingerPose {
    std::array<Point2, 4> points;  // MCP base, PIP, DIP, tip (mm)
    double splay_deg = 0.0;        // out-of-plane side angle
};

/// Planar forward kinematics; flexion rotates toward negative y.
FingerPose fingertip_positions(const RawJointAngles& raw, const FingerGeometry& g);

enum class SweepMode { Grid, Random };

struct SweepOptions {
    double increment_deg = 3.0;
    std::size_t sample_budget = 1000;  // 0: full-resolution grid (subject to the hard cap)
    double noise_sigma = 0.0;
    SweepMode mode = SweepMode::Grid;
    std::uint64_t seed = 0;
    FingerId finger = FingerId::Index;
};

inline constexpr std::size_t kSampleHardCap = 100000;

/// Synthetic tendon-driven finger. Construction fixes the motor normalisation
/// and fails with ConfigError when some reachable joint configuration would
/// drive a motor outside [0,1].
class FingerSimulator {
public:
    explicit FingerSimulator(FingerGeometry geometry, JointLimits limits = {});

    const FingerGeometry& geometry() const { return geometry_; }
    const JointLimits& limits() const { return limits_; }
    double max_winding_angle_rad() const { return winding_rad_; }

    Excursion excursion(const JointAngles& joints) const;
    MotorTriple motors_from_state(const JointAngles& joints) const;
    FingerPose pose(const JointAngles& joints) const;

    /// Affine weights implied by a constant-arm geometry. Throws ConfigError in
    /// angle-dependent mode, where the map is not affine.
    CalibrationWeights implied_weights() const;

    /// Per-dimension grid point counts for the given options (before noise).
    std::array<std::size_t, 4> grid_shape(const SweepOptions& opts) const;

    calibration::CalibrationDataset generate_dataset(const SweepOptions& opts) const;

private:
    std::array<double, 3> raw_motor_(const Excursion& e) const;

    FingerGeometry geometry_;
    JointLimits limits_;
    double winding_rad_ = 1.0;
    Excursion baseline_;
};

}  // namespace dash::finger_sim
