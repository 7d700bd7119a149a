#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dash {

enum class FingerId : std::uint8_t { Thumb = 0, Index = 1, Middle = 2, Ring = 3 };

inline constexpr std::array<FingerId, 4> kFingers = {FingerId::Thumb, FingerId::Index,
                                                     FingerId::Middle, FingerId::Ring};

std::string_view to_string(FingerId f);
FingerId parse_finger(std::string_view name);

// Fixed-size container holding exactly one value per finger.
template <typename T>
struct PerFinger {
    std::array<T, 4> values{};

    T& operator[](FingerId f) { return values[static_cast<std::size_t>(f)]; }
    const T& operator[](FingerId f) const { return values[static_cast<std::size_t>(f)]; }

    static PerFinger filled(const T& v) {
        PerFinger out;
        out.values.fill(v);
        return out;
    }

    bool operator==(const PerFinger&) const = default;
};

enum class Joint : std::uint8_t { McpSide = 0, McpFwd = 1, Pip = 2, Dip = 3 };

inline constexpr std::array<Joint, 4> kJoints = {Joint::McpSide, Joint::McpFwd, Joint::Pip,
                                                 Joint::Dip};

std::string_view to_string(Joint j);

/// Normalized finger joint angles, each in [0,1].
struct JointAngles {
    double mcp_side = 0.0;
    double mcp_fwd = 0.0;
    double pip = 0.0;
    double dip = 0.0;

    double& operator[](Joint j);
    double operator[](Joint j) const;
    bool operator==(const JointAngles&) const = default;
};

/// Physical joint angles in degrees (human glove readings or simulator state).
struct RawJointAngles {
    double mcp_side_deg = 0.0;
    double mcp_fwd_deg = 0.0;
    double pip_deg = 0.0;
    double dip_deg = 0.0;

    double& operator[](Joint j);
    double operator[](Joint j) const;
    bool operator==(const RawJointAngles&) const = default;
};

/// Normalized motor angles for the three tendons of one finger:
/// 0 = side-to-side pair, 1 = MCP forward flexion, 2 = full-length curl.
struct MotorTriple {
    std::array<double, 3> m{};

    double& operator[](std::size_t k) { return m[k]; }
    double operator[](std::size_t k) const { return m[k]; }
    bool operator==(const MotorTriple&) const = default;
};

/// Twelve motor values stamped with the originating frame time.
struct MotorCommand {
    PerFinger<MotorTriple> motors;
    std::int64_t timestamp_ms = 0;

    bool operator==(const MotorCommand&) const = default;
};

inline constexpr double kDetEpsilon = 1e-6;

/// Affine joint->motor map coefficients for one finger.
///   motor0 = w1*mcp_side + w3*mcp_fwd + b1
///   motor1 = w2*mcp_side + w4*mcp_fwd + b2
///   motor2 = (pip*w5 + b3)/2 + (dip*w6 + b4)/2
struct CalibrationWeights {
    double w1 = 0, w2 = 0, w3 = 0, w4 = 0, w5 = 0, w6 = 0;
    double b1 = 0, b2 = 0, b3 = 0, b4 = 0;

    std::array<double, 6> gains() const { return {w1, w2, w3, w4, w5, w6}; }
    std::array<double, 4> biases() const { return {b1, b2, b3, b4}; }
    static CalibrationWeights from_arrays(const std::array<double, 6>& w,
                                          const std::array<double, 4>& b);

    /// Determinant of the 2x2 MCP block.
    double mcp_determinant() const { return w1 * w4 - w3 * w2; }
    bool mcp_invertible() const;
    bool all_finite() const;

    bool operator==(const CalibrationWeights&) const = default;
};

struct DesignParams {
    double palm_width_mm = 0.0;
    double palm_length_mm = 0.0;
    double finger_length_mm = 0.0;
    double mcp_diameter_mm = 0.0;
    double mcp_height_mm = 0.0;
    double dip_crease_width_mm = 0.0;
    double fingertip_edge_mm = 0.0;
    double fingertip_thickness_mm = 0.0;
    double thumb_angle_deg = 0.0;
    double finger_strength_n = 0.0;

    // Throws ValidationError when a dimension is non-positive or the thumb angle
    // lies outside [0, 90].
    void validate() const;
    bool operator==(const DesignParams&) const = default;
};

struct HandVersion {
    std::string name;
    std::optional<PerFinger<CalibrationWeights>> weights;
    std::optional<DesignParams> design;

    bool is_baseline() const { return !weights && !design; }
};

struct JointRange {
    double raw_min = 0.0;
    double raw_max = 1.0;

    double span() const { return raw_max - raw_min; }
    void validate() const;
    bool operator==(const JointRange&) const = default;
};

/// Raw degree ranges that map onto normalized [0,1], one per joint.
struct JointLimits {
    JointRange mcp_side{-30.0, 30.0};
    JointRange mcp_fwd{0.0, 90.0};
    JointRange pip{0.0, 100.0};
    JointRange dip{0.0, 90.0};

    JointRange& operator[](Joint j);
    const JointRange& operator[](Joint j) const;
    void validate() const;
    bool operator==(const JointLimits&) const = default;
};

double normalize(double raw, const JointRange& range);
double denormalize(double x, const JointRange& range);

JointAngles normalize(const RawJointAngles& raw, const JointLimits& limits);
RawJointAngles denormalize(const JointAngles& x, const JointLimits& limits);

double clamp01(double x);

// ---- bundled reference data -------------------------------------------------

/// Hand iterations in presentation order: v1..v5 then the rigid baseline.
const std::vector<std::string>& known_hand_names();
bool is_known_hand(std::string_view name);

/// The reference calibration weight set of a DASH iteration (v1..v5).
CalibrationWeights reference_weights(std::string_view version);
/// The reference design parameters of a DASH iteration (v1..v5).
DesignParams reference_design(std::string_view version);
/// All six hands, with the baseline carrying neither weights nor design.
std::vector<HandVersion> reference_hands();

// ---- file formats ---------------------------------------------------------

/// version -> per-finger weights. A record without "finger" applies to every
/// finger of that version; a record with "finger" overrides one finger. A
/// version without a base record needs one record per finger. Extra "rmse" and
/// "n" keys (fit reports) are accepted and ignored.
using WeightsBundle = std::map<std::string, PerFinger<CalibrationWeights>>;

WeightsBundle parse_weights_bundle(const nlohmann::json& doc);
WeightsBundle load_weights_bundle(const std::string& path);
nlohmann::json weights_to_json(const std::string& version, const CalibrationWeights& w);
/// The built-in v1..v5 weights, identical to data/weights.json.
WeightsBundle reference_weights_bundle();

std::map<std::string, DesignParams> parse_design_params(const nlohmann::json& doc);
std::map<std::string, DesignParams> load_design_params(const std::string& path);
nlohmann::json design_to_json(const std::string& version, const DesignParams& d);

JointLimits parse_joint_limits(const nlohmann::json& doc);
nlohmann::json joint_limits_to_json(const JointLimits& limits);

nlohmann::json read_json_file(const std::string& path);

}  // namespace dash
