#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "dash/calibration.hpp"
#include "dash/errors.hpp"
#include "dash/hand_model.hpp"

namespace dash::retargeting {

struct GloveFrame {
    std::int64_t timestamp_ms = 0;
    PerFinger<RawJointAngles> fingers;  // human joint angles in degrees
};

struct WristPose {
    Eigen::Vector3d position_m = Eigen::Vector3d::Zero();
    Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
    std::int64_t timestamp_ms = 0;
};

struct WorkspaceBox {
    Eigen::Vector3d min_m{-0.6, -0.6, -0.6};
    Eigen::Vector3d max_m{0.6, 0.6, 0.6};
};

/// Human-side ranges used when no operator calibration has been captured.
JointLimits default_human_limits();

struct RetargetConfig {
    PerFinger<JointLimits> human_limits = PerFinger<JointLimits>::filled(default_human_limits());
    JointLimits robot_limits;
    double smoothing_alpha = 0.5;
    /// +infinity disables the rate limiter.
    double max_delta_per_tick = 0.05;
    std::int64_t tick_ms = 16;
    double workspace_scale = 1.5;
    WorkspaceBox workspace_box;
    Eigen::Vector3d human_origin_m = Eigen::Vector3d::Zero();
    std::int64_t stale_timeout_ms = 200;

    void validate() const;
};

RetargetConfig parse_retarget_config(const nlohmann::json& doc);
nlohmann::json retarget_config_to_json(const RetargetConfig& cfg);

/// Records per-joint min/max while the operator sweeps each joint; the result
/// becomes that finger's human_limits.
class OperatorCalibration {
public:
    void observe(const GloveFrame& frame);
    /// Throws ValidationError if some joint never moved.
    PerFinger<JointLimits> limits() const;
    std::size_t frames() const { return frames_; }

private:
    PerFinger<RawJointAngles> lo_, hi_;
    std::size_t frames_ = 0;
};

/// One-to-one joint mapping: normalize by the operator's range, clamp to [0,1].
/// Throws ValidationError on non-finite angles.
JointAngles map_finger(const RawJointAngles& human, const JointLimits& human_limits);

/// Rebases a wrist pose into the waist-aligned frame, scales the displacement
/// and clamps it into the workspace box. Throws ValidationError for non-unit
/// quaternions.
WristPose retarget_wrist(const WristPose& pose, const Eigen::Quaterniond& waist, const RetargetConfig& cfg);

enum class PipelineStatus { Live, Holding, Faulted };
std::string_view to_string(PipelineStatus s);

struct PipelineState {
    std::optional<MotorCommand> last_emitted;
    std::optional<PerFinger<JointAngles>> joint_targets;  // smoothed
    std::optional<std::int64_t> last_frame_ts;
    std::optional<std::int64_t> last_arrival_ms;
    Eigen::Quaterniond waist_frame = Eigen::Quaterniond::Identity();
    PipelineStatus status = PipelineStatus::Live;
    std::string fault_reason;
};

struct FrameResult {
    MotorCommand command;
    PerFinger<calibration::FingerOutput> model;  // raw/clamped model outputs before rate limiting
    int saturated = 0;                           // motors clamped by the model this frame
    int rate_limited = 0;                        // motors truncated by the rate limiter
};

/// Thrown for frames the pipeline refuses; the state is left untouched.
class FrameRejected : public ValidationError {
public:
    enum class Reason { OutOfOrder, Invalid, Faulted };
    FrameRejected(Reason r, const std::string& what) : ValidationError(what), reason_(r) {}
    Reason reason() const noexcept { return reason_; }

private:
    Reason reason_;
};

/// Per-operator retargeting session. Not thread-safe: one logical execution
/// context owns an instance.
class RetargetPipeline {
public:
    RetargetPipeline(RetargetConfig cfg, PerFinger<CalibrationWeights> weights);

    /// map_finger -> smoothing -> forward model -> rate limit. `arrival_ms` is the
    /// clock used by the watchdog; it defaults to the frame timestamp.
    FrameResult process_frame(const GloveFrame& frame, std::optional<std::int64_t> arrival_ms = std::nullopt);

    /// Enters Holding once no frame has arrived for stale_timeout_ms and returns
    /// the last emitted command on that transition; nothing otherwise.
    std::optional<MotorCommand> watchdog_tick(std::int64_t now_ms);

    WristPose process_wrist(const WristPose& pose) const;
    void set_waist_frame(const Eigen::Quaterniond& waist);

    void fault(const std::string& reason);
    void reset();

    const PipelineState& state() const { return state_; }
    const RetargetConfig& config() const { return cfg_; }
    const PerFinger<CalibrationWeights>& weights() const { return weights_; }

private:
    RetargetConfig cfg_;
    PerFinger<CalibrationWeights> weights_;
    PipelineState state_;
};

// ---- JSON-lines formats -----------------------------------------------------

GloveFrame parse_glove_frame(const nlohmann::json& j);
nlohmann::json glove_frame_to_json(const GloveFrame& frame);

nlohmann::json command_to_json(const MotorCommand& cmd);
MotorCommand parse_command(const nlohmann::json& j);

WristPose parse_wrist_pose(const nlohmann::json& j);
nlohmann::json wrist_pose_to_json(const WristPose& pose);

/// Compact, locale-independent serialisation used for every log line.
std::string to_log_line(const nlohmann::json& j);

}  // namespace dash::retargeting
