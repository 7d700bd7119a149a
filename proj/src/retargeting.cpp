#include "dash/retargeting.hpp"

#include <cmath>
#include <sstream>

#include "dash/errors.hpp"

namespace dash::retargeting {

JointLimits default_human_limits() { return JointLimits{}; }

void RetargetConfig::validate() const {
    for (FingerId f : kFingers) human_limits[f].validate();
    robot_limits.validate();
    if (!(smoothing_alpha > 0.0 && smoothing_alpha <= 1.0)) {
        throw ConfigError("smoothing_alpha must lie in (0, 1]");
    }
    if (!(max_delta_per_tick > 0.0)) throw ConfigError("max_delta_per_tick must be positive");
    if (tick_ms <= 0) throw ConfigError("tick_ms must be positive");
    if (!(std::isfinite(workspace_scale) && workspace_scale > 0.0)) throw ConfigError("workspace_scale must be positive");
    if (!workspace_box.min_m.allFinite() || !workspace_box.max_m.allFinite() ||
        (workspace_box.min_m.array() > workspace_box.max_m.array()).any()) {
        throw ConfigError("workspace_box_m requires finite min <= max on every axis");
    }
    if (stale_timeout_ms <= 0) throw ConfigError("stale_timeout_ms must be positive");
}

namespace {

Eigen::Vector3d vec3(const nlohmann::json& v, const std::string& what) {
    if (!v.is_array() || v.size() != 3) throw ValidationError(what + " must be an array of 3 numbers");
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) {
        if (!v[i].is_number()) throw ValidationError(what + " must be an array of 3 numbers");
        out(i) = v[i].get<double>();
    }
    if (!out.allFinite()) throw ValidationError(what + " must be finite");
    return out;
}

bool is_limits_object(const nlohmann::json& j) {
    for (Joint jt : kJoints) {
        if (j.contains(std::string(to_string(jt)))) return true;
    }
    return false;
}

}  // namespace

RetargetConfig parse_retarget_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("retarget config must be a JSON object");
    RetargetConfig cfg;
    try {
        for (const auto& item : doc.items()) {
            const auto& key = item.key();
            const auto& v = item.value();
            if (key == "human_limits") {
                if (is_limits_object(v)) {
                    cfg.human_limits = PerFinger<JointLimits>::filled(parse_joint_limits(v));
                } else {
                    for (const auto& fl : v.items()) cfg.human_limits[parse_finger(fl.key())] = parse_joint_limits(fl.value());
                }
            } else if (key == "robot_limits") {
                cfg.robot_limits = parse_joint_limits(v);
            } else if (key == "smoothing_alpha") {
                cfg.smoothing_alpha = v.get<double>();
            } else if (key == "max_delta_per_tick") {
                cfg.max_delta_per_tick = v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
            } else if (key == "tick_ms") {
                cfg.tick_ms = v.get<std::int64_t>();
            } else if (key == "workspace_scale") {
                cfg.workspace_scale = v.get<double>();
            } else if (key == "workspace_box_m") {
                cfg.workspace_box.min_m = vec3(v.at("min"), "workspace_box_m.min");
                cfg.workspace_box.max_m = vec3(v.at("max"), "workspace_box_m.max");
            } else if (key == "human_origin_m") {
                cfg.human_origin_m = vec3(v, "human_origin_m");
            } else if (key == "stale_timeout_ms") {
                cfg.stale_timeout_ms = v.get<std::int64_t>();
            } else {
                throw ConfigError("retarget config: unknown field '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("retarget config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

nlohmann::json retarget_config_to_json(const RetargetConfig& cfg) {
    nlohmann::json human = nlohmann::json::object();
    for (FingerId f : kFingers) human[std::string(to_string(f))] = joint_limits_to_json(cfg.human_limits[f]);
    auto v3 = [](const Eigen::Vector3d& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
    return {{"human_limits", human},
            {"robot_limits", joint_limits_to_json(cfg.robot_limits)},
            {"smoothing_alpha", cfg.smoothing_alpha},
            {"max_delta_per_tick",
             std::isfinite(cfg.max_delta_per_tick) ? nlohmann::json(cfg.max_delta_per_tick) : nlohmann::json()},
            {"tick_ms", cfg.tick_ms},
            {"workspace_scale", cfg.workspace_scale},
            {"workspace_box_m", {{"min", v3(cfg.workspace_box.min_m)}, {"max", v3(cfg.workspace_box.max_m)}}},
            {"human_origin_m", v3(cfg.human_origin_m)},
            {"stale_timeout_ms", cfg.stale_timeout_ms}};
}

// ---- operator calibration -----------------------------------------------------

void OperatorCalibration::observe(const GloveFrame& frame) {
    for (FingerId f : kFingers) {
        for (Joint j : kJoints) {
            const double v = frame.fingers[f][j];
            if (!std::isfinite(v)) throw ValidationError("operator calibration: non-finite angle");
            if (frames_ == 0 || v < lo_[f][j]) lo_[f][j] = v;
            if (frames_ == 0 || v > hi_[f][j]) hi_[f][j] = v;
        }
    }
    ++frames_;
}

PerFinger<JointLimits> OperatorCalibration::limits() const {
    PerFinger<JointLimits> out;
    for (FingerId f : kFingers) {
        for (Joint j : kJoints) {
            if (frames_ == 0 || !(lo_[f][j] < hi_[f][j])) {
                throw ValidationError("operator calibration: " + std::string(to_string(f)) + " " +
                                      std::string(to_string(j)) + " was never swept");
            }
            out[f][j] = {lo_[f][j], hi_[f][j]};
        }
    }
    return out;
}

// ---- mapping ----------------------------------------------------------------

JointAngles map_finger(const RawJointAngles& human, const JointLimits& human_limits) {
    for (Joint j : kJoints) {
        if (!std::isfinite(human[j])) {
            throw ValidationError("map_finger: non-finite " + std::string(to_string(j)) + " angle");
        }
    }
    return normalize(human, human_limits);
}

namespace {

void require_unit(const Eigen::Quaterniond& q, const char* what) {
    const double n = q.coeffs().norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6) {
        std::ostringstream msg;
        msg << what << " quaternion is not unit (norm " << n << ")";
        throw ValidationError(msg.str());
    }
}

}  // namespace

WristPose retarget_wrist(const WristPose& pose, const Eigen::Quaterniond& waist, const RetargetConfig& cfg) {
    require_unit(pose.orientation, "wrist");
    require_unit(waist, "waist");
    if (!pose.position_m.allFinite()) throw ValidationError("wrist position is not finite");

    const Eigen::Quaterniond to_waist = waist.conjugate();
    Eigen::Vector3d p = cfg.workspace_scale * (to_waist * (pose.position_m - cfg.human_origin_m));
    p = p.cwiseMax(cfg.workspace_box.min_m).cwiseMin(cfg.workspace_box.max_m);

    WristPose out;
    out.position_m = p;
    out.orientation = (to_waist * pose.orientation).normalized();
    out.timestamp_ms = pose.timestamp_ms;
    return out;
}

// ---- pipeline ---------------------------------------------------------------

std::string_view to_string(PipelineStatus s) {
    switch (s) {
        case PipelineStatus::Live: return "live";
        case PipelineStatus::Holding: return "holding";
        case PipelineStatus::Faulted: break;
    }
    return "faulted";
}

RetargetPipeline::RetargetPipeline(RetargetConfig cfg, PerFinger<CalibrationWeights> weights)
    : cfg_(std::move(cfg)), weights_(weights) {
    cfg_.validate();
}

namespace {

// Moves `prev` toward `target` by at most `limit`, keeping |result - prev| <= limit
// in floating point.
double rate_limit(double prev, double target, double limit, bool& truncated) {
    const double delta = target - prev;
    if (std::abs(delta) <= limit) {
        truncated = false;
        return target;
    }
    truncated = true;
    double out = delta > 0 ? prev + limit : prev - limit;
    while (std::abs(out - prev) > limit) out = std::nextafter(out, prev);
    return out;
}

}  // namespace

FrameResult RetargetPipeline::process_frame(const GloveFrame& frame, std::optional<std::int64_t> arrival_ms) {
    if (state_.status == PipelineStatus::Faulted) {
        throw FrameRejected(FrameRejected::Reason::Faulted, "pipeline faulted (" + state_.fault_reason + "); reset required");
    }
    if (state_.last_frame_ts && frame.timestamp_ms <= *state_.last_frame_ts) {
        throw FrameRejected(FrameRejected::Reason::OutOfOrder,
                            "frame t=" + std::to_string(frame.timestamp_ms) + " not after last accepted t=" +
                                std::to_string(*state_.last_frame_ts));
    }

    PerFinger<JointAngles> targets;
    for (FingerId f : kFingers) {
        try {
            targets[f] = map_finger(frame.fingers[f], cfg_.human_limits[f]);
        } catch (const ValidationError& e) {
            throw FrameRejected(FrameRejected::Reason::Invalid, std::string(to_string(f)) + ": " + e.what());
        }
    }
    if (state_.joint_targets) {
        const double a = cfg_.smoothing_alpha;
        for (FingerId f : kFingers) {
            for (Joint j : kJoints) {
                targets[f][j] = a * targets[f][j] + (1.0 - a) * (*state_.joint_targets)[f][j];
            }
        }
    }

    FrameResult result;
    try {
        for (FingerId f : kFingers) result.model[f] = calibration::forward_finger(targets[f], weights_[f]);
    } catch (const ComputationError& e) {
        fault(e.what());
        throw;
    }

    result.command.timestamp_ms = frame.timestamp_ms;
    for (FingerId f : kFingers) {
        result.saturated += result.model[f].saturation_count();
        for (std::size_t k = 0; k < 3; ++k) {
            const double target = result.model[f].motors[k];
            if (state_.last_emitted) {
                bool truncated = false;
                result.command.motors[f][k] =
                    rate_limit(state_.last_emitted->motors[f][k], target, cfg_.max_delta_per_tick, truncated);
                result.rate_limited += truncated ? 1 : 0;
            } else {
                result.command.motors[f][k] = target;
            }
        }
    }

    state_.joint_targets = targets;
    state_.last_emitted = result.command;
    state_.last_frame_ts = frame.timestamp_ms;
    state_.last_arrival_ms = arrival_ms.value_or(frame.timestamp_ms);
    state_.status = PipelineStatus::Live;
    return result;
}

std::optional<MotorCommand> RetargetPipeline::watchdog_tick(std::int64_t now_ms) {
    if (state_.status != PipelineStatus::Live || !state_.last_arrival_ms) return std::nullopt;
    if (now_ms - *state_.last_arrival_ms <= cfg_.stale_timeout_ms) return std::nullopt;
    state_.status = PipelineStatus::Holding;
    return state_.last_emitted;
}

WristPose RetargetPipeline::process_wrist(const WristPose& pose) const {
    return retarget_wrist(pose, state_.waist_frame, cfg_);
}

void RetargetPipeline::set_waist_frame(const Eigen::Quaterniond& waist) {
    require_unit(waist, "waist");
    state_.waist_frame = waist;
}

void RetargetPipeline::fault(const std::string& reason) {
    state_.status = PipelineStatus::Faulted;
    state_.fault_reason = reason;
}

void RetargetPipeline::reset() { state_ = PipelineState{}; }

// ---- JSON-lines formats -----------------------------------------------------

namespace {

std::int64_t timestamp_field(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("t") || !j["t"].is_number_integer()) {
        throw ValidationError("missing integer field 't'");
    }
    return j["t"].get<std::int64_t>();
}

template <std::size_t N>
std::array<double, N> number_array(const nlohmann::json& v, const std::string& what) {
    if (!v.is_array() || v.size() != N) {
        throw ValidationError(what + " must hold " + std::to_string(N) + " numbers");
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (!v[i].is_number()) throw ValidationError(what + " must hold " + std::to_string(N) + " numbers");
        out[i] = v[i].get<double>();
    }
    return out;
}

template <typename F>
void for_each_finger_entry(const nlohmann::json& obj, const char* field, F&& fn) {
    if (!obj.contains(field) || !obj[field].is_object()) {
        throw ValidationError(std::string("missing object field '") + field + "'");
    }
    const auto& m = obj[field];
    if (m.size() != 4) throw ValidationError(std::string("'") + field + "' must list all four fingers");
    for (FingerId f : kFingers) {
        const std::string name(to_string(f));
        if (!m.contains(name)) throw ValidationError(std::string("'") + field + "' is missing finger '" + name + "'");
        fn(f, m[name]);
    }
}

}  // namespace

GloveFrame parse_glove_frame(const nlohmann::json& j) {
    GloveFrame frame;
    frame.timestamp_ms = timestamp_field(j);
    for_each_finger_entry(j, "fingers", [&](FingerId f, const nlohmann::json& v) {
        const auto a = number_array<4>(v, std::string(to_string(f)));
        frame.fingers[f] = {a[0], a[1], a[2], a[3]};
    });
    return frame;
}

nlohmann::json glove_frame_to_json(const GloveFrame& frame) {
    nlohmann::json fingers = nlohmann::json::object();
    for (FingerId f : kFingers) {
        const auto& a = frame.fingers[f];
        fingers[std::string(to_string(f))] = {a.mcp_side_deg, a.mcp_fwd_deg, a.pip_deg, a.dip_deg};
    }
    return {{"t", frame.timestamp_ms}, {"fingers", fingers}};
}

nlohmann::json command_to_json(const MotorCommand& cmd) {
    nlohmann::json motors = nlohmann::json::object();
    for (FingerId f : kFingers) motors[std::string(to_string(f))] = cmd.motors[f].m;
    return {{"t", cmd.timestamp_ms}, {"motors", motors}};
}

MotorCommand parse_command(const nlohmann::json& j) {
    MotorCommand cmd;
    cmd.timestamp_ms = timestamp_field(j);
    for_each_finger_entry(j, "motors", [&](FingerId f, const nlohmann::json& v) {
        cmd.motors[f].m = number_array<3>(v, std::string(to_string(f)));
    });
    return cmd;
}

WristPose parse_wrist_pose(const nlohmann::json& j) {
    WristPose pose;
    pose.timestamp_ms = timestamp_field(j);
    if (!j.contains("p") || !j.contains("q")) throw ValidationError("wrist pose needs 'p' and 'q'");
    const auto p = number_array<3>(j["p"], "p");
    const auto q = number_array<4>(j["q"], "q");
    pose.position_m = {p[0], p[1], p[2]};
    pose.orientation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
    return pose;
}

nlohmann::json wrist_pose_to_json(const WristPose& pose) {
    const auto& q = pose.orientation;
    return {{"t", pose.timestamp_ms},
            {"p", {pose.position_m.x(), pose.position_m.y(), pose.position_m.z()}},
            {"q", {q.w(), q.x(), q.y(), q.z()}}};
}

std::string to_log_line(const nlohmann::json& j) { return j.dump(); }

}  // namespace dash::retargeting
