#include "dash/errors.hpp"
#include "dash/service.hpp"

namespace dash::service {

namespace {

constexpr std::array<std::string_view, 5> kKindNames = {"frame", "command", "hand_pose", "trial_mark", "status"};

}  // namespace

std::string_view to_string(MessageKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

MessageKind parse_message_kind(std::string_view s) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == s) return static_cast<MessageKind>(i);
    }
    throw ValidationError("unknown message kind '" + std::string(s) + "'");
}

nlohmann::json to_json(const StreamMessage& m) {
    return {{"session", m.session}, {"seq", m.seq}, {"kind", std::string(to_string(m.kind))}, {"payload", m.payload}};
}

StreamMessage parse_stream_message(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("message must be a JSON object");
    StreamMessage m;
    if (!j.contains("session") || !j["session"].is_string()) throw ValidationError("message needs a string 'session'");
    if (!j.contains("seq") || !j["seq"].is_number_unsigned()) throw ValidationError("message needs an unsigned 'seq'");
    if (!j.contains("kind") || !j["kind"].is_string()) throw ValidationError("message needs a string 'kind'");
    m.session = j["session"].get<std::string>();
    m.seq = j["seq"].get<std::uint64_t>();
    m.kind = parse_message_kind(j["kind"].get<std::string>());
    m.payload = j.value("payload", nlohmann::json::object());
    return m;
}

void SessionConfig::validate() const {
    if (!weights.count(hand_version)) {
        throw ConfigError("hand version '" + hand_version + "' is not in the weights bundle");
    }
    retarget.validate();
    geometry.validate();
}

const PerFinger<CalibrationWeights>& SessionConfig::hand_weights() const {
    auto it = weights.find(hand_version);
    if (it == weights.end()) throw ConfigError("hand version '" + hand_version + "' is not in the weights bundle");
    return it->second;
}

// ---- session ------------------------------------------------------------------

Session::Session(std::string id, const SessionConfig& cfg, evaluation::TrialStore& store)
    : id_(std::move(id)),
      cfg_(cfg),
      store_(store),
      pipeline_(cfg.retarget, cfg.hand_weights()),
      sim_(cfg.geometry, cfg.retarget.robot_limits) {}

StreamMessage Session::make(MessageKind kind, nlohmann::json payload) {
    return {id_, ++out_seq_, kind, std::move(payload)};
}

StreamMessage Session::status_message(bool ok, const std::string& error) {
    nlohmann::json p = {{"ok", ok},
                        {"state", std::string(retargeting::to_string(pipeline_.state().status))},
                        {"hand_version", cfg_.hand_version},
                        {"tick_ms", cfg_.retarget.tick_ms},
                        {"accepted", accepted_},
                        {"rejected", rejected_}};
    if (!error.empty()) p["error"] = error;
    return make(MessageKind::Status, std::move(p));
}

StreamMessage Session::hello() { return status_message(true); }

std::vector<StreamMessage> Session::on_message(const nlohmann::json& raw, std::int64_t now_ms) {
    StreamMessage msg;
    try {
        msg = parse_stream_message(raw);
    } catch (const ValidationError& e) {
        return {status_message(false, e.what())};
    }
    if (msg.session != id_) return {status_message(false, "message for session '" + msg.session + "' on session '" + id_ + "'")};
    if (last_in_seq_ && msg.seq <= *last_in_seq_) {
        return {status_message(false, "sequence number " + std::to_string(msg.seq) + " not increasing")};
    }
    last_in_seq_ = msg.seq;

    try {
        switch (msg.kind) {
            case MessageKind::Frame: {
                const auto frame = retargeting::parse_glove_frame(msg.payload);
                pending_ = pipeline_.process_frame(frame, now_ms);
                ++accepted_;
                return {};
            }
            case MessageKind::TrialMark: {
                store_.append(evaluation::parse_trial(msg.payload));
                return {status_message(true)};
            }
            case MessageKind::Status: {
                const std::string action = msg.payload.value("action", std::string("query"));
                if (action == "reset") {
                    pipeline_.reset();
                    pending_.reset();
                } else if (action != "query") {
                    throw ValidationError("unknown status action '" + action + "'");
                }
                return {status_message(true)};
            }
            case MessageKind::Command:
            case MessageKind::HandPose:
                break;
        }
        throw ValidationError("clients may not send '" + std::string(to_string(msg.kind)) + "' messages");
    } catch (const retargeting::FrameRejected& e) {
        ++rejected_;
        return {status_message(false, e.what())};
    } catch (const Error& e) {
        if (msg.kind == MessageKind::Frame) ++rejected_;
        return {status_message(false, e.what())};
    } catch (const nlohmann::json::exception& e) {
        return {status_message(false, e.what())};
    }
}

std::vector<StreamMessage> Session::on_text(const std::string& text, std::int64_t now_ms) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) return {status_message(false, "malformed JSON message")};
    return on_message(j, now_ms);
}

nlohmann::json Session::hand_pose_payload(const MotorCommand& cmd) const {
    nlohmann::json fingers = nlohmann::json::object();
    const auto& weights = pipeline_.weights();
    for (FingerId f : kFingers) {
        JointAngles joints;
        try {
            const auto mcp = calibration::invert_mcp(cmd.motors[f][0], cmd.motors[f][1], weights[f]);
            const auto curl = calibration::split_curl(cmd.motors[f][2], weights[f]);
            joints = {clamp01(mcp.mcp_side), clamp01(mcp.mcp_fwd), curl.pip, curl.dip};
        } catch (const ComputationError&) {
            if (pipeline_.state().joint_targets) joints = (*pipeline_.state().joint_targets)[f];
        }
        const auto pose = sim_.pose(joints);
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : pose.points) pts.push_back({p.x, p.y});
        fingers[std::string(to_string(f))] = {{"points", pts}, {"splay_deg", pose.splay_deg}};
    }
    return {{"t", cmd.timestamp_ms}, {"fingers", fingers}};
}

std::vector<StreamMessage> Session::on_tick(std::int64_t now_ms) {
    std::vector<StreamMessage> out;
    if (auto held = pipeline_.watchdog_tick(now_ms)) {
        auto payload = retargeting::command_to_json(*held);
        payload["hold"] = true;
        out.push_back(make(MessageKind::Command, std::move(payload)));
        out.push_back(status_message(true));
    }
    if (pending_) {
        auto payload = retargeting::command_to_json(pending_->command);
        nlohmann::json raw = nlohmann::json::object(), sat = nlohmann::json::object();
        for (FingerId f : kFingers) {
            raw[std::string(to_string(f))] = pending_->model[f].raw;
            sat[std::string(to_string(f))] = pending_->model[f].saturated;
        }
        payload["raw"] = raw;
        payload["saturated"] = sat;
        out.push_back(make(MessageKind::Command, std::move(payload)));
        out.push_back(make(MessageKind::HandPose, hand_pose_payload(pending_->command)));
        pending_.reset();
    }
    return out;
}

}  // namespace dash::service
