#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dash/evaluation.hpp"
#include "dash/finger_sim.hpp"
#include "dash/hand_model.hpp"
#include "dash/retargeting.hpp"

namespace dash::service {

enum class MessageKind { Frame, Command, HandPose, TrialMark, Status };

std::string_view to_string(MessageKind k);
MessageKind parse_message_kind(std::string_view s);

/// Envelope for everything exchanged on /session. Serialised as one JSON object:
///   {"session": "...", "seq": n, "kind": "frame", "payload": {...}}
struct StreamMessage {
    std::string session;
    std::uint64_t seq = 0;
    MessageKind kind = MessageKind::Status;
    nlohmann::json payload = nlohmann::json::object();
};

nlohmann::json to_json(const StreamMessage& m);
StreamMessage parse_stream_message(const nlohmann::json& j);

struct SessionConfig {
    std::string hand_version = "v1";
    WeightsBundle weights = reference_weights_bundle();
    retargeting::RetargetConfig retarget;
    finger_sim::FingerGeometry geometry;
    std::string listen_address = "127.0.0.1:8765";
    std::optional<std::string> trials_path;

    /// Throws ConfigError when the hand version is absent from the weights.
    void validate() const;
    const PerFinger<CalibrationWeights>& hand_weights() const;
};

/// One operator session: owns a retargeting pipeline and turns inbound stream
/// messages and clock ticks into outbound messages. Transport-independent and
/// not thread-safe; the server drives each instance from a single strand.
class Session {
public:
    Session(std::string id, const SessionConfig& cfg, evaluation::TrialStore& store);

    const std::string& id() const { return id_; }
    StreamMessage hello();

    /// Applies one inbound message. Frames update the pending command (emitted on
    /// the next tick); errors come back as Status messages.
    std::vector<StreamMessage> on_message(const nlohmann::json& raw, std::int64_t now_ms);
    std::vector<StreamMessage> on_text(const std::string& text, std::int64_t now_ms);
    std::vector<StreamMessage> on_tick(std::int64_t now_ms);

    retargeting::PipelineStatus status() const { return pipeline_.state().status; }
    std::size_t frames_accepted() const { return accepted_; }
    std::size_t frames_rejected() const { return rejected_; }

private:
    StreamMessage make(MessageKind kind, nlohmann::json payload);
    StreamMessage status_message(bool ok, const std::string& error = {});
    nlohmann::json hand_pose_payload(const MotorCommand& cmd) const;

    std::string id_;
    const SessionConfig& cfg_;
    evaluation::TrialStore& store_;
    retargeting::RetargetPipeline pipeline_;
    finger_sim::FingerSimulator sim_;
    std::uint64_t out_seq_ = 0;
    std::optional<std::uint64_t> last_in_seq_;
    std::optional<retargeting::FrameResult> pending_;
    std::size_t accepted_ = 0;
    std::size_t rejected_ = 0;
};

/// HTTP + WebSocket front end.
///   GET  /status, /tasks, /trials, /report[?strict=1&format=json|csv|text]
///   POST /trials        one trial record (JSON object)
///   GET  /session       WebSocket upgrade; StreamMessage JSON per text frame
class Server {
public:
    explicit Server(SessionConfig cfg, const evaluation::TaskRegistry& tasks = evaluation::TaskRegistry::builtin());
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts serving on `threads` I/O threads. Throws IoError on bind failure.
    void start(int threads = 2);
    /// Blocks until stop() or SIGINT/SIGTERM.
    void wait();
    void stop();
    unsigned short port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace dash::service
