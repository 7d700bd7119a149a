#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dash/calibration.hpp"
#include "dash/evaluation.hpp"
#include "dash/finger_sim.hpp"
#include "dash/retargeting.hpp"
#include "dash/service.hpp"

namespace dash::commands {

/// Everything the CLI reads from --config / DASH_CONFIG. Relative paths inside
/// the file resolve against the file's directory.
///
///   {"hand_version": "v1", "weights": "weights.json" | [...],
///    "retarget": {...}, "geometry": "geometry.json" | {...},
///    "listen_address": "127.0.0.1:8765", "trials_path": "...", "tasks_path": "..."}
struct AppConfig {
    service::SessionConfig session;
    std::optional<std::string> tasks_path;
};

AppConfig parse_app_config(const nlohmann::json& doc, const std::string& base_dir = ".");
AppConfig load_app_config(const std::string& path);

/// The explicit flag wins; otherwise DASH_CONFIG if set and non-empty.
std::optional<std::string> resolve_config_path(const std::optional<std::string>& flag);

// ---- calibrate ----------------------------------------------------------------

struct CalibrateOptions {
    std::string dataset_path;
    std::string out_path;
    std::string version = "calibrated";
};

/// Fits every finger in the dataset, writes the weights file and prints a
/// summary table. Fit failures are rethrown with the finger named.
std::vector<calibration::FitReport> cmd_calibrate(const CalibrateOptions& opts, std::ostream& log);

// ---- simulate -----------------------------------------------------------------

struct SimulateOptions {
    finger_sim::FingerGeometry geometry;
    JointLimits limits;
    finger_sim::SweepOptions sweep;
    bool all_fingers = false;
    std::string out_path;
};

struct SimulateResult {
    std::size_t samples = 0;
    std::array<std::size_t, 4> grid{};
    std::vector<FingerId> fingers;
};

SimulateResult cmd_simulate(const SimulateOptions& opts, std::ostream& log);

// ---- retarget -----------------------------------------------------------------

struct RetargetOptions {
    std::string glove_path;
    std::string out_path;
    PerFinger<CalibrationWeights> weights;
    retargeting::RetargetConfig config;
    bool strict = false;
};

struct RetargetSummary {
    std::size_t lines = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t malformed = 0;
    std::size_t holds = 0;
    std::size_t saturated_motors = 0;
    std::size_t saturated_frames = 0;
    std::size_t rate_limited_motors = 0;
    std::vector<std::string> problems;  // "<path>:<line>: reason"
};

/// Offline replay of a glove log. Arrival time equals the frame timestamp; the
/// watchdog is ticked before every frame, and hold transitions are counted but
/// not written, so the command log keeps strictly increasing timestamps.
RetargetSummary replay(std::istream& glove, const std::string& origin, std::ostream& commands,
                       const RetargetOptions& opts);
RetargetSummary cmd_retarget(const RetargetOptions& opts, std::ostream& log);

// ---- evaluate -----------------------------------------------------------------

struct EvaluateOptions {
    std::string trials_path;
    std::string format = "text";  // text | csv | json
    std::optional<std::string> out_path;
    bool strict = false;
};

evaluation::ResultsTable cmd_evaluate(const EvaluateOptions& opts, const evaluation::TaskRegistry& tasks,
                                      std::ostream& out);

// ---- helpers ------------------------------------------------------------------

/// Writes `text` to `path`, throwing IoError on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace dash::commands
