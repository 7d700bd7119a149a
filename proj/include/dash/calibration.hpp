#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dash/hand_model.hpp"

namespace dash::calibration {

struct McpMotors {
    double motor0 = 0.0;
    double motor1 = 0.0;
};

/// Unclamped motor0/motor1 from the jointly-learned MCP block.
McpMotors forward_mcp(const JointAngles& joints, const CalibrationWeights& w);

/// Unclamped motor2; the curl tendon averages the PIP and DIP contributions.
double forward_curl(double pip, double dip, const CalibrationWeights& w);

struct FingerOutput {
    MotorTriple motors;                 // clamped to [0,1]
    std::array<double, 3> raw{};        // before clamping
    std::array<bool, 3> saturated{};    // raw value fell outside [0,1]

    int saturation_count() const { return int(saturated[0]) + int(saturated[1]) + int(saturated[2]); }
};

/// Full joint->motor map for one finger. This is the command boundary: the only
/// place where motor values are clamped.
FingerOutput forward_finger(const JointAngles& joints, const CalibrationWeights& w);

struct McpJoints {
    double mcp_side = 0.0;
    double mcp_fwd = 0.0;
};

/// Solves the 2x2 MCP system exactly. Throws ComputationError when
/// |det| <= kDetEpsilon.
McpJoints invert_mcp(double motor0, double motor1, const CalibrationWeights& w);

struct CurlJoints {
    double pip = 0.0;
    double dip = 0.0;
};

/// Splits a curl motor value into PIP/DIP assuming both joints bend equally.
/// The result is clamped to [0,1].
CurlJoints split_curl(double motor2, const CalibrationWeights& w);

// ---- fitting ----------------------------------------------------------------

enum class SampleSource { Simulated, Imported };

struct CalibrationSample {
    JointAngles joints;
    MotorTriple motors;
    SampleSource source = SampleSource::Simulated;
};

struct CalibrationDataset {
    FingerId finger = FingerId::Index;
    std::vector<CalibrationSample> samples;
    double increment_deg = 0.0;  // sweep metadata; 0 when unknown

    std::size_t count() const { return samples.size(); }
};

inline constexpr std::size_t kMinFitSamples = 10;
inline constexpr double kMaxConditionNumber = 1e8;

struct FitReport {
    FingerId finger = FingerId::Index;
    CalibrationWeights weights;
    std::array<double, 3> rmse{};
    std::size_t sample_count = 0;
};

/// Ordinary least squares fit of the joint->motor model.
///
/// Three independent sub-fits over the regressor [x_a, x_b, 1]:
///   motor0   ~ (mcp_side, mcp_fwd)  -> w1, w3, b1
///   motor1   ~ (mcp_side, mcp_fwd)  -> w2, w4, b2
///   2*motor2 ~ (pip, dip)           -> w5, w6, b3+b4  (split evenly)
///
/// Throws ValidationError with fewer than kMinFitSamples samples, and
/// ComputationError naming the sub-fit when its regressor condition number
/// exceeds kMaxConditionNumber.
FitReport fit(const CalibrationDataset& dataset);

/// Fits every finger present in the map.
std::map<FingerId, FitReport> fit_all(const std::map<FingerId, CalibrationDataset>& datasets);

/// Per-motor RMSE of the unclamped model against the dataset's motor values.
std::array<double, 3> residual_rmse(const CalibrationDataset& dataset, const CalibrationWeights& w);

nlohmann::json fit_report_to_json(const std::string& version, const FitReport& report);

// ---- dataset CSV ------------------------------------------------------------

inline constexpr const char* kDatasetCsvHeader = "finger,mcp_side,mcp_fwd,pip,dip,motor0,motor1,motor2";

/// Reads the calibration CSV; samples are grouped per finger in file order.
std::map<FingerId, CalibrationDataset> read_dataset_csv(std::istream& in, const std::string& origin = "<stream>");
std::map<FingerId, CalibrationDataset> read_dataset_csv_file(const std::string& path);

void write_dataset_csv(std::ostream& out, const std::vector<CalibrationDataset>& datasets, bool with_header = true);
void write_dataset_csv_file(const std::string& path, const std::vector<CalibrationDataset>& datasets);

}  // namespace dash::calibration
