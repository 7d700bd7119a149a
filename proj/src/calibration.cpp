#include "dash/calibration.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "dash/errors.hpp"

namespace dash::calibration {

namespace {

void require_finite(std::initializer_list<double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw ComputationError(std::string(what) + ": non-finite input");
    }
}

void require_finite_weights(const CalibrationWeights& w, const char* what) {
    if (!w.all_finite()) throw ComputationError(std::string(what) + ": non-finite calibration weights");
}

}  // namespace

McpMotors forward_mcp(const JointAngles& joints, const CalibrationWeights& w) {
    require_finite({joints.mcp_side, joints.mcp_fwd}, "forward_mcp");
    require_finite_weights(w, "forward_mcp");
    return {w.w1 * joints.mcp_side + w.w3 * joints.mcp_fwd + w.b1,
            w.w2 * joints.mcp_side + w.w4 * joints.mcp_fwd + w.b2};
}

double forward_curl(double pip, double dip, const CalibrationWeights& w) {
    require_finite({pip, dip}, "forward_curl");
    require_finite_weights(w, "forward_curl");
    return (pip * w.w5 + w.b3) / 2.0 + (dip * w.w6 + w.b4) / 2.0;
}

FingerOutput forward_finger(const JointAngles& joints, const CalibrationWeights& w) {
    const McpMotors mcp = forward_mcp(joints, w);
    const double curl = forward_curl(joints.pip, joints.dip, w);

    FingerOutput out;
    out.raw = {mcp.motor0, mcp.motor1, curl};
    for (std::size_t k = 0; k < 3; ++k) {
        out.motors[k] = clamp01(out.raw[k]);
        out.saturated[k] = out.raw[k] < 0.0 || out.raw[k] > 1.0;
    }
    return out;
}

McpJoints invert_mcp(double motor0, double motor1, const CalibrationWeights& w) {
    require_finite({motor0, motor1}, "invert_mcp");
    require_finite_weights(w, "invert_mcp");
    const double det = w.mcp_determinant();
    if (std::abs(det) <= kDetEpsilon) {
        throw ComputationError("invert_mcp: MCP block is singular (|det| = " + std::to_string(std::abs(det)) +
                               ")");
    }
    const double r0 = motor0 - w.b1;
    const double r1 = motor1 - w.b2;
    // Cramer's rule on [[w1, w3], [w2, w4]] * (side, fwd) = (r0, r1).
    return {(r0 * w.w4 - w.w3 * r1) / det, (w.w1 * r1 - w.w2 * r0) / det};
}

CurlJoints split_curl(double motor2, const CalibrationWeights& w) {
    require_finite({motor2}, "split_curl");
    require_finite_weights(w, "split_curl");
    const double gain = w.w5 + w.w6;
    if (std::abs(gain) < 1e-9) throw ComputationError("split_curl: w5 + w6 is zero; curl cannot be split");
    const double theta = clamp01((2.0 * motor2 - w.b3 - w.b4) / gain);
    return {theta, theta};
}

// ---- fitting ----------------------------------------------------------------

namespace {

struct SubFit {
    Eigen::Vector3d coef;  // gain_a, gain_b, bias
};

double condition_number(const Eigen::MatrixXd& x) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
    const auto& s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

SubFit solve_sub_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::string& label) {
    const double cond = condition_number(x);
    if (!(cond <= kMaxConditionNumber)) {
        std::ostringstream msg;
        msg << "fit: sub-fit " << label << " is rank-deficient (condition number " << cond << " > "
            << kMaxConditionNumber << ")";
        throw ComputationError(msg.str());
    }
    Eigen::Vector3d coef = x.colPivHouseholderQr().solve(y);
    if (!coef.allFinite()) throw ComputationError("fit: sub-fit " + label + " produced non-finite weights");
    return {coef};
}

}  // namespace

std::array<double, 3> residual_rmse(const CalibrationDataset& dataset, const CalibrationWeights& w) {
    std::array<double, 3> sq{};
    for (const auto& s : dataset.samples) {
        const McpMotors mcp = forward_mcp(s.joints, w);
        const double curl = forward_curl(s.joints.pip, s.joints.dip, w);
        const double r[3] = {mcp.motor0 - s.motors[0], mcp.motor1 - s.motors[1], curl - s.motors[2]};
        for (std::size_t k = 0; k < 3; ++k) sq[k] += r[k] * r[k];
    }
    const double n = static_cast<double>(std::max<std::size_t>(dataset.samples.size(), 1));
    return {std::sqrt(sq[0] / n), std::sqrt(sq[1] / n), std::sqrt(sq[2] / n)};
}

FitReport fit(const CalibrationDataset& dataset) {
    const std::size_t n = dataset.samples.size();
    const std::string finger(to_string(dataset.finger));
    if (n < kMinFitSamples) {
        throw ValidationError("fit (" + finger + "): " + std::to_string(n) + " samples given, at least " +
                              std::to_string(kMinFitSamples) + " required");
    }

    Eigen::MatrixXd mcp_x(n, 3), curl_x(n, 3);
    Eigen::VectorXd y0(n), y1(n), y2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = dataset.samples[i];
        const double vals[] = {s.joints.mcp_side, s.joints.mcp_fwd, s.joints.pip, s.joints.dip,
                               s.motors[0],       s.motors[1],       s.motors[2]};
        for (double v : vals) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ValidationError("fit (" + finger + "): sample " + std::to_string(i) +
                                      " has a value outside [0, 1]");
            }
        }
        const auto row = static_cast<Eigen::Index>(i);
        mcp_x.row(row) << s.joints.mcp_side, s.joints.mcp_fwd, 1.0;
        curl_x.row(row) << s.joints.pip, s.joints.dip, 1.0;
        y0(row) = s.motors[0];
        y1(row) = s.motors[1];
        y2(row) = 2.0 * s.motors[2];
    }

    const SubFit f0 = solve_sub_fit(mcp_x, y0, "motor0 ~ (mcp_side, mcp_fwd) [" + finger + "]");
    const SubFit f1 = solve_sub_fit(mcp_x, y1, "motor1 ~ (mcp_side, mcp_fwd) [" + finger + "]");
    const SubFit f2 = solve_sub_fit(curl_x, y2, "motor2 ~ (pip, dip) [" + finger + "]");

    CalibrationWeights w;
    w.w1 = f0.coef(0);
    w.w3 = f0.coef(1);
    w.b1 = f0.coef(2);
    w.w2 = f1.coef(0);
    w.w4 = f1.coef(1);
    w.b2 = f1.coef(2);
    w.w5 = f2.coef(0);
    w.w6 = f2.coef(1);
    // Only b3 + b4 is identifiable; split it evenly.
    w.b3 = f2.coef(2) / 2.0;
    w.b4 = f2.coef(2) / 2.0;

    FitReport report;
    report.finger = dataset.finger;
    report.weights = w;
    report.rmse = residual_rmse(dataset, w);
    report.sample_count = n;
    return report;
}

std::map<FingerId, FitReport> fit_all(const std::map<FingerId, CalibrationDataset>& datasets) {
    std::map<FingerId, FitReport> out;
    for (const auto& [finger, ds] : datasets) out.emplace(finger, fit(ds));
    return out;
}

nlohmann::json fit_report_to_json(const std::string& version, const FitReport& report) {
    nlohmann::json j = weights_to_json(version, report.weights);
    j["finger"] = std::string(to_string(report.finger));
    j["rmse"] = report.rmse;
    j["n"] = report.sample_count;
    return j;
}

// ---- dataset CSV ------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_unit_value(std::string_view field, const std::string& where) {
    field = trim(field);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ValidationError(where + ": '" + std::string(field) + "' is not a number");
    }
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(where + ": value " + std::string(field) + " outside [0, 1]");
    return v;
}

}  // namespace

std::map<FingerId, CalibrationDataset> read_dataset_csv(std::istream& in, const std::string& origin) {
    std::map<FingerId, CalibrationDataset> out;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        if (!header_seen) {
            if (view != kDatasetCsvHeader) {
                throw ValidationError(where + ": expected header '" + std::string(kDatasetCsvHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = view.find(',', start);
            fields.push_back(view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 8) {
            throw ValidationError(where + ": expected 8 fields, found " + std::to_string(fields.size()));
        }
        FingerId finger;
        try {
            finger = parse_finger(trim(fields[0]));
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        CalibrationSample s;
        s.source = SampleSource::Imported;
        s.joints = {parse_unit_value(fields[1], where), parse_unit_value(fields[2], where),
                    parse_unit_value(fields[3], where), parse_unit_value(fields[4], where)};
        for (std::size_t k = 0; k < 3; ++k) s.motors[k] = parse_unit_value(fields[5 + k], where);
        auto& ds = out[finger];
        ds.finger = finger;
        ds.samples.push_back(s);
    }
    if (!header_seen) throw ValidationError(origin + ": empty dataset (no header)");
    return out;
}

std::map<FingerId, CalibrationDataset> read_dataset_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset '" + path + "'");
    return read_dataset_csv(in, path);
}

void write_dataset_csv(std::ostream& out, const std::vector<CalibrationDataset>& datasets, bool with_header) {
    if (with_header) out << kDatasetCsvHeader << '\n';
    char buf[256];
    for (const auto& ds : datasets) {
        const std::string finger(to_string(ds.finger));
        for (const auto& s : ds.samples) {
            std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", finger.c_str(),
                          s.joints.mcp_side, s.joints.mcp_fwd, s.joints.pip, s.joints.dip, s.motors[0],
                          s.motors[1], s.motors[2]);
            out << buf;
        }
    }
}

void write_dataset_csv_file(const std::string& path, const std::vector<CalibrationDataset>& datasets) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset '" + path + "'");
    write_dataset_csv(out, datasets);
    out.flush();
    if (!out) throw IoError("failed writing dataset '" + path + "'");
}

}  // namespace dash::calibration
