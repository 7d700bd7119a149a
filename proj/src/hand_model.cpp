#include "dash/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dash/errors.hpp"

namespace dash {

namespace {

constexpr std::array<std::string_view, 4> kFingerNames = {"thumb", "index", "middle", "ring"};
constexpr std::array<std::string_view, 4> kJointNames = {"mcp_side", "mcp_fwd", "pip", "dip"};

std::string fmt_double(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::string_view to_string(FingerId f) { return kFingerNames[static_cast<std::size_t>(f)]; }

FingerId parse_finger(std::string_view name) {
    for (FingerId f : kFingers) {
        if (to_string(f) == name) return f;
    }
    throw ValidationError("unknown finger '" + std::string(name) + "'");
}

std::string_view to_string(Joint j) { return kJointNames[static_cast<std::size_t>(j)]; }

double& JointAngles::operator[](Joint j) {
    switch (j) {
        case Joint::McpSide: return mcp_side;
        case Joint::McpFwd: return mcp_fwd;
        case Joint::Pip: return pip;
        case Joint::Dip: break;
    }
    return dip;
}

double JointAngles::operator[](Joint j) const { return const_cast<JointAngles&>(*this)[j]; }

double& RawJointAngles::operator[](Joint j) {
    switch (j) {
        case Joint::McpSide: return mcp_side_deg;
        case Joint::McpFwd: return mcp_fwd_deg;
        case Joint::Pip: return pip_deg;
        case Joint::Dip: break;
    }
    return dip_deg;
}

double RawJointAngles::operator[](Joint j) const { return const_cast<RawJointAngles&>(*this)[j]; }

CalibrationWeights CalibrationWeights::from_arrays(const std::array<double, 6>& w,
                                                   const std::array<double, 4>& b) {
    return CalibrationWeights{w[0], w[1], w[2], w[3], w[4], w[5], b[0], b[1], b[2], b[3]};
}

bool CalibrationWeights::mcp_invertible() const { return std::abs(mcp_determinant()) > kDetEpsilon; }

bool CalibrationWeights::all_finite() const {
    auto g = gains();
    auto b = biases();
    return std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); }) &&
           std::all_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); });
}

void DesignParams::validate() const {
    const std::pair<const char*, double> dims[] = {
        {"palm_width_mm", palm_width_mm},
        {"palm_length_mm", palm_length_mm},
        {"finger_length_mm", finger_length_mm},
        {"mcp_diameter_mm", mcp_diameter_mm},
        {"mcp_height_mm", mcp_height_mm},
        {"dip_crease_width_mm", dip_crease_width_mm},
        {"fingertip_edge_mm", fingertip_edge_mm},
        {"fingertip_thickness_mm", fingertip_thickness_mm},
        {"finger_strength_n", finger_strength_n},
    };
    for (const auto& [name, v] : dims) {
        if (!(std::isfinite(v) && v > 0.0)) {
            throw ValidationError(std::string("design parameter ") + name + " must be positive, got " +
                                  fmt_double(v));
        }
    }
    if (!(thumb_angle_deg >= 0.0 && thumb_angle_deg <= 90.0)) {
        throw ValidationError("thumb_angle_deg must lie in [0, 90], got " + fmt_double(thumb_angle_deg));
    }
}

void JointRange::validate() const {
    if (!std::isfinite(raw_min) || !std::isfinite(raw_max) || !(raw_min < raw_max)) {
        throw ValidationError("joint range requires finite raw_min < raw_max, got [" + fmt_double(raw_min) +
                              ", " + fmt_double(raw_max) + "]");
    }
}

JointRange& JointLimits::operator[](Joint j) {
    switch (j) {
        case Joint::McpSide: return mcp_side;
        case Joint::McpFwd: return mcp_fwd;
        case Joint::Pip: return pip;
        case Joint::Dip: break;
    }
    return dip;
}

const JointRange& JointLimits::operator[](Joint j) const { return const_cast<JointLimits&>(*this)[j]; }

void JointLimits::validate() const {
    for (Joint j : kJoints) (*this)[j].validate();
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double normalize(double raw, const JointRange& range) {
    if (!std::isfinite(raw)) throw RangeError("cannot normalize non-finite angle");
    return clamp01((raw - range.raw_min) / range.span());
}

double denormalize(double x, const JointRange& range) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw RangeError("normalized angle " + fmt_double(x) + " outside [0, 1]");
    }
    return range.raw_min + x * range.span();
}

JointAngles normalize(const RawJointAngles& raw, const JointLimits& limits) {
    JointAngles out;
    for (Joint j : kJoints) out[j] = normalize(raw[j], limits[j]);
    return out;
}

RawJointAngles denormalize(const JointAngles& x, const JointLimits& limits) {
    RawJointAngles out;
    for (Joint j : kJoints) out[j] = denormalize(x[j], limits[j]);
    return out;
}

// ---- reference data ---------------------------------------------------------

namespace {

struct ReferenceColumn {
    std::string_view version;
    CalibrationWeights weights;
    DesignParams design;
};

// Calibration weights and design parameters of the five DASH iterations.
const std::array<ReferenceColumn, 5>& reference_columns() {
    static const std::array<ReferenceColumn, 5> cols = {{
        {"v1",
         {-1.05, 0.01, 0.1, 0.83, 0.67, 0.99, 0.47, -0.07, 0.03, -0.01},
         {94, 102, 90, 6, 6, 10.3, 3.5, 13.21, 45.0, 37.8}},
        {"v2",
         {-0.43, 0.2, 0.51, 0.54, 0.6, 0.76, 0.38, 0.01, -0.04, -0.16},
         {84, 84, 100, 6, 8, 10.3, 3.5, 13.22, 45.0, 47.6}},
        {"v3",
         {-0.43, 0.2, 0.51, 0.54, 0.6, 0.76, 0.38, 0.01, -0.04, -0.16},
         {84, 84, 100, 6, 8, 8.9, 1.73, 7.98, 0.0, 34.5}},
        {"v4",
         {-0.59, -0.12, 0.26, 0.38, 0.62, 1.69, 0.45, 0.44, -0.05, -0.3},
         {84, 84, 100, 10, 8, 10.3, 3.5, 11.22, 22.5, 51.8}},
        {"v5",
         {-0.59, -0.19, -0.32, 0.72, 0.63, 0.65, 0.58, -0.03, -0.09, -0.07},
         {84, 84, 100, 8, 8, 13.0, 3.5, 8.75, 22.5, 27.4}},
    }};
    return cols;
}

const ReferenceColumn& reference_column(std::string_view version) {
    for (const auto& c : reference_columns()) {
        if (c.version == version) return c;
    }
    throw ValidationError("no reference data for hand version '" + std::string(version) + "'");
}

}  // namespace

const std::vector<std::string>& known_hand_names() {
    static const std::vector<std::string> names = {"v1", "v2", "v3", "v4", "v5", "allegro"};
    return names;
}

bool is_known_hand(std::string_view name) {
    const auto& names = known_hand_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

CalibrationWeights reference_weights(std::string_view version) { return reference_column(version).weights; }

DesignParams reference_design(std::string_view version) { return reference_column(version).design; }

std::vector<HandVersion> reference_hands() {
    std::vector<HandVersion> hands;
    for (const auto& c : reference_columns()) {
        hands.push_back({std::string(c.version), PerFinger<CalibrationWeights>::filled(c.weights), c.design});
    }
    hands.push_back({"allegro", std::nullopt, std::nullopt});
    return hands;
}

WeightsBundle reference_weights_bundle() {
    WeightsBundle bundle;
    for (const auto& c : reference_columns()) {
        bundle[std::string(c.version)] = PerFinger<CalibrationWeights>::filled(c.weights);
    }
    return bundle;
}

// ---- file formats -----------------------------------------------------------

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}

namespace {

template <std::size_t N>
std::array<double, N> finite_array(const nlohmann::json& v, const std::string& what) {
    if (!v.is_array() || v.size() != N) {
        throw ValidationError(what + " must be an array of " + std::to_string(N) + " numbers");
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (!v[i].is_number()) throw ValidationError(what + "[" + std::to_string(i) + "] is not a number");
        out[i] = v[i].get<double>();
        if (!std::isfinite(out[i])) throw ValidationError(what + "[" + std::to_string(i) + "] is not finite");
    }
    return out;
}

double number_field(const nlohmann::json& obj, const char* key) {
    if (!obj.contains(key) || !obj.at(key).is_number()) {
        throw ValidationError(std::string("missing numeric field '") + key + "'");
    }
    return obj.at(key).get<double>();
}

}  // namespace

WeightsBundle parse_weights_bundle(const nlohmann::json& doc) {
    const nlohmann::json records = doc.is_array() ? doc : nlohmann::json::array({doc});
    WeightsBundle bundle;
    std::vector<std::pair<std::string, std::pair<FingerId, CalibrationWeights>>> overrides;
    std::set<std::string> seen_versions;
    std::set<std::pair<std::string, FingerId>> seen_overrides;

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        const std::string where = "weights record " + std::to_string(i);
        if (!rec.is_object()) throw ValidationError(where + " is not an object");
        for (const char* key : {"version", "w", "b"}) {
            if (!rec.contains(key)) throw ValidationError(where + " is missing field '" + key + "'");
        }
        for (const auto& item : rec.items()) {
            const auto& k = item.key();
            if (k != "version" && k != "w" && k != "b" && k != "finger" && k != "rmse" && k != "n") {
                throw ValidationError(where + " has unexpected field '" + k + "'");
            }
        }
        if (!rec["version"].is_string()) throw ValidationError(where + ": 'version' must be a string");
        const auto version = rec["version"].get<std::string>();
        const auto w = CalibrationWeights::from_arrays(finite_array<6>(rec["w"], where + ".w"),
                                                       finite_array<4>(rec["b"], where + ".b"));
        if (rec.contains("finger")) {
            if (!rec["finger"].is_string()) throw ValidationError(where + ": 'finger' must be a string");
            const FingerId f = parse_finger(rec["finger"].get<std::string>());
            if (!seen_overrides.insert({version, f}).second) {
                throw ValidationError(where + ": duplicate override for " + version + "/" +
                                      std::string(to_string(f)));
            }
            overrides.push_back({version, {f, w}});
        } else {
            if (!seen_versions.insert(version).second) {
                throw ValidationError(where + ": duplicate version '" + version + "'");
            }
            bundle[version] = PerFinger<CalibrationWeights>::filled(w);
        }
    }
    for (const auto& [version, fw] : overrides) {
        if (bundle.count(version)) continue;
        int fingers = 0;
        for (FingerId f : kFingers) fingers += seen_overrides.count({version, f}) ? 1 : 0;
        if (fingers != static_cast<int>(kFingers.size())) {
            throw ValidationError("finger records for '" + version +
                                  "' need a base weights record or one record per finger");
        }
        bundle[version] = PerFinger<CalibrationWeights>::filled(fw.second);
    }
    for (const auto& [version, fw] : overrides) bundle[version][fw.first] = fw.second;
    return bundle;
}

WeightsBundle load_weights_bundle(const std::string& path) { return parse_weights_bundle(read_json_file(path)); }

nlohmann::json weights_to_json(const std::string& version, const CalibrationWeights& w) {
    return {{"version", version}, {"w", w.gains()}, {"b", w.biases()}};
}

std::map<std::string, DesignParams> parse_design_params(const nlohmann::json& doc) {
    const nlohmann::json records = doc.is_array() ? doc : nlohmann::json::array({doc});
    std::map<std::string, DesignParams> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        const std::string where = "design record " + std::to_string(i);
        try {
            if (!rec.is_object() || !rec.contains("version") || !rec["version"].is_string()) {
                throw ValidationError("missing string field 'version'");
            }
            const auto palm = finite_array<2>(rec.value("palm_size_mm", nlohmann::json()), "palm_size_mm");
            DesignParams d;
            d.palm_width_mm = palm[0];
            d.palm_length_mm = palm[1];
            d.finger_length_mm = number_field(rec, "finger_length_mm");
            d.mcp_diameter_mm = number_field(rec, "mcp_diameter_mm");
            d.mcp_height_mm = number_field(rec, "mcp_height_mm");
            d.dip_crease_width_mm = number_field(rec, "dip_crease_width_mm");
            d.fingertip_edge_mm = number_field(rec, "fingertip_edge_mm");
            d.fingertip_thickness_mm = number_field(rec, "fingertip_thickness_mm");
            d.thumb_angle_deg = number_field(rec, "thumb_angle_deg");
            d.finger_strength_n = number_field(rec, "finger_strength_n");
            d.validate();
            const auto version = rec["version"].get<std::string>();
            if (!out.emplace(version, d).second) throw ValidationError("duplicate version '" + version + "'");
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    return out;
}

std::map<std::string, DesignParams> load_design_params(const std::string& path) {
    return parse_design_params(read_json_file(path));
}

nlohmann::json design_to_json(const std::string& version, const DesignParams& d) {
    return {{"version", version},
            {"palm_size_mm", {d.palm_width_mm, d.palm_length_mm}},
            {"finger_length_mm", d.finger_length_mm},
            {"mcp_diameter_mm", d.mcp_diameter_mm},
            {"mcp_height_mm", d.mcp_height_mm},
            {"dip_crease_width_mm", d.dip_crease_width_mm},
            {"fingertip_edge_mm", d.fingertip_edge_mm},
            {"fingertip_thickness_mm", d.fingertip_thickness_mm},
            {"thumb_angle_deg", d.thumb_angle_deg},
            {"finger_strength_n", d.finger_strength_n}};
}

JointLimits parse_joint_limits(const nlohmann::json& doc) {
    JointLimits limits;
    if (!doc.is_object()) throw ValidationError("joint limits must be an object");
    for (const auto& item : doc.items()) {
        bool known = false;
        for (Joint j : kJoints) {
            if (item.key() == to_string(j)) {
                const auto r = finite_array<2>(item.value(), std::string(to_string(j)));
                limits[j] = {r[0], r[1]};
                known = true;
            }
        }
        if (!known) throw ValidationError("unknown joint '" + item.key() + "' in joint limits");
    }
    limits.validate();
    return limits;
}

nlohmann::json joint_limits_to_json(const JointLimits& limits) {
    nlohmann::json out = nlohmann::json::object();
    for (Joint j : kJoints) out[std::string(to_string(j))] = {limits[j].raw_min, limits[j].raw_max};
    return out;
}

}  // namespace dash
