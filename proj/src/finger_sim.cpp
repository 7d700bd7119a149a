#include "dash/finger_sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "dash/errors.hpp"

namespace dash::finger_sim {

namespace {

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

void require_positive(double v, const std::string& what) {
    if (!(std::isfinite(v) && v > 0.0)) {
        std::ostringstream msg;
        msg << "geometry: " << what << " must be positive, got " << v;
        throw ConfigError(msg.str());
    }
}

MomentArm parse_arm(const nlohmann::json& v, const std::string& what) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw ConfigError("geometry: " + what + " must be a number or a [r0, r1] pair");
}

nlohmann::json arm_to_json(const MomentArm& a) {
    if (a.r1_mm_per_rad == 0.0) return a.r0_mm;
    return {a.r0_mm, a.r1_mm_per_rad};
}

}  // namespace

void FingerGeometry::validate() const {
    for (std::size_t i = 0; i < 3; ++i) require_positive(link_lengths_mm[i], "link_lengths_mm[" + std::to_string(i) + "]");
    require_positive(mcp_fwd_arm.r0_mm, "moment arm r0 (mcp_fwd)");
    require_positive(pip_arm.r0_mm, "moment arm r0 (pip)");
    require_positive(dip_arm.r0_mm, "moment arm r0 (dip)");
    require_positive(pulley_radius_mm, "pulley_radius_mm");
    require_positive(side_moment_arm_mm, "side_moment_arm_mm");
    if (max_winding_angle_rad) require_positive(*max_winding_angle_rad, "max_winding_angle_rad");
    for (const MomentArm* a : {&mcp_fwd_arm, &pip_arm, &dip_arm}) {
        if (!std::isfinite(a->r1_mm_per_rad)) throw ConfigError("geometry: moment arm r1 must be finite");
    }
}

FingerGeometry parse_geometry(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("geometry must be a JSON object");
    FingerGeometry g;
    for (const auto& item : doc.items()) {
        const auto& key = item.key();
        const auto& v = item.value();
        if (key == "link_lengths_mm") {
            if (!v.is_array() || v.size() != 3) throw ConfigError("geometry: link_lengths_mm must hold 3 numbers");
            for (std::size_t i = 0; i < 3; ++i) g.link_lengths_mm[i] = v.at(i).get<double>();
        } else if (key == "moment_arms_mm") {
            if (v.is_number()) {
                g.mcp_fwd_arm = g.pip_arm = g.dip_arm = parse_arm(v, key);
            } else if (v.is_array() && v.size() == 3) {
                g.mcp_fwd_arm = parse_arm(v[0], "moment_arms_mm[0]");
                g.pip_arm = parse_arm(v[1], "moment_arms_mm[1]");
                g.dip_arm = parse_arm(v[2], "moment_arms_mm[2]");
            } else {
                throw ConfigError("geometry: moment_arms_mm must be a number or 3 entries (mcp_fwd, pip, dip)");
            }
        } else if (key == "pulley_radius_mm") {
            g.pulley_radius_mm = v.get<double>();
        } else if (key == "side_moment_arm_mm") {
            g.side_moment_arm_mm = v.get<double>();
        } else if (key == "max_winding_angle_rad") {
            g.max_winding_angle_rad = v.get<double>();
        } else if (key == "seed") {
            g.seed = v.get<std::uint64_t>();
        } else {
            throw ConfigError("geometry: unknown field '" + key + "'");
        }
    }
    g.validate();
    return g;
}

FingerGeometry load_geometry(const std::string& path) {
    try {
        return parse_geometry(read_json_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("geometry '" + path + "': " + e.what());
    }
}

nlohmann::json geometry_to_json(const FingerGeometry& g) {
    nlohmann::json j = {{"link_lengths_mm", g.link_lengths_mm},
                        {"moment_arms_mm", {arm_to_json(g.mcp_fwd_arm), arm_to_json(g.pip_arm), arm_to_json(g.dip_arm)}},
                        {"pulley_radius_mm", g.pulley_radius_mm},
                        {"side_moment_arm_mm", g.side_moment_arm_mm},
                        {"seed", g.seed}};
    if (g.max_winding_angle_rad) j["max_winding_angle_rad"] = *g.max_winding_angle_rad;
    return j;
}

Excursion tendon_excursion(const RawJointAngles& raw, const FingerGeometry& g) {
    return {g.side_moment_arm_mm * deg2rad(raw.mcp_side_deg),
            g.mcp_fwd_arm.excursion(deg2rad(raw.mcp_fwd_deg)),
            g.pip_arm.excursion(deg2rad(raw.pip_deg)) + g.dip_arm.excursion(deg2rad(raw.dip_deg))};
}

FingerPose fingertip_positions(const RawJointAngles& raw, const FingerGeometry& g) {
    FingerPose pose;
    const double joint_rad[3] = {deg2rad(raw.mcp_fwd_deg), deg2rad(raw.pip_deg), deg2rad(raw.dip_deg)};
    double heading = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        heading += joint_rad[i];
        pose.points[i + 1] = {pose.points[i].x + g.link_lengths_mm[i] * std::cos(heading),
                              pose.points[i].y - g.link_lengths_mm[i] * std::sin(heading)};
    }
    pose.splay_deg = raw.mcp_side_deg;
    return pose;
}

// ---- simulator ----------------------------------------------------------------

FingerSimulator::FingerSimulator(FingerGeometry geometry, JointLimits limits)
    : geometry_(std::move(geometry)), limits_(limits) {
    geometry_.validate();
    limits_.validate();

    // Monotone excursions need a positive moment arm over the whole joint range.
    const std::pair<const MomentArm*, Joint> arms[] = {
        {&geometry_.mcp_fwd_arm, Joint::McpFwd}, {&geometry_.pip_arm, Joint::Pip}, {&geometry_.dip_arm, Joint::Dip}};
    for (const auto& [arm, joint] : arms) {
        const auto& r = limits_[joint];
        if (!(arm->at(deg2rad(r.raw_min)) > 0.0 && arm->at(deg2rad(r.raw_max)) > 0.0)) {
            throw ConfigError("geometry: moment arm for " + std::string(to_string(joint)) +
                              " is not positive over the joint range");
        }
    }

    RawJointAngles lo, hi;
    for (Joint j : kJoints) {
        lo[j] = limits_[j].raw_min;
        hi[j] = limits_[j].raw_max;
    }
    baseline_ = tendon_excursion(lo, geometry_);
    const Excursion top = tendon_excursion(hi, geometry_);
    const double spans[3] = {top.e0_mm - baseline_.e0_mm, top.e1_mm - baseline_.e1_mm, top.e2_mm - baseline_.e2_mm};
    const double widest = *std::max_element(std::begin(spans), std::end(spans));

    if (geometry_.max_winding_angle_rad) {
        winding_rad_ = *geometry_.max_winding_angle_rad;
        const double reach = widest / (geometry_.pulley_radius_mm * winding_rad_);
        if (reach > 1.0 + 1e-12) {
            std::ostringstream msg;
            msg << "geometry: max_winding_angle_rad " << winding_rad_ << " too small; extreme joints drive a motor to "
                << reach << " (> 1)";
            throw ConfigError(msg.str());
        }
    } else {
        winding_rad_ = widest / geometry_.pulley_radius_mm;
    }
}

std::array<double, 3> FingerSimulator::raw_motor_(const Excursion& e) const {
    const double scale = geometry_.pulley_radius_mm * winding_rad_;
    return {(e.e0_mm - baseline_.e0_mm) / scale, (e.e1_mm - baseline_.e1_mm) / scale,
            (e.e2_mm - baseline_.e2_mm) / scale};
}

Excursion FingerSimulator::excursion(const JointAngles& joints) const {
    return tendon_excursion(denormalize(joints, limits_), geometry_);
}

MotorTriple FingerSimulator::motors_from_state(const JointAngles& joints) const {
    const auto raw = raw_motor_(excursion(joints));
    MotorTriple out;
    for (std::size_t k = 0; k < 3; ++k) out[k] = clamp01(raw[k]);
    return out;
}

FingerPose FingerSimulator::pose(const JointAngles& joints) const {
    return fingertip_positions(denormalize(joints, limits_), geometry_);
}

CalibrationWeights FingerSimulator::implied_weights() const {
    if (!geometry_.constant_arms()) {
        throw ConfigError("implied_weights: angle-dependent moment arms do not yield an affine model");
    }
    const double scale = geometry_.pulley_radius_mm * winding_rad_;
    CalibrationWeights w;
    w.w1 = geometry_.side_moment_arm_mm * deg2rad(limits_.mcp_side.span()) / scale;
    w.w4 = geometry_.mcp_fwd_arm.r0_mm * deg2rad(limits_.mcp_fwd.span()) / scale;
    w.w5 = 2.0 * geometry_.pip_arm.r0_mm * deg2rad(limits_.pip.span()) / scale;
    w.w6 = 2.0 * geometry_.dip_arm.r0_mm * deg2rad(limits_.dip.span()) / scale;
    return w;
}

namespace {

// Achievable point counts for one dimension with n full-resolution points,
// mapped to the smallest stride (in increments) producing each count.
std::map<std::size_t, std::size_t> stride_options(std::size_t n) {
    std::map<std::size_t, std::size_t> out;
    if (n <= 1) {
        out[1] = 1;
        return out;
    }
    for (std::size_t k = n - 1; k >= 1; --k) {
        out[(n - 1) / k + 1] = k;
    }
    return out;
}

}  // namespace

std::array<std::size_t, 4> FingerSimulator::grid_shape(const SweepOptions& opts) const {
    if (!(std::isfinite(opts.increment_deg) && opts.increment_deg > 0.0)) {
        throw ConfigError("sweep increment must be positive");
    }
    if (opts.sample_budget > kSampleHardCap) {
        throw ConfigError("sample budget " + std::to_string(opts.sample_budget) + " exceeds the hard cap of " +
                          std::to_string(kSampleHardCap));
    }
    std::array<std::size_t, 4> full{};
    double full_count = 1.0;
    for (Joint j : kJoints) {
        const auto idx = static_cast<std::size_t>(j);
        full[idx] = static_cast<std::size_t>(std::floor(limits_[j].span() / opts.increment_deg + 1e-9)) + 1;
        full_count *= static_cast<double>(full[idx]);
    }
    if (opts.sample_budget == 0) {
        if (full_count > static_cast<double>(kSampleHardCap)) {
            std::ostringstream msg;
            msg << "increment " << opts.increment_deg << " deg yields " << full_count
                << " grid samples, above the hard cap of " << kSampleHardCap;
            throw ConfigError(msg.str());
        }
        return full;
    }
    if (full_count <= static_cast<double>(opts.sample_budget)) return full;

    // Exhaustive search over per-dimension strides for the product closest to the
    // budget; ties go to the most balanced grid.
    std::array<std::vector<std::size_t>, 4> counts;
    for (std::size_t d = 0; d < 4; ++d) {
        for (const auto& [m, k] : stride_options(full[d])) {
            if (m >= 2 || full[d] == 1) counts[d].push_back(m);
        }
    }
    const double budget = static_cast<double>(opts.sample_budget);
    std::array<std::size_t, 4> best = full;
    double best_err = std::numeric_limits<double>::infinity();
    std::size_t best_spread = std::numeric_limits<std::size_t>::max();
    for (std::size_t a : counts[0]) {
        for (std::size_t b : counts[1]) {
            if (double(a * b) > 2.0 * budget) break;
            for (std::size_t c : counts[2]) {
                if (double(a * b * c) > 2.0 * budget) break;
                for (std::size_t d : counts[3]) {
                    const double prod = double(a * b * c * d);
                    const double err = std::abs(prod - budget);
                    const std::size_t spread = std::max({a, b, c, d}) - std::min({a, b, c, d});
                    if (err < best_err || (err == best_err && spread < best_spread)) {
                        best_err = err;
                        best_spread = spread;
                        best = {a, b, c, d};
                    }
                    if (prod > budget) break;
                }
            }
        }
    }
    return best;
}

calibration::CalibrationDataset FingerSimulator::generate_dataset(const SweepOptions& opts) const {
    if (!(std::isfinite(opts.noise_sigma) && opts.noise_sigma >= 0.0)) {
        throw ConfigError("noise sigma must be non-negative");
    }
    calibration::CalibrationDataset ds;
    ds.finger = opts.finger;
    ds.increment_deg = opts.increment_deg;

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> noise(0.0, opts.noise_sigma > 0.0 ? opts.noise_sigma : 1.0);

    auto push = [&](const JointAngles& joints) {
        calibration::CalibrationSample s;
        s.joints = joints;
        s.motors = motors_from_state(joints);
        if (opts.noise_sigma > 0.0) {
            for (std::size_t k = 0; k < 3; ++k) s.motors[k] = clamp01(s.motors[k] + noise(rng));
        }
        s.source = calibration::SampleSource::Simulated;
        ds.samples.push_back(s);
    };

    if (opts.mode == SweepMode::Random) {
        if (opts.sample_budget == 0) throw ConfigError("random sweep needs a positive sample budget");
        if (!(std::isfinite(opts.increment_deg) && opts.increment_deg > 0.0)) {
            throw ConfigError("sweep increment must be positive");
        }
        if (opts.sample_budget > kSampleHardCap) throw ConfigError("sample budget exceeds the hard cap");
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        ds.samples.reserve(opts.sample_budget);
        for (std::size_t i = 0; i < opts.sample_budget; ++i) {
            JointAngles j;
            for (Joint jt : kJoints) j[jt] = unit(rng);
            push(j);
        }
        return ds;
    }

    const auto shape = grid_shape(opts);
    std::array<std::vector<double>, 4> axes;
    for (Joint j : kJoints) {
        const auto d = static_cast<std::size_t>(j);
        const auto& r = limits_[j];
        const auto n_full = static_cast<std::size_t>(std::floor(r.span() / opts.increment_deg + 1e-9)) + 1;
        const std::size_t stride = shape[d] <= 1 ? 1 : stride_options(n_full).at(shape[d]);
        for (std::size_t i = 0; i < shape[d]; ++i) {
            const double raw = r.raw_min + static_cast<double>(i * stride) * opts.increment_deg;
            axes[d].push_back(normalize(raw, r));
        }
    }
    ds.samples.reserve(shape[0] * shape[1] * shape[2] * shape[3]);
    for (double side : axes[0])
        for (double fwd : axes[1])
            for (double pip : axes[2])
                for (double dip : axes[3]) push({side, fwd, pip, dip});
    return ds;
}

}  // namespace dash::finger_sim
