#include "dash/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "dash/errors.hpp"

namespace dash::commands {

namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
    const fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(base_dir) / p).lexically_normal().string();
}

std::string string_field(const nlohmann::json& doc, const char* key) {
    if (!doc[key].is_string()) throw ConfigError(std::string("config: '") + key + "' must be a string");
    return doc[key].get<std::string>();
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace

AppConfig parse_app_config(const nlohmann::json& doc, const std::string& base_dir) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    AppConfig cfg;
    auto& s = cfg.session;
    for (const auto& item : doc.items()) {
        const std::string& key = item.key();
        const auto& v = item.value();
        if (key == "hand_version") {
            s.hand_version = string_field(doc, "hand_version");
        } else if (key == "weights") {
            s.weights = v.is_string() ? load_weights_bundle(resolve(base_dir, v.get<std::string>()))
                                      : parse_weights_bundle(v);
        } else if (key == "retarget") {
            s.retarget = retargeting::parse_retarget_config(v);
        } else if (key == "geometry") {
            s.geometry = v.is_string() ? finger_sim::load_geometry(resolve(base_dir, v.get<std::string>()))
                                       : finger_sim::parse_geometry(v);
        } else if (key == "listen_address") {
            s.listen_address = string_field(doc, "listen_address");
        } else if (key == "trials_path") {
            s.trials_path = resolve(base_dir, string_field(doc, "trials_path"));
        } else if (key == "tasks_path") {
            cfg.tasks_path = resolve(base_dir, string_field(doc, "tasks_path"));
        } else {
            throw ConfigError("config: unknown field '" + key + "'");
        }
    }
    s.validate();
    return cfg;
}

AppConfig load_app_config(const std::string& path) {
    const auto doc = read_json_file(path);
    try {
        return parse_app_config(doc, fs::path(path).parent_path().string().empty()
                                         ? std::string(".")
                                         : fs::path(path).parent_path().string());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::optional<std::string> resolve_config_path(const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return flag;
    if (const char* env = std::getenv("DASH_CONFIG"); env && *env) return std::string(env);
    return std::nullopt;
}

void write_text_file(const std::string& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
    finish_output(out, path);
}

// ---- calibrate ----------------------------------------------------------------

std::vector<calibration::FitReport> cmd_calibrate(const CalibrateOptions& opts, std::ostream& log) {
    const auto datasets = calibration::read_dataset_csv_file(opts.dataset_path);
    if (datasets.empty()) throw ValidationError(opts.dataset_path + ": dataset holds no samples");

    std::vector<calibration::FitReport> reports;
    for (const auto& [finger, ds] : datasets) {
        try {
            reports.push_back(calibration::fit(ds));
        } catch (const ComputationError& e) {
            throw ComputationError("finger " + std::string(to_string(finger)) + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("finger " + std::string(to_string(finger)) + ": " + e.what());
        }
    }

    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : reports) {
        auto rec = calibration::fit_report_to_json(opts.version, r);
        if (reports.size() == 1) rec.erase("finger");
        records.push_back(std::move(rec));
    }
    write_text_file(opts.out_path, records.dump(2) + "\n");

    char line[256];
    log << "finger      n      rmse0        rmse1        rmse2        det\n";
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, "%-8s %6zu  %.3e  %.3e  %.3e  %+.4f\n", std::string(to_string(r.finger)).c_str(),
                      r.sample_count, r.rmse[0], r.rmse[1], r.rmse[2], r.weights.mcp_determinant());
        log << line;
    }
    log << "wrote " << reports.size() << " weight record(s) for '" << opts.version << "' to " << opts.out_path << "\n";
    return reports;
}

// ---- simulate -----------------------------------------------------------------

SimulateResult cmd_simulate(const SimulateOptions& opts, std::ostream& log) {
    const finger_sim::FingerSimulator sim(opts.geometry, opts.limits);
    SimulateResult result;
    result.grid = sim.grid_shape(opts.sweep);

    std::vector<calibration::CalibrationDataset> datasets;
    if (opts.all_fingers) {
        result.fingers.assign(kFingers.begin(), kFingers.end());
    } else {
        result.fingers.push_back(opts.sweep.finger);
    }
    for (FingerId f : result.fingers) {
        auto sweep = opts.sweep;
        sweep.finger = f;
        sweep.seed = opts.sweep.seed + static_cast<std::uint64_t>(f);
        datasets.push_back(sim.generate_dataset(sweep));
        result.samples += datasets.back().count();
    }
    calibration::write_dataset_csv_file(opts.out_path, datasets);

    log << "samples: " << result.samples << " (" << result.fingers.size() << " finger(s))\n";
    log << "mode: " << (opts.sweep.mode == finger_sim::SweepMode::Grid ? "grid" : "random")
        << "  increment_deg: " << opts.sweep.increment_deg << "  budget: " << opts.sweep.sample_budget
        << "  noise_sigma: " << opts.sweep.noise_sigma << "  seed: " << opts.sweep.seed << "\n";
    if (opts.sweep.mode == finger_sim::SweepMode::Grid) {
        log << "grid (side x fwd x pip x dip): " << result.grid[0] << " x " << result.grid[1] << " x "
            << result.grid[2] << " x " << result.grid[3] << "\n";
    }
    log << "wrote " << opts.out_path << "\n";
    return result;
}

// ---- retarget -----------------------------------------------------------------

RetargetSummary replay(std::istream& glove, const std::string& origin, std::ostream& commands,
                       const RetargetOptions& opts) {
    retargeting::RetargetPipeline pipeline(opts.config, opts.weights);
    RetargetSummary sum;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(glove, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++sum.lines;
        const std::string where = origin + ":" + std::to_string(line_no);

        retargeting::GloveFrame frame;
        try {
            frame = retargeting::parse_glove_frame(nlohmann::json::parse(line));
        } catch (const std::exception& e) {
            ++sum.malformed;
            const std::string what = where + ": malformed frame: " + e.what();
            if (opts.strict) throw ValidationError(what);
            sum.problems.push_back(what);
            continue;
        }

        if (pipeline.watchdog_tick(frame.timestamp_ms)) ++sum.holds;
        try {
            const auto result = pipeline.process_frame(frame);
            ++sum.accepted;
            sum.saturated_motors += static_cast<std::size_t>(result.saturated);
            sum.saturated_frames += result.saturated > 0 ? 1 : 0;
            sum.rate_limited_motors += static_cast<std::size_t>(result.rate_limited);
            commands << retargeting::to_log_line(retargeting::command_to_json(result.command)) << '\n';
        } catch (const retargeting::FrameRejected& e) {
            ++sum.rejected;
            const std::string what = where + ": rejected: " + e.what();
            if (opts.strict) throw ValidationError(what);
            sum.problems.push_back(what);
        } catch (const ComputationError& e) {
            throw ComputationError(where + ": " + e.what());
        }
    }
    return sum;
}

RetargetSummary cmd_retarget(const RetargetOptions& opts, std::ostream& log) {
    opts.config.validate();
    std::ifstream in(opts.glove_path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + opts.glove_path + "'");
    std::ostringstream buffer;
    const auto sum = replay(in, opts.glove_path, buffer, opts);
    if (in.bad()) throw IoError("failed reading '" + opts.glove_path + "'");
    write_text_file(opts.out_path, buffer.str());

    for (const auto& p : sum.problems) log << p << "\n";
    log << "frames: " << sum.lines << "  accepted: " << sum.accepted << "  rejected: " << sum.rejected
        << "  malformed: " << sum.malformed << "\n";
    log << "saturated motors: " << sum.saturated_motors << " (in " << sum.saturated_frames
        << " frames)  rate-limited motors: " << sum.rate_limited_motors << "  holds: " << sum.holds << "\n";
    log << "wrote " << sum.accepted << " commands to " << opts.out_path << "\n";
    return sum;
}

// ---- evaluate -----------------------------------------------------------------

evaluation::ResultsTable cmd_evaluate(const EvaluateOptions& opts, const evaluation::TaskRegistry& tasks,
                                      std::ostream& out) {
    if (opts.format != "text" && opts.format != "csv" && opts.format != "json") {
        throw ValidationError("unknown report format '" + opts.format + "' (text, csv, json)");
    }
    const auto trials = evaluation::load_trials(opts.trials_path, tasks);
    auto table = evaluation::aggregate(trials, opts.strict, tasks);

    std::ostringstream body;
    if (opts.format == "csv") {
        evaluation::write_report_csv(body, table);
    } else if (opts.format == "json") {
        body << evaluation::report_to_json(table).dump(2) << "\n";
    } else {
        evaluation::write_report_text(body, table);
    }
    if (opts.out_path) {
        write_text_file(*opts.out_path, body.str());
    } else {
        out << body.str();
    }
    return table;
}

}  // namespace dash::commands
