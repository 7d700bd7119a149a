#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dash/commands.hpp"
#include "dash/errors.hpp"

namespace {

using namespace dash;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool strict = false;
};

commands::AppConfig load_config(const Globals& g) {
    const auto path = commands::resolve_config_path(g.config_path.empty() ? std::nullopt
                                                                          : std::optional<std::string>(g.config_path));
    return path ? commands::load_app_config(*path) : commands::AppConfig{};
}

evaluation::TaskRegistry load_tasks(const commands::AppConfig& cfg) {
    return cfg.tasks_path ? evaluation::load_task_registry(*cfg.tasks_path) : evaluation::TaskRegistry::builtin();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Soft-hand teleoperation toolkit: calibration, simulation, retargeting, evaluation, service"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config_path, "Config JSON (overrides $DASH_CONFIG)");
    app.add_option("--seed", g.seed, "Seed for stochastic steps");
    app.add_flag("--strict", g.strict, "Treat malformed input and missing repetitions as errors");

    // calibrate
    commands::CalibrateOptions cal;
    auto* calibrate = app.add_subcommand("calibrate", "Fit joint-to-motor weights from a calibration CSV");
    calibrate->add_option("dataset", cal.dataset_path, "Calibration CSV")->required();
    calibrate->add_option("-o,--out", cal.out_path, "Weights JSON to write")->required();
    calibrate->add_option("--version", cal.version, "Version name stored in the weights records");

    // simulate
    commands::SimulateOptions sim;
    std::string geometry_path, finger_name = "index", mode_name = "grid";
    auto* simulate = app.add_subcommand("simulate", "Generate a calibration CSV from the finger simulator");
    simulate->add_option("-g,--geometry", geometry_path, "Finger geometry JSON (default: config or built-in)");
    simulate->add_option("--increment", sim.sweep.increment_deg, "Sweep increment in degrees")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    simulate->add_option("--noise", sim.sweep.noise_sigma, "Gaussian noise sigma on motor values")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    simulate->add_option("--budget", sim.sweep.sample_budget, "Sample budget per finger (0 = full grid)")
        ->capture_default_str();
    simulate->add_option("--mode", mode_name, "grid or random")->check(CLI::IsMember({"grid", "random"}));
    simulate->add_option("--finger", finger_name, "thumb, index, middle, ring or all")->capture_default_str();
    simulate->add_option("-o,--out", sim.out_path, "CSV to write")->required();

    // retarget
    commands::RetargetOptions rt;
    std::string weights_path, hand_name, retarget_path;
    auto* retarget = app.add_subcommand("retarget", "Replay a glove log through the retargeting pipeline");
    retarget->add_option("glove_log", rt.glove_path, "Glove JSON-lines log")->required();
    retarget->add_option("-o,--out", rt.out_path, "Command JSON-lines log to write")->required();
    retarget->add_option("--weights", weights_path, "Weights bundle JSON (default: config or built-in)");
    retarget->add_option("--hand", hand_name, "Hand version (default: config or v1)");
    retarget->add_option("--retarget-config", retarget_path, "Retargeting config JSON");

    // evaluate
    commands::EvaluateOptions ev;
    std::string report_out;
    auto* evaluate = app.add_subcommand("evaluate", "Aggregate a trial log into a results table");
    evaluate->add_option("trials", ev.trials_path, "Trial JSON-lines log")->required();
    evaluate->add_option("-f,--format", ev.format, "text, csv or json")
        ->capture_default_str()
        ->check(CLI::IsMember({"text", "csv", "json"}));
    evaluate->add_option("-o,--out", report_out, "Write the report here instead of stdout");

    // serve
    std::string listen, trials_path;
    int threads = 4;
    auto* serve = app.add_subcommand("serve", "Run the session service");
    serve->add_option("--listen", listen, "host:port (default: config or 127.0.0.1:8765)");
    serve->add_option("--trials", trials_path, "Append-only trial log");
    serve->add_option("--hand", hand_name, "Hand version");
    serve->add_option("--threads", threads, "I/O threads")->capture_default_str()->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorKind::Validation);
    }

    try {
        auto cfg = load_config(g);
        auto& session = cfg.session;

        if (*calibrate) {
            commands::cmd_calibrate(cal, std::cout);
        } else if (*simulate) {
            sim.geometry = geometry_path.empty() ? session.geometry : finger_sim::load_geometry(geometry_path);
            sim.limits = session.retarget.robot_limits;
            sim.sweep.mode = mode_name == "random" ? finger_sim::SweepMode::Random : finger_sim::SweepMode::Grid;
            sim.sweep.seed = g.seed.value_or(sim.geometry.seed);
            if (finger_name == "all") {
                sim.all_fingers = true;
            } else {
                sim.sweep.finger = parse_finger(finger_name);
            }
            commands::cmd_simulate(sim, std::cout);
        } else if (*retarget) {
            if (!weights_path.empty()) session.weights = load_weights_bundle(weights_path);
            if (!hand_name.empty()) session.hand_version = hand_name;
            if (!retarget_path.empty()) session.retarget = retargeting::parse_retarget_config(read_json_file(retarget_path));
            session.validate();
            rt.weights = session.hand_weights();
            rt.config = session.retarget;
            rt.strict = g.strict;
            const auto sum = commands::cmd_retarget(rt, std::cout);
            if (sum.rejected + sum.malformed > 0) {
                std::cerr << (sum.rejected + sum.malformed) << " frame(s) skipped\n";
            }
        } else if (*evaluate) {
            ev.strict = g.strict;
            if (!report_out.empty()) ev.out_path = report_out;
            const auto tasks = load_tasks(cfg);
            const auto table = commands::cmd_evaluate(ev, tasks, std::cout);
            for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";
        } else if (*serve) {
            if (!listen.empty()) session.listen_address = listen;
            if (!trials_path.empty()) session.trials_path = trials_path;
            if (!hand_name.empty()) session.hand_version = hand_name;
            const auto tasks = load_tasks(cfg);
            service::Server server(session, tasks);
            server.start(threads);
            std::cout << "listening on port " << server.port() << " (hand " << session.hand_version << ")"
                      << std::endl;
            server.wait();
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::Validation);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::Computation);
    }
    return 0;
}
