#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dash/calibration.hpp"
#include "dash/commands.hpp"
#include "dash/errors.hpp"
#include "dash/evaluation.hpp"
#include "dash/finger_sim.hpp"
#include "dash/hand_model.hpp"

namespace py = pybind11;
using namespace dash;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::handle& obj) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

CalibrationWeights weights_arg(const py::object& w) {
    if (py::isinstance<py::str>(w)) return reference_weights(w.cast<std::string>());
    auto rec = from_py(w);
    if (!rec.contains("version")) rec["version"] = "python";
    return parse_weights_bundle(rec).begin()->second[FingerId::Index];
}

JointAngles joints_arg(const std::array<double, 4>& q) { return {q[0], q[1], q[2], q[3]}; }

}  // namespace

PYBIND11_MODULE(_dash, m) {
    m.doc() = "Bindings for the soft-hand teleoperation core";

    static py::exception<Error> base(m, "DashError");
    static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
    static py::exception<IoError> io(m, "IoError", base.ptr());
    static py::exception<ComputationError> computation(m, "ComputationError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            py::set_error(validation, e.what());
        } catch (const IoError& e) {
            py::set_error(io, e.what());
        } catch (const ComputationError& e) {
            py::set_error(computation, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        } catch (const nlohmann::json::exception& e) {
            py::set_error(validation, e.what());
        }
    });

    m.def("hand_versions", [] {
        std::vector<std::string> out;
        for (const auto& [name, _] : reference_weights_bundle()) out.push_back(name);
        return out;
    });

    m.def("reference_weights", [](const std::string& version) { return to_py(weights_to_json(version, reference_weights(version))); },
          py::arg("version"));

    m.def("design_params", [](const std::string& version) { return to_py(design_to_json(version, reference_design(version))); },
          py::arg("version"));

    m.def(
        "forward",
        [](const py::object& weights, const std::array<double, 4>& joints) {
            const auto out = calibration::forward_finger(joints_arg(joints), weights_arg(weights));
            py::dict d;
            d["motors"] = out.motors.m;
            d["raw"] = out.raw;
            d["saturated"] = out.saturated;
            return d;
        },
        py::arg("weights"), py::arg("joints"),
        "Joint angles (side, fwd, pip, dip in [0,1]) to motor commands for one finger.");

    m.def(
        "invert_mcp",
        [](const py::object& weights, double motor0, double motor1) {
            const auto j = calibration::invert_mcp(motor0, motor1, weights_arg(weights));
            return std::make_pair(j.mcp_side, j.mcp_fwd);
        },
        py::arg("weights"), py::arg("motor0"), py::arg("motor1"));

    m.def(
        "split_curl",
        [](const py::object& weights, double motor2) {
            const auto c = calibration::split_curl(motor2, weights_arg(weights));
            return std::make_pair(c.pip, c.dip);
        },
        py::arg("weights"), py::arg("motor2"));

    m.def(
        "simulate",
        [](const std::string& out_path, double increment_deg, std::size_t budget, double noise, std::uint64_t seed,
           const std::string& mode, const std::string& finger) {
            commands::SimulateOptions opts;
            opts.out_path = out_path;
            opts.sweep.increment_deg = increment_deg;
            opts.sweep.sample_budget = budget;
            opts.sweep.noise_sigma = noise;
            opts.sweep.seed = seed;
            if (mode != "grid" && mode != "random") throw ValidationError("mode must be 'grid' or 'random'");
            opts.sweep.mode = mode == "grid" ? finger_sim::SweepMode::Grid : finger_sim::SweepMode::Random;
            if (finger == "all") {
                opts.all_fingers = true;
            } else {
                opts.sweep.finger = parse_finger(finger);
            }
            std::ostringstream log;
            return commands::cmd_simulate(opts, log).samples;
        },
        py::arg("out_path"), py::arg("increment_deg") = 3.0, py::arg("budget") = 1000, py::arg("noise") = 0.0,
        py::arg("seed") = 0, py::arg("mode") = "grid", py::arg("finger") = "index",
        "Writes a calibration CSV from the built-in finger simulator; returns the sample count.");

    m.def(
        "implied_weights",
        [] {
            const finger_sim::FingerSimulator sim(finger_sim::FingerGeometry{}, JointLimits{});
            return to_py(weights_to_json("implied", sim.implied_weights()));
        },
        "Affine weights implied by the default simulator geometry.");

    m.def(
        "calibrate",
        [](const std::string& dataset_path, const std::string& out_path, const std::string& version) {
            commands::CalibrateOptions opts{dataset_path, out_path, version};
            std::ostringstream log;
            nlohmann::json out = nlohmann::json::array();
            for (const auto& r : commands::cmd_calibrate(opts, log)) out.push_back(calibration::fit_report_to_json(version, r));
            return to_py(out);
        },
        py::arg("dataset_path"), py::arg("out_path"), py::arg("version") = "calibrated");

    m.def(
        "retarget",
        [](const std::string& glove_path, const std::string& out_path, const std::string& hand, bool strict) {
            commands::RetargetOptions opts;
            opts.glove_path = glove_path;
            opts.out_path = out_path;
            opts.strict = strict;
            const auto bundle = reference_weights_bundle();
            const auto it = bundle.find(hand);
            if (it == bundle.end()) throw ValidationError("unknown hand version '" + hand + "'");
            opts.weights = it->second;
            std::ostringstream log;
            const auto s = commands::cmd_retarget(opts, log);
            py::dict d;
            d["lines"] = s.lines;
            d["accepted"] = s.accepted;
            d["rejected"] = s.rejected;
            d["malformed"] = s.malformed;
            d["holds"] = s.holds;
            d["saturated_motors"] = s.saturated_motors;
            d["rate_limited_motors"] = s.rate_limited_motors;
            d["problems"] = s.problems;
            return d;
        },
        py::arg("glove_path"), py::arg("out_path"), py::arg("hand") = "v1", py::arg("strict") = false);

    m.def(
        "evaluate",
        [](const std::string& trials_path, bool strict) {
            return to_py(evaluation::report_to_json(evaluation::aggregate(evaluation::load_trials(trials_path), strict)));
        },
        py::arg("trials_path"), py::arg("strict") = false);

    m.def("tasks", [] { return to_py(evaluation::task_registry_to_json(evaluation::TaskRegistry::builtin())); });
}
