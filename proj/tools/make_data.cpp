// Regenerates the bundled data files from the built-in tables.
//   dash_make_data <data-dir>
// reported_summary_trials.jsonl is expanded from <data-dir>/reported_summary.json.

#include <filesystem>
#include <iostream>
#include <sstream>

#include "dash/commands.hpp"
#include "dash/errors.hpp"

int main(int argc, char** argv) {
    using namespace dash;
    if (argc != 2) {
        std::cerr << "usage: dash_make_data <data-dir>\n";
        return 1;
    }
    const std::filesystem::path dir(argv[1]);
    try {
        nlohmann::json weights = nlohmann::json::array(), design = nlohmann::json::array();
        for (const auto& h : reference_hands()) {
            if (!h.weights) continue;
            weights.push_back(weights_to_json(h.name, (*h.weights)[FingerId::Thumb]));
            design.push_back(design_to_json(h.name, *h.design));
        }
        commands::write_text_file((dir / "weights.json").string(), weights.dump(2) + "\n");
        commands::write_text_file((dir / "design_params.json").string(), design.dump(2) + "\n");
        commands::write_text_file((dir / "tasks.json").string(),
                                  evaluation::task_registry_to_json(evaluation::TaskRegistry::builtin()).dump(2) + "\n");
        commands::write_text_file((dir / "default_geometry.json").string(),
                                  finger_sim::geometry_to_json(finger_sim::FingerGeometry{}).dump(2) + "\n");

        const auto summary = evaluation::parse_reported_summary(read_json_file((dir / "reported_summary.json").string()));
        std::ostringstream trials;
        for (const auto& t : evaluation::expand_summary(summary)) trials << trial_to_json(t).dump() << "\n";
        commands::write_text_file((dir / "reported_summary_trials.jsonl").string(), trials.str());
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    }
    return 0;
}
