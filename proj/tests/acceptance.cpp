// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "dash/calibration.hpp"
#include "dash/commands.hpp"
#include "dash/evaluation.hpp"
#include "dash/finger_sim.hpp"
#include "dash/hand_model.hpp"
#include "dash/retargeting.hpp"
#include "support.hpp"

using namespace dash;

namespace {

constexpr double kForwardTol = 1e-9;
constexpr double kFitTol = 1e-6;
constexpr double kFitRmseTol = 1e-9;
constexpr double kNoisyFitTol = 0.05;
constexpr double kNoiseSigma = 0.01;
constexpr double kRoundTripTol = 1e-9;
constexpr int kRoundTripPoints = 1000;
constexpr std::size_t kReplayFrames = 10000;
constexpr double kTimeBudgetS = 5.0;

struct Check {
    bool ok = true;
    std::string detail;
    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, pattern, a, b);
    return buf;
}

Check forward_arithmetic() {
    Check c;
    struct Expect {
        const char* v;
        std::array<double, 3> zero, ones;
    };
    const Expect table[] = {
        {"v1", {0.47, -0.07, 0.01}, {-0.48, 0.77, 0.84}},
        {"v2", {0.38, 0.01, -0.10}, {0.46, 0.75, 0.58}},
        {"v3", {0.38, 0.01, -0.10}, {0.46, 0.75, 0.58}},
        {"v4", {0.45, 0.44, -0.175}, {0.12, 0.70, 0.98}},
        {"v5", {0.58, -0.03, -0.08}, {-0.33, 0.50, 0.56}},
    };
    auto compare = [&](const char* v, const JointAngles& q, const std::array<double, 3>& want) {
        const auto w = reference_weights(v);
        const auto mcp = calibration::forward_mcp(q, w);
        const double got[3] = {mcp.motor0, mcp.motor1, calibration::forward_curl(q.pip, q.dip, w)};
        for (std::size_t k = 0; k < 3; ++k) {
            if (!(std::abs(got[k] - want[k]) <= kForwardTol)) {
                c.fail(std::string(v) + fmt(" motor%.0f off by %.3g", double(k), std::abs(got[k] - want[k])));
            }
        }
    };
    for (const auto& e : table) {
        compare(e.v, {0, 0, 0, 0}, e.zero);
        compare(e.v, {1, 1, 1, 1}, e.ones);
    }
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const char* v : test::kVersions) {
        for (int i = 0; i < 200; ++i) {
            const JointAngles q{u(rng), u(rng), u(rng), u(rng)};
            const auto o = test::oracle_motors(reference_weights(v), {q.mcp_side, q.mcp_fwd, q.pip, q.dip});
            compare(v, q, {o[0], o[1], o[2]});
        }
    }
    if (c.ok) c.detail = "5 versions, hand-computed anchors and 1000 random points within 1e-9";
    return c;
}

Check fit_recovery() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    const finger_sim::FingerSimulator sim(finger_sim::FingerGeometry{}, JointLimits{});
    const auto want = sim.implied_weights();

    finger_sim::SweepOptions sweep;
    sweep.sample_budget = 1000;
    const auto clean = calibration::fit(sim.generate_dataset(sweep));
    double worst = 0.0;
    for (std::size_t i = 0; i < 6; ++i) worst = std::max(worst, std::abs(clean.weights.gains()[i] - want.gains()[i]));
    for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::abs(clean.weights.biases()[i] - want.biases()[i]));
    const double rmse = std::max({clean.rmse[0], clean.rmse[1], clean.rmse[2]});
    if (!(worst <= kFitTol)) c.fail(fmt("noiseless weight error %.3g", worst));
    if (!(rmse < kFitRmseTol)) c.fail(fmt("noiseless RMSE %.3g", rmse));

    sweep.noise_sigma = kNoiseSigma;
    sweep.seed = 2024;
    const auto noisy = calibration::fit(sim.generate_dataset(sweep));
    double worst_noisy = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
        worst_noisy = std::max(worst_noisy, std::abs(noisy.weights.gains()[i] - want.gains()[i]));
    }
    for (std::size_t i = 0; i < 4; ++i) {
        worst_noisy = std::max(worst_noisy, std::abs(noisy.weights.biases()[i] - want.biases()[i]));
    }
    if (!(worst_noisy <= kNoisyFitTol)) c.fail(fmt("noisy weight error %.3g", worst_noisy));
    const double elapsed = seconds_since(t0);
    if (!(elapsed < kTimeBudgetS)) c.fail(fmt("took %.2f s", elapsed));
    if (c.ok) {
        c.detail = fmt("n=%.0f, max error %.2e", double(clean.sample_count), worst) + fmt(", rmse %.2e", rmse) +
                   fmt(", noisy max error %.4f, %.2f s", worst_noisy, elapsed);
    }
    return c;
}

Check round_trip() {
    Check c;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (const char* v : test::kVersions) {
        const auto w = reference_weights(v);
        if (!(std::abs(w.mcp_determinant()) > 0.1)) c.fail(std::string(v) + " has |det| <= 0.1");
        for (int i = 0; i < kRoundTripPoints; ++i) {
            const double side = u(rng), fwd = u(rng), curl = u(rng);
            const auto m = calibration::forward_mcp({side, fwd, 0, 0}, w);
            const auto back = calibration::invert_mcp(m.motor0, m.motor1, w);
            const auto split = calibration::split_curl(calibration::forward_curl(curl, curl, w), w);
            worst = std::max({worst, std::abs(back.mcp_side - side), std::abs(back.mcp_fwd - fwd),
                              std::abs(split.pip - curl), std::abs(split.dip - curl)});
        }
    }
    if (!(worst <= kRoundTripTol)) c.fail(fmt("max round-trip error %.3g", worst));
    if (c.ok) c.detail = fmt("5 versions x %.0f points, max error %.2e", kRoundTripPoints, worst);
    return c;
}

Check replay_invariants() {
    Check c;
    test::TempDir dir("acceptance");
    std::mt19937_64 rng(99);
    std::normal_distribution<double> step(0.0, 6.0);
    std::uniform_int_distribution<int> gap(8, 24);
    PerFinger<RawJointAngles> pose = PerFinger<RawJointAngles>::filled({0.0, 45.0, 50.0, 45.0});
    std::ostringstream glove;
    std::int64_t t = 0;
    for (std::size_t i = 0; i < kReplayFrames; ++i) {
        retargeting::GloveFrame f;
        t += gap(rng);
        f.timestamp_ms = t;
        for (FingerId id : kFingers) {
            auto& p = pose[id];
            p.mcp_side_deg = std::clamp(p.mcp_side_deg + step(rng), -45.0, 45.0);
            p.mcp_fwd_deg = std::clamp(p.mcp_fwd_deg + step(rng), -10.0, 100.0);
            p.pip_deg = std::clamp(p.pip_deg + step(rng), -10.0, 110.0);
            p.dip_deg = std::clamp(p.dip_deg + step(rng), -10.0, 100.0);
        }
        f.fingers = pose;
        glove << retargeting::to_log_line(retargeting::glove_frame_to_json(f)) << '\n';
    }
    test::spit(dir.file("glove.jsonl"), glove.str());

    commands::RetargetOptions opts;
    opts.glove_path = dir.file("glove.jsonl");
    opts.weights = reference_weights_bundle().at("v5");
    std::ostringstream sink;
    const auto t0 = std::chrono::steady_clock::now();
    opts.out_path = dir.file("a.jsonl");
    const auto first = commands::cmd_retarget(opts, sink);
    const double elapsed = seconds_since(t0);
    opts.out_path = dir.file("b.jsonl");
    commands::cmd_retarget(opts, sink);

    const std::string a = test::slurp(dir.file("a.jsonl"));
    if (a != test::slurp(dir.file("b.jsonl"))) c.fail("re-run output differs");
    if (first.accepted != kReplayFrames) c.fail(fmt("%.0f of 10000 frames accepted", double(first.accepted)));

    std::istringstream in(a);
    std::string line;
    std::optional<MotorCommand> prev;
    std::size_t n = 0;
    double max_delta = 0.0;
    const double limit = opts.config.max_delta_per_tick;
    while (std::getline(in, line)) {
        const auto cmd = retargeting::parse_command(nlohmann::json::parse(line));
        ++n;
        for (FingerId f : kFingers) {
            for (std::size_t k = 0; k < 3; ++k) {
                const double m = cmd.motors[f][k];
                if (!(m >= 0.0 && m <= 1.0)) c.fail(fmt("motor value %.6f outside [0,1]", m));
                if (prev) max_delta = std::max(max_delta, std::abs(m - prev->motors[f][k]));
            }
        }
        if (prev && !(cmd.timestamp_ms > prev->timestamp_ms)) c.fail("timestamps not strictly increasing");
        prev = cmd;
    }
    if (n != kReplayFrames) c.fail(fmt("%.0f commands written", double(n)));
    if (!(max_delta <= limit + 1e-12)) c.fail(fmt("delta %.6f exceeds %.3f", max_delta, limit));
    if (!(elapsed < kTimeBudgetS)) c.fail(fmt("replay took %.2f s", elapsed));
    if (c.ok) {
        c.detail = fmt("%.0f commands, max delta %.4f", double(n), max_delta) +
                   fmt(", %.0f rate-limited motors, %.2f s", double(first.rate_limited_motors), elapsed);
    }
    return c;
}

Check reported_numbers() {
    Check c;
    const auto table = evaluation::aggregate(evaluation::load_trials(test::data_path("reported_summary_trials.jsonl")));
    struct Expect {
        const char* hand;
        int percent, solved;
        std::vector<int> counts;
    };
    const Expect want[] = {{"v1", 70, 10, {105}},      {"v2", 82, 14, {123}}, {"v3", 83, 16, {124}},
                           {"v4", 75, 17, {112, 113}}, {"v5", 87, 19, {131}}, {"allegro", 60, 7, {90}}};
    std::string summary;
    for (const auto& e : want) {
        const auto* h = table.find(e.hand);
        if (!h) {
            c.fail(std::string("no results for ") + e.hand);
            continue;
        }
        if (h->rate_percent != e.percent) c.fail(std::string(e.hand) + fmt(" rate %.0f%%", h->rate_percent));
        if (h->tasks_fully_solved != e.solved) c.fail(std::string(e.hand) + fmt(" solved %.0f", h->tasks_fully_solved));
        if (std::find(e.counts.begin(), e.counts.end(), h->successes) == e.counts.end()) {
            c.fail(std::string(e.hand) + fmt(" successes %.0f", h->successes));
        }
        summary += std::string(summary.empty() ? "" : ", ") + e.hand + fmt(" %.0f%%/%.0f", h->rate_percent, h->tasks_fully_solved);
    }
    if (c.ok) c.detail = summary;
    return c;
}

Check category_structure() {
    Check c;
    const auto& reg = evaluation::TaskRegistry::builtin();
    if (reg.tasks().size() != 30) c.fail(fmt("%.0f tasks", double(reg.tasks().size())));
    const std::map<evaluation::Category, int> sizes = {
        {evaluation::Category::Hold, 10}, {evaluation::Category::Pick, 11},  {evaluation::Category::Lever, 2},
        {evaluation::Category::Twist, 2}, {evaluation::Category::Open, 2},   {evaluation::Category::PutInOn, 3}};
    for (const auto& [cat, n] : sizes) {
        if (reg.category_size(cat) != n) c.fail(std::string(evaluation::to_string(cat)) + " has the wrong size");
    }

    std::mt19937_64 rng(5);
    std::bernoulli_distribution coin(0.55);
    double worst = 0.0;
    constexpr int kLogs = 200;
    for (int round = 0; round < kLogs; ++round) {
        std::vector<evaluation::TrialRecord> log;
        for (const auto& hand : known_hand_names()) {
            for (int task = 1; task <= evaluation::kTaskCount; ++task) {
                for (int rep = 1; rep <= evaluation::kRepetitions; ++rep) log.push_back({hand, task, rep, coin(rng), "", 0});
            }
        }
        const auto table = evaluation::aggregate(log, true);
        const auto fractions = evaluation::category_breakdown(log);
        for (const auto& h : table.hands) {
            double recombined = 0.0;
            for (const auto& [cat, n] : sizes) {
                recombined += fractions.at(h.hand)[static_cast<std::size_t>(cat)] * evaluation::kRepetitions * n;
            }
            worst = std::max(worst, std::abs(recombined - h.successes));
        }
    }
    if (!(worst <= 1e-9)) c.fail(fmt("recombination off by %.3g", worst));
    if (c.ok) c.detail = fmt("30 tasks, sizes 10/11/2/2/2/3, identity over %.0f random logs (max error %.1e)", kLogs, worst);
    return c;
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Check()>> criteria[] = {
        {"forward-map arithmetic", forward_arithmetic},
        {"fit recovery", fit_recovery},
        {"inverse round-trip", round_trip},
        {"replay pipeline invariants", replay_invariants},
        {"reported aggregate numbers", reported_numbers},
        {"task category structure", category_structure},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Check c;
        try {
            c = run();
        } catch (const std::exception& e) {
            c.fail(std::string("exception: ") + e.what());
        }
        std::printf("%s  %s: %s\n", c.ok ? "PASS" : "FAIL", name, c.detail.c_str());
        failures += c.ok ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
