#include "dash/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "dash/errors.hpp"
#include "dash/hand_model.hpp"

namespace dash::evaluation {

namespace {

constexpr std::array<std::string_view, 6> kCategoryNames = {"hold", "pick", "lever", "twist", "open", "put_in_on"};

std::size_t index_of(Category c) { return static_cast<std::size_t>(c); }

}  // namespace

std::string_view to_string(Category c) { return kCategoryNames[index_of(c)]; }

Category parse_category(std::string_view s) {
    for (Category c : kCategories) {
        if (to_string(c) == s) return c;
    }
    throw ValidationError("unknown task category '" + std::string(s) + "'");
}

// ---- registry -----------------------------------------------------------------

TaskRegistry::TaskRegistry(std::vector<TaskSpec> tasks) : tasks_(std::move(tasks)) {
    if (tasks_.size() != static_cast<std::size_t>(kTaskCount)) {
        throw ValidationError("task registry must hold exactly " + std::to_string(kTaskCount) + " tasks, found " +
                              std::to_string(tasks_.size()));
    }
    std::sort(tasks_.begin(), tasks_.end(), [](const TaskSpec& a, const TaskSpec& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        if (tasks_[i].id != static_cast<int>(i) + 1) {
            throw ValidationError("task registry ids must be exactly 1.." + std::to_string(kTaskCount));
        }
    }
}

const TaskRegistry& TaskRegistry::builtin() {
    using C = Category;
    static const TaskRegistry reg({
        {1, "Scissor", C::Hold, false},
        {2, "Hammer", C::Hold, false},
        {3, "Chopsticks (single)", C::Hold, false},
        {4, "Pen", C::Hold, false},
        {5, "Wooden cylinder (using adduction/abduction)", C::Hold, false},
        {6, "Screwdriver", C::Hold, false},
        {7, "Drill", C::Hold, false},
        {8, "(Plastic) Egg", C::Hold, true},
        {9, "(Plastic) Chip", C::Hold, true},
        {10, "M&M", C::Hold, true},
        {11, "Dry-Erase Board Eraser", C::Pick, false},
        {12, "Tennis Ball", C::Pick, false},
        {13, "Softball", C::Pick, false},
        {14, "Cloth", C::Pick, true},
        {15, "Plush Broccoli", C::Pick, false},
        {16, "Plush Dinosaur", C::Pick, false},
        {17, "Pringles Can", C::Pick, false},
        {18, "Spam Box", C::Pick, false},
        {19, "Mustard Bottle", C::Pick, false},
        {20, "Wine Glass", C::Pick, false},
        {21, "Bin picking", C::Pick, false},
        {22, "Cube flip", C::Lever, false},
        {23, "Card pickup from deck", C::Lever, false},
        {24, "Dice rotation in-hand", C::Twist, false},
        {25, "Grape off of stem", C::Twist, true},
        {26, "Plastic bag", C::Open, true},
        {27, "Drawer", C::Open, false},
        {28, "Cup Pouring (onto plate)", C::PutInOn, false},
        {29, "Cup Stacking & unstacking", C::PutInOn, false},
        {30, "1 inch Block stacking", C::PutInOn, false},
    });
    return reg;
}

const TaskSpec& TaskRegistry::task(int id) const {
    if (!contains(id)) throw ValidationError("unknown task id " + std::to_string(id));
    return tasks_[static_cast<std::size_t>(id - 1)];
}

int TaskRegistry::category_size(Category c) const {
    return static_cast<int>(std::count_if(tasks_.begin(), tasks_.end(), [c](const TaskSpec& t) { return t.category == c; }));
}

TaskRegistry parse_task_registry(const nlohmann::json& doc) {
    if (!doc.is_array()) throw ValidationError("task registry must be a JSON array");
    std::vector<TaskSpec> tasks;
    try {
        for (const auto& t : doc) {
            tasks.push_back({t.at("id").get<int>(), t.at("name").get<std::string>(),
                             parse_category(t.at("category").get<std::string>()),
                             t.value("compliance_flagged", false)});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("task registry: ") + e.what());
    }
    return TaskRegistry(std::move(tasks));
}

TaskRegistry load_task_registry(const std::string& path) { return parse_task_registry(read_json_file(path)); }

nlohmann::json task_registry_to_json(const TaskRegistry& reg) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : reg.tasks()) {
        out.push_back({{"id", t.id},
                       {"name", t.name},
                       {"category", std::string(to_string(t.category))},
                       {"compliance_flagged", t.compliance_flagged}});
    }
    return out;
}

// ---- trial log ----------------------------------------------------------------

TrialRecord parse_trial(const nlohmann::json& j, const TaskRegistry& reg) {
    if (!j.is_object()) throw ValidationError("trial record must be a JSON object");
    TrialRecord t;
    if (!j.contains("hand") || !j["hand"].is_string()) throw ValidationError("missing string field 'hand'");
    t.hand = j["hand"].get<std::string>();
    if (!is_known_hand(t.hand)) throw ValidationError("unknown hand '" + t.hand + "'");
    if (!j.contains("task") || !j["task"].is_number_integer()) throw ValidationError("missing integer field 'task'");
    t.task_id = j["task"].get<int>();
    if (!reg.contains(t.task_id)) throw ValidationError("unknown task id " + std::to_string(t.task_id));
    if (!j.contains("rep") || !j["rep"].is_number_integer()) throw ValidationError("missing integer field 'rep'");
    t.rep = j["rep"].get<int>();
    if (t.rep < 1 || t.rep > kRepetitions) {
        throw ValidationError("rep " + std::to_string(t.rep) + " outside 1.." + std::to_string(kRepetitions));
    }
    if (!j.contains("success") || !j["success"].is_boolean()) throw ValidationError("missing boolean field 'success'");
    t.success = j["success"].get<bool>();
    if (j.contains("t")) {
        if (!j["t"].is_number_integer()) throw ValidationError("field 't' must be an integer");
        t.timestamp_ms = j["t"].get<std::int64_t>();
    }
    if (j.contains("notes")) {
        if (!j["notes"].is_string()) throw ValidationError("field 'notes' must be a string");
        t.notes = j["notes"].get<std::string>();
    }
    return t;
}

nlohmann::json trial_to_json(const TrialRecord& t) {
    return {{"hand", t.hand}, {"task", t.task_id}, {"rep", t.rep},
            {"success", t.success}, {"t", t.timestamp_ms}, {"notes", t.notes}};
}

std::vector<TrialRecord> parse_trials(std::istream& in, const std::string& origin, const TaskRegistry& reg) {
    std::vector<TrialRecord> out;
    std::map<std::tuple<std::string, int, int>, std::size_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        TrialRecord t;
        try {
            t = parse_trial(nlohmann::json::parse(line), reg);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(where + ": malformed JSON: " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        const auto key = std::make_tuple(t.hand, t.task_id, t.rep);
        if (auto it = seen.find(key); it != seen.end()) {
            throw ValidationError(where + ": duplicate trial (" + t.hand + ", task " + std::to_string(t.task_id) +
                                  ", rep " + std::to_string(t.rep) + "), first seen on line " +
                                  std::to_string(it->second));
        }
        seen.emplace(key, line_no);
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<TrialRecord> load_trials(const std::string& path, const TaskRegistry& reg) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trial log '" + path + "'");
    return parse_trials(in, path, reg);
}

// ---- aggregation ----------------------------------------------------------------

int round_percent(double value) { return static_cast<int>(std::round(value)); }

double HandResult::category_fraction(Category c) const {
    const int att = category_attempts[index_of(c)];
    return att == 0 ? 0.0 : static_cast<double>(category_successes[index_of(c)]) / att;
}

const HandResult* ResultsTable::find(std::string_view hand) const {
    for (const auto& h : hands) {
        if (h.hand == hand) return &h;
    }
    return nullptr;
}

namespace {

std::vector<std::string> ordered_hands(const std::vector<TrialRecord>& trials) {
    std::set<std::string> present;
    for (const auto& t : trials) present.insert(t.hand);
    std::vector<std::string> out;
    for (const auto& name : known_hand_names()) {
        if (present.count(name)) out.push_back(name);
    }
    return out;
}

}  // namespace

ResultsTable aggregate(const std::vector<TrialRecord>& trials, bool strict, const TaskRegistry& reg) {
    ResultsTable table;
    table.strict = strict;
    for (const auto& hand : ordered_hands(trials)) {
        HandResult r;
        r.hand = hand;
        std::map<int, int> task_successes;
        std::set<std::pair<int, int>> seen;
        for (const auto& t : trials) {
            if (t.hand != hand) continue;
            if (!seen.insert({t.task_id, t.rep}).second) continue;  // upstream validation rejects these
            const auto c = index_of(reg.task(t.task_id).category);
            ++r.recorded;
            ++r.category_attempts[c];
            if (t.success) {
                ++r.successes;
                ++r.category_successes[c];
                ++task_successes[t.task_id];
            }
        }
        for (const auto& [task, n] : task_successes) {
            if (n == kRepetitions) ++r.tasks_fully_solved;
        }
        r.missing = kTrialsPerHand - r.recorded;
        if (strict) {
            r.attempts = kTrialsPerHand;
            for (Category c : kCategories) r.category_attempts[index_of(c)] = kRepetitions * reg.category_size(c);
        } else {
            r.attempts = r.recorded;
            if (r.missing > 0) {
                table.warnings.push_back(hand + ": " + std::to_string(r.missing) +
                                         " repetitions missing, excluded from denominators");
            }
        }
        r.rate = r.attempts == 0 ? 0.0 : 100.0 * r.successes / r.attempts;
        r.rate_percent = round_percent(r.rate);
        table.hands.push_back(r);
    }
    return table;
}

std::map<std::string, std::array<double, 6>> category_breakdown(const std::vector<TrialRecord>& trials,
                                                                const TaskRegistry& reg) {
    std::map<std::string, std::array<double, 6>> out;
    std::map<std::string, std::array<int, 6>> successes;
    std::set<std::tuple<std::string, int, int>> seen;
    for (const auto& t : trials) {
        out.try_emplace(t.hand);
        successes.try_emplace(t.hand);
        if (!seen.insert({t.hand, t.task_id, t.rep}).second) continue;
        if (t.success) ++successes[t.hand][index_of(reg.task(t.task_id).category)];
    }
    for (auto& [hand, fractions] : out) {
        for (Category c : kCategories) {
            fractions[index_of(c)] =
                static_cast<double>(successes[hand][index_of(c)]) / (kRepetitions * reg.category_size(c));
        }
    }
    return out;
}

// ---- reports ------------------------------------------------------------------

void write_report_csv(std::ostream& out, const ResultsTable& table) {
    out << "hand,successes,rate,tasks_fully_solved";
    for (Category c : kCategories) out << ',' << to_string(c);
    out << '\n';
    char buf[32];
    for (const auto& h : table.hands) {
        out << h.hand << ',' << h.successes << ',' << h.rate_percent << ',' << h.tasks_fully_solved;
        for (Category c : kCategories) {
            std::snprintf(buf, sizeof buf, "%.4f", h.category_fraction(c));
            out << ',' << buf;
        }
        out << '\n';
    }
}

void write_report_text(std::ostream& out, const ResultsTable& table) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-8s %9s %6s %7s", "hand", "successes", "rate", "solved");
    out << buf;
    for (Category c : kCategories) {
        std::snprintf(buf, sizeof buf, " %9s", std::string(to_string(c)).c_str());
        out << buf;
    }
    out << '\n';
    for (const auto& h : table.hands) {
        std::snprintf(buf, sizeof buf, "%-8s %5d/%-3d %5d%% %4d/%-2d", h.hand.c_str(), h.successes, h.attempts,
                      h.rate_percent, h.tasks_fully_solved, kTaskCount);
        out << buf;
        for (Category c : kCategories) {
            std::snprintf(buf, sizeof buf, " %9.2f", h.category_fraction(c));
            out << buf;
        }
        out << '\n';
    }
    for (const auto& w : table.warnings) out << "warning: " << w << '\n';
}

nlohmann::json report_to_json(const ResultsTable& table) {
    nlohmann::json hands = nlohmann::json::array();
    for (const auto& h : table.hands) {
        nlohmann::json cats = nlohmann::json::object();
        for (Category c : kCategories) cats[std::string(to_string(c))] = h.category_fraction(c);
        hands.push_back({{"hand", h.hand},
                         {"successes", h.successes},
                         {"attempts", h.attempts},
                         {"missing", h.missing},
                         {"rate", h.rate_percent},
                         {"rate_exact", h.rate},
                         {"tasks_fully_solved", h.tasks_fully_solved},
                         {"categories", cats}});
    }
    return {{"strict", table.strict}, {"hands", hands}, {"warnings", table.warnings}};
}

void export_report(const ResultsTable& table, const std::string& format, const std::string& path) {
    if (format != "csv" && format != "text") throw ValidationError("unknown report format '" + format + "'");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report '" + path + "'");
    if (format == "csv") {
        write_report_csv(out, table);
    } else {
        write_report_text(out, table);
    }
    out.flush();
    if (!out) throw IoError("failed writing report '" + path + "'");
}

// ---- trial store ----------------------------------------------------------------

TrialStore::TrialStore(std::optional<std::string> path, const TaskRegistry& reg) : path_(std::move(path)), reg_(&reg) {
    if (path_) {
        std::ifstream in(*path_);
        if (in) trials_ = parse_trials(in, *path_, *reg_);
    }
}

void TrialStore::append(const TrialRecord& t) {
    std::lock_guard lock(mu_);
    for (const auto& existing : trials_) {
        if (existing.hand == t.hand && existing.task_id == t.task_id && existing.rep == t.rep) {
            throw DuplicateTrialError("duplicate trial (" + t.hand + ", task " + std::to_string(t.task_id) + ", rep " +
                                  std::to_string(t.rep) + ")");
        }
    }
    if (path_) {
        std::ofstream out(*path_, std::ios::app);
        if (!out) throw IoError("cannot append to trial log '" + *path_ + "'");
        out << trial_to_json(t).dump() << '\n';
        out.flush();
        if (!out) throw IoError("failed appending to trial log '" + *path_ + "'");
    }
    trials_.push_back(t);
}

std::vector<TrialRecord> TrialStore::snapshot() const {
    std::lock_guard lock(mu_);
    return trials_;
}

std::size_t TrialStore::size() const {
    std::lock_guard lock(mu_);
    return trials_.size();
}

// ---- reported summary ----------------------------------------------------------

std::vector<HandSummary> parse_reported_summary(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("hands") || !doc["hands"].is_array()) {
        throw ValidationError("summary must be an object with a 'hands' array");
    }
    std::vector<HandSummary> out;
    try {
        for (const auto& h : doc["hands"]) {
            HandSummary s;
            s.hand = h.at("hand").get<std::string>();
            if (!is_known_hand(s.hand)) throw ValidationError("unknown hand '" + s.hand + "'");
            s.successes = h.at("successes").get<int>();
            s.tasks_fully_solved = h.at("tasks_fully_solved").get<int>();
            s.fully_solved_tasks = h.value("fully_solved_tasks", std::vector<int>{});
            s.zero_tasks = h.value("zero_tasks", std::vector<int>{});
            s.ambiguous = h.value("ambiguous", false);
            s.note = h.value("note", std::string{});
            out.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("summary: ") + e.what());
    }
    return out;
}

std::vector<TrialRecord> expand_summary(const std::vector<HandSummary>& summary, const TaskRegistry& reg) {
    std::vector<TrialRecord> out;
    std::int64_t clock = 0;
    for (const auto& s : summary) {
        const std::string where = "summary for " + s.hand + ": ";
        std::set<int> full(s.fully_solved_tasks.begin(), s.fully_solved_tasks.end());
        const std::set<int> zero(s.zero_tasks.begin(), s.zero_tasks.end());
        for (int id : full) {
            if (!reg.contains(id) || zero.count(id)) throw ValidationError(where + "bad fully-solved task " + std::to_string(id));
        }
        if (static_cast<int>(full.size()) > s.tasks_fully_solved) {
            throw ValidationError(where + "more named fully-solved tasks than the total");
        }
        for (int id = 1; id <= kTaskCount && static_cast<int>(full.size()) < s.tasks_fully_solved; ++id) {
            if (!zero.count(id)) full.insert(id);
        }
        std::vector<int> partial;
        for (int id = 1; id <= kTaskCount; ++id) {
            if (!full.count(id) && !zero.count(id)) partial.push_back(id);
        }
        const int remaining = s.successes - kRepetitions * static_cast<int>(full.size());
        const int capacity = (kRepetitions - 1) * static_cast<int>(partial.size());
        if (remaining < 0 || remaining > capacity) {
            throw ValidationError(where + "totals are inconsistent (" + std::to_string(s.successes) + " successes, " +
                                  std::to_string(full.size()) + " fully solved)");
        }
        std::map<int, int> per_task;
        for (int id : full) per_task[id] = kRepetitions;
        for (int id : zero) per_task[id] = 0;
        if (!partial.empty()) {
            const int base = remaining / static_cast<int>(partial.size());
            const int extra = remaining % static_cast<int>(partial.size());
            for (std::size_t i = 0; i < partial.size(); ++i) per_task[partial[i]] = base + (static_cast<int>(i) < extra ? 1 : 0);
        }
        std::string notes = "synthetic per-task split of reported totals";
        if (s.ambiguous) notes += "; count ambiguous: " + s.note;
        for (const auto& [task, wins] : per_task) {
            for (int rep = 1; rep <= kRepetitions; ++rep) {
                out.push_back({s.hand, task, rep, rep <= wins, notes, clock++});
            }
        }
    }
    return out;
}

}  // namespace dash::evaluation
