#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dash/errors.hpp"

namespace dash::evaluation {

enum class Category { Hold, Pick, Lever, Twist, Open, PutInOn };

inline constexpr std::array<Category, 6> kCategories = {Category::Hold,  Category::Pick, Category::Lever,
                                                        Category::Twist, Category::Open, Category::PutInOn};
inline constexpr int kTaskCount = 30;
inline constexpr int kRepetitions = 5;
inline constexpr int kTrialsPerHand = kTaskCount * kRepetitions;

std::string_view to_string(Category c);
Category parse_category(std::string_view s);

struct TaskSpec {
    int id = 0;
    std::string name;
    Category category = Category::Hold;
    bool compliance_flagged = false;
};

/// The 30-task manipulation suite, indexed by id 1..30.
class TaskRegistry {
public:
    explicit TaskRegistry(std::vector<TaskSpec> tasks);

    static const TaskRegistry& builtin();

    const std::vector<TaskSpec>& tasks() const { return tasks_; }
    const TaskSpec& task(int id) const;
    bool contains(int id) const { return id >= 1 && id <= static_cast<int>(tasks_.size()); }
    int category_size(Category c) const;

private:
    std::vector<TaskSpec> tasks_;
};

TaskRegistry parse_task_registry(const nlohmann::json& doc);
TaskRegistry load_task_registry(const std::string& path);
nlohmann::json task_registry_to_json(const TaskRegistry& reg);

struct TrialRecord {
    std::string hand;
    int task_id = 0;
    int rep = 0;
    bool success = false;
    std::string notes;
    std::int64_t timestamp_ms = 0;

    bool operator==(const TrialRecord&) const = default;
};

/// Validates one trial-log object. Throws ValidationError without location.
TrialRecord parse_trial(const nlohmann::json& j, const TaskRegistry& reg = TaskRegistry::builtin());
nlohmann::json trial_to_json(const TrialRecord& t);

/// JSON-lines trial log. Errors carry "<origin>:<line>".
std::vector<TrialRecord> parse_trials(std::istream& in, const std::string& origin = "<stream>",
                                      const TaskRegistry& reg = TaskRegistry::builtin());
std::vector<TrialRecord> load_trials(const std::string& path, const TaskRegistry& reg = TaskRegistry::builtin());

struct HandResult {
    std::string hand;
    int successes = 0;
    int attempts = 0;      // denominator used for `rate`
    int recorded = 0;      // trials actually present
    int missing = 0;       // repetitions absent from the log
    double rate = 0.0;     // exact percentage
    int rate_percent = 0;  // rounded half away from zero
    int tasks_fully_solved = 0;
    std::array<int, 6> category_successes{};
    std::array<int, 6> category_attempts{};

    double category_fraction(Category c) const;
};

struct ResultsTable {
    std::vector<HandResult> hands;  // known hands first in canonical order
    bool strict = false;
    std::vector<std::string> warnings;

    const HandResult* find(std::string_view hand) const;
};

int round_percent(double value);

/// Per-hand totals. In strict mode every hand is scored out of 150 and missing
/// repetitions count as failures; otherwise they leave the denominators and a
/// warning is recorded.
ResultsTable aggregate(const std::vector<TrialRecord>& trials, bool strict = false,
                       const TaskRegistry& reg = TaskRegistry::builtin());

/// successes / (5 x tasks in category) for every (hand, category).
std::map<std::string, std::array<double, 6>> category_breakdown(const std::vector<TrialRecord>& trials,
                                                                const TaskRegistry& reg = TaskRegistry::builtin());

void write_report_csv(std::ostream& out, const ResultsTable& table);
void write_report_text(std::ostream& out, const ResultsTable& table);
nlohmann::json report_to_json(const ResultsTable& table);
/// format is "csv" or "text"; throws IoError when the path cannot be written.
void export_report(const ResultsTable& table, const std::string& format, const std::string& path);

class DuplicateTrialError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Append-only trial store shared between sessions. Writes are serialised and
/// optionally mirrored to a JSON-lines file.
class TrialStore {
public:
    explicit TrialStore(std::optional<std::string> path = std::nullopt,
                        const TaskRegistry& reg = TaskRegistry::builtin());

    /// Throws DuplicateTrialError for an existing (hand, task, rep).
    void append(const TrialRecord& t);
    std::vector<TrialRecord> snapshot() const;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::optional<std::string> path_;
    const TaskRegistry* reg_;
    std::vector<TrialRecord> trials_;
};

// ---- reported per-hand totals ------------------------------------------------

struct HandSummary {
    std::string hand;
    int successes = 0;
    int tasks_fully_solved = 0;
    std::vector<int> fully_solved_tasks;  // named in the source where available
    std::vector<int> zero_tasks;          // tasks with 0/5
    bool ambiguous = false;
    std::string note;
};

std::vector<HandSummary> parse_reported_summary(const nlohmann::json& doc);

/// Deterministically expands per-hand totals into a synthetic per-task trial log
/// whose aggregate reproduces every total. Per-task detail is synthetic.
std::vector<TrialRecord> expand_summary(const std::vector<HandSummary>& summary,
                                        const TaskRegistry& reg = TaskRegistry::builtin());

}  // namespace dash::evaluation
