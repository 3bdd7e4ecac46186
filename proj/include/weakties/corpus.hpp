#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace weakties::corpus {

enum class InteractionKind { Commit, Issue, Star };

constexpr std::size_t kInteractionKindCount = 3;

const char* to_string(InteractionKind kind);
std::optional<InteractionKind> kind_from_string(std::string_view s);

struct InteractionEvent {
    std::string actor_id;
    std::string project_id;
    InteractionKind kind;
    std::int64_t timestamp;
};

struct EventLog {
    std::vector<InteractionEvent> events;
    std::size_t rejected_lines = 0;
};

// events.jsonl: one {"actor","project","kind","ts"} object per line.
// Malformed lines are counted and skipped; an unreadable source is fatal.
EventLog load_events(std::istream& in);
EventLog load_events_file(const std::string& path);
void write_events(const EventLog& log, std::ostream& out);

enum class OwnerKind { Individual, Organization };

struct ProjectRecord {
    std::string project_id;
    std::int64_t created_at = 0;
    bool is_fork = false;
    std::int64_t n_python_files = 0;
    std::int64_t total_commits = 0;
    OwnerKind owner_kind = OwnerKind::Individual;
    std::int64_t owner_stars_at_creation = 0;
};

using ProjectCatalog = std::vector<ProjectRecord>;

ProjectCatalog load_projects_csv(std::istream& in);
ProjectCatalog load_projects_csv_file(const std::string& path);
void write_projects_csv(const ProjectCatalog& catalog, std::ostream& out);

struct BotRules {
    // A pattern is either a suffix ("-bot") or a bracketed token ("[bot]");
    // plain substrings are deliberately not supported ("abbott" stays).
    std::vector<std::string> patterns;
    std::unordered_set<std::string> denylist;

    static BotRules defaults();
};

bool matches_bot_rules(std::string_view actor, const BotRules& rules);

struct BotReport {
    std::map<std::string, std::size_t> removed; // actor -> removed event count
};

std::pair<EventLog, BotReport> filter_bots(const EventLog& log, const BotRules& rules);

// bots.txt: one actor id per line; '#' lines are comments.
std::unordered_set<std::string> load_denylist_file(const std::string& path);

// Review artifact standing in for manual inspection of the most active
// accounts: top k actors by commit count, ties by actor id.
std::vector<std::pair<std::string, std::size_t>> top_actors_by_commits(const EventLog& log,
                                                                       std::size_t k);

struct SelectionRules {
    bool exclude_forks = true;
    std::int64_t min_total_commits = 10;       // inclusive
    std::int64_t min_python_files = 10;        // exclusive: need > 10
    std::int64_t created_from = 0;             // inclusive instant
    std::int64_t created_until = 0;            // inclusive instant

    static SelectionRules defaults(); // not-fork, >=10 commits, >10 py files, 2008..2022
};

struct SelectionReport {
    std::size_t excluded_fork = 0;
    std::size_t excluded_commits = 0;
    std::size_t excluded_python_files = 0;
    std::size_t excluded_created_at = 0;
    std::size_t included = 0;
};

struct ProjectSet {
    ProjectCatalog selected;
    SelectionReport report;
};

ProjectSet select_projects(const ProjectCatalog& catalog, const SelectionRules& rules);

enum class CoreRule { Pct5Min10, Cum80 };

const char* to_string(CoreRule rule);
std::optional<CoreRule> core_rule_from_string(std::string_view s);

struct CoreDevAssignment {
    std::string project_id;
    std::string developer_id;
    std::int64_t first_commit_ts = 0;
    std::int64_t commit_count = 0;
    double commit_share = 0.0;
};

// Pct5Min10: share >= 5% and count >= 10. Cum80: shortest prefix by commit
// count (ties by developer id ascending) whose cumulative share reaches 80%.
// Output sorted by developer id. Throws DataError when the project has no
// commit history.
std::vector<CoreDevAssignment> identify_core_developers(const EventLog& log,
                                                        const std::string& project,
                                                        CoreRule rule);

// One pass over the log for many projects; projects without commits are
// absent from the result.
std::map<std::string, std::vector<CoreDevAssignment>> identify_all_cores(
    const EventLog& log, const std::vector<std::string>& projects, CoreRule rule);

void write_cores_csv(const std::map<std::string, std::vector<CoreDevAssignment>>& cores,
                     std::ostream& out);
std::map<std::string, std::vector<CoreDevAssignment>> read_cores_csv(std::istream& in);

struct ImportSequence {
    std::string project_id;
    std::vector<std::string> packages; // de-duplicated, first-seen order
    std::int64_t cutoff_ts = 0;
};

// imports.jsonl: {"project", "packages": [...]} per line. Duplicate packages
// collapse to first occurrence. The cutoff is carried as metadata; the data
// producer is responsible for exporting only imports before it.
std::vector<ImportSequence> load_imports_jsonl(std::istream& in, std::int64_t cutoff_ts);
std::vector<ImportSequence> load_imports_jsonl_file(const std::string& path,
                                                    std::int64_t cutoff_ts);
void write_imports_jsonl(const std::vector<ImportSequence>& imports, std::ostream& out);

} // namespace weakties::corpus
