#include "weakties/corpus.hpp"

#include "weakties/errors.hpp"
#include "weakties/timeutil.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace weakties::corpus {

using nlohmann::json;

const char* to_string(InteractionKind kind) {
    switch (kind) {
    case InteractionKind::Commit: return "commit";
    case InteractionKind::Issue: return "issue";
    case InteractionKind::Star: return "star";
    }
    return "?";
}

std::optional<InteractionKind> kind_from_string(std::string_view s) {
    if (s == "commit") return InteractionKind::Commit;
    if (s == "issue") return InteractionKind::Issue;
    if (s == "star") return InteractionKind::Star;
    return std::nullopt;
}

const char* to_string(CoreRule rule) {
    return rule == CoreRule::Pct5Min10 ? "pct5min10" : "cum80";
}

std::optional<CoreRule> core_rule_from_string(std::string_view s) {
    if (s == "pct5min10") return CoreRule::Pct5Min10;
    if (s == "cum80") return CoreRule::Cum80;
    return std::nullopt;
}

EventLog load_events(std::istream& in) {
    if (!in) throw DataError("events: unreadable source");
    EventLog log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            ++log.rejected_lines;
            continue;
        }
        if (!j.contains("actor") || !j.contains("project") || !j.contains("kind") ||
            !j.contains("ts") || !j["actor"].is_string() || !j["project"].is_string() ||
            !j["kind"].is_string() || !j["ts"].is_string()) {
            ++log.rejected_lines;
            continue;
        }
        const auto kind = kind_from_string(j["kind"].get<std::string>());
        std::int64_t ts;
        if (!kind || !time::try_parse_rfc3339_utc(j["ts"].get<std::string>(), ts)) {
            ++log.rejected_lines;
            continue;
        }
        std::string actor = j["actor"].get<std::string>();
        std::string project = j["project"].get<std::string>();
        if (actor.empty() || project.empty()) {
            ++log.rejected_lines;
            continue;
        }
        log.events.push_back({std::move(actor), std::move(project), *kind, ts});
    }
    return log;
}

EventLog load_events_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("events: cannot open '" + path + "'");
    return load_events(in);
}

void write_events(const EventLog& log, std::ostream& out) {
    for (const auto& e : log.events) {
        json j;
        j["actor"] = e.actor_id;
        j["project"] = e.project_id;
        j["kind"] = to_string(e.kind);
        j["ts"] = time::format_rfc3339_utc(e.timestamp);
        out << j.dump() << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::int64_t parse_count(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size() || v < 0) throw DataError("");
        return v;
    } catch (...) {
        throw DataError(std::string("projects.csv: bad ") + what + " value '" + s + "'");
    }
}

bool parse_bool(const std::string& s, const char* what) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw DataError(std::string("projects.csv: bad ") + what + " value '" + s + "'");
}

} // namespace

ProjectCatalog load_projects_csv(std::istream& in) {
    if (!in) throw DataError("projects.csv: unreadable source");
    static const std::string kHeader =
        "project,created_at,is_fork,n_python_files,total_commits,owner_kind,"
        "owner_stars_at_creation";
    std::string line;
    if (!std::getline(in, line)) throw DataError("projects.csv: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) throw DataError("projects.csv: unexpected header '" + line + "'");
    ProjectCatalog catalog;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 7) throw DataError("projects.csv: expected 7 fields, got line '" + line + "'");
        ProjectRecord r;
        r.project_id = f[0];
        if (r.project_id.empty()) throw DataError("projects.csv: empty project id");
        r.created_at = time::parse_rfc3339_utc(f[1]);
        r.is_fork = parse_bool(f[2], "is_fork");
        r.n_python_files = parse_count(f[3], "n_python_files");
        r.total_commits = parse_count(f[4], "total_commits");
        if (f[5] == "organization") {
            r.owner_kind = OwnerKind::Organization;
        } else if (f[5] == "individual") {
            r.owner_kind = OwnerKind::Individual;
        } else {
            throw DataError("projects.csv: bad owner_kind '" + f[5] + "'");
        }
        r.owner_stars_at_creation = parse_count(f[6], "owner_stars_at_creation");
        catalog.push_back(std::move(r));
    }
    return catalog;
}

ProjectCatalog load_projects_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("projects.csv: cannot open '" + path + "'");
    return load_projects_csv(in);
}

void write_projects_csv(const ProjectCatalog& catalog, std::ostream& out) {
    out << "project,created_at,is_fork,n_python_files,total_commits,owner_kind,"
           "owner_stars_at_creation\n";
    for (const auto& r : catalog) {
        out << r.project_id << ',' << time::format_rfc3339_utc(r.created_at) << ','
            << (r.is_fork ? "true" : "false") << ',' << r.n_python_files << ','
            << r.total_commits << ','
            << (r.owner_kind == OwnerKind::Organization ? "organization" : "individual") << ','
            << r.owner_stars_at_creation << '\n';
    }
}

BotRules BotRules::defaults() {
    BotRules rules;
    rules.patterns = {"-bot", "-robot", "[bot]"};
    return rules;
}

bool matches_bot_rules(std::string_view actor, const BotRules& rules) {
    if (rules.denylist.count(std::string(actor)) > 0) return true;
    for (const auto& pat : rules.patterns) {
        if (pat.empty() || pat.size() > actor.size()) continue;
        if (pat.front() == '[' && pat.back() == ']') {
            if (actor.find(pat) != std::string_view::npos) return true;
        } else {
            if (actor.substr(actor.size() - pat.size()) == pat) return true;
        }
    }
    return false;
}

std::pair<EventLog, BotReport> filter_bots(const EventLog& log, const BotRules& rules) {
    EventLog kept;
    kept.rejected_lines = log.rejected_lines;
    BotReport report;
    std::unordered_map<std::string, bool> cache;
    for (const auto& e : log.events) {
        auto it = cache.find(e.actor_id);
        if (it == cache.end())
            it = cache.emplace(e.actor_id, matches_bot_rules(e.actor_id, rules)).first;
        if (it->second) {
            ++report.removed[e.actor_id];
        } else {
            kept.events.push_back(e);
        }
    }
    return {std::move(kept), std::move(report)};
}

std::unordered_set<std::string> load_denylist_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("bots: cannot open '" + path + "'");
    std::unordered_set<std::string> denylist;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        denylist.insert(line);
    }
    return denylist;
}

std::vector<std::pair<std::string, std::size_t>> top_actors_by_commits(const EventLog& log,
                                                                       std::size_t k) {
    std::map<std::string, std::size_t> counts;
    for (const auto& e : log.events)
        if (e.kind == InteractionKind::Commit) ++counts[e.actor_id];
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

SelectionRules SelectionRules::defaults() {
    SelectionRules rules;
    rules.created_from = time::parse_rfc3339_utc("2008-01-01T00:00:00Z");
    rules.created_until = time::parse_rfc3339_utc("2022-12-31T23:59:59Z");
    return rules;
}

ProjectSet select_projects(const ProjectCatalog& catalog, const SelectionRules& rules) {
    ProjectSet out;
    for (const auto& r : catalog) {
        if (rules.exclude_forks && r.is_fork) {
            ++out.report.excluded_fork;
        } else if (r.total_commits < rules.min_total_commits) {
            ++out.report.excluded_commits;
        } else if (r.n_python_files <= rules.min_python_files) {
            ++out.report.excluded_python_files;
        } else if (r.created_at < rules.created_from || r.created_at > rules.created_until) {
            ++out.report.excluded_created_at;
        } else {
            ++out.report.included;
            out.selected.push_back(r);
        }
    }
    return out;
}

namespace {

struct DevCommits {
    std::int64_t count = 0;
    std::int64_t first_ts = 0;
};

std::vector<CoreDevAssignment> apply_core_rule(const std::string& project,
                                               const std::map<std::string, DevCommits>& devs,
                                               CoreRule rule) {
    std::int64_t total = 0;
    for (const auto& [dev, dc] : devs) total += dc.count;

    std::vector<CoreDevAssignment> cores;
    if (rule == CoreRule::Pct5Min10) {
        for (const auto& [dev, dc] : devs) {
            const double share = static_cast<double>(dc.count) / static_cast<double>(total);
            if (share >= 0.05 && dc.count >= 10)
                cores.push_back({project, dev, dc.first_ts, dc.count, share});
        }
    } else {
        std::vector<std::pair<std::string, DevCommits>> ranked(devs.begin(), devs.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second.count != b.second.count) return a.second.count > b.second.count;
            return a.first < b.first;
        });
        std::int64_t cum = 0;
        for (const auto& [dev, dc] : ranked) {
            cores.push_back({project, dev, dc.first_ts, dc.count,
                             static_cast<double>(dc.count) / static_cast<double>(total)});
            cum += dc.count;
            if (static_cast<double>(cum) / static_cast<double>(total) >= 0.80) break;
        }
        std::sort(cores.begin(), cores.end(),
                  [](const auto& a, const auto& b) { return a.developer_id < b.developer_id; });
    }
    return cores;
}

} // namespace

std::vector<CoreDevAssignment> identify_core_developers(const EventLog& log,
                                                        const std::string& project,
                                                        CoreRule rule) {
    std::map<std::string, DevCommits> devs;
    for (const auto& e : log.events) {
        if (e.kind != InteractionKind::Commit || e.project_id != project) continue;
        auto& dc = devs[e.actor_id];
        if (dc.count == 0 || e.timestamp < dc.first_ts) dc.first_ts = e.timestamp;
        ++dc.count;
    }
    if (devs.empty()) throw DataError("no commit history for project '" + project + "'");
    return apply_core_rule(project, devs, rule);
}

std::map<std::string, std::vector<CoreDevAssignment>> identify_all_cores(
    const EventLog& log, const std::vector<std::string>& projects, CoreRule rule) {
    std::unordered_set<std::string> wanted(projects.begin(), projects.end());
    std::map<std::string, std::map<std::string, DevCommits>> byproject;
    for (const auto& e : log.events) {
        if (e.kind != InteractionKind::Commit || wanted.count(e.project_id) == 0) continue;
        auto& dc = byproject[e.project_id][e.actor_id];
        if (dc.count == 0 || e.timestamp < dc.first_ts) dc.first_ts = e.timestamp;
        ++dc.count;
    }
    std::map<std::string, std::vector<CoreDevAssignment>> cores;
    for (const auto& [project, devs] : byproject)
        cores[project] = apply_core_rule(project, devs, rule);
    return cores;
}

void write_cores_csv(const std::map<std::string, std::vector<CoreDevAssignment>>& cores,
                     std::ostream& out) {
    out << "project,developer,first_commit_ts,commit_count,commit_share\n";
    char share[32];
    for (const auto& [project, assignments] : cores) {
        for (const auto& a : assignments) {
            std::snprintf(share, sizeof(share), "%.17g", a.commit_share);
            out << project << ',' << a.developer_id << ',' << time::format_rfc3339_utc(a.first_commit_ts)
                << ',' << a.commit_count << ',' << share << '\n';
        }
    }
}

std::map<std::string, std::vector<CoreDevAssignment>> read_cores_csv(std::istream& in) {
    if (!in) throw DataError("cores.csv: unreadable source");
    std::string line;
    if (!std::getline(in, line)) throw DataError("cores.csv: empty file");
    std::map<std::string, std::vector<CoreDevAssignment>> cores;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 5) throw DataError("cores.csv: bad line '" + line + "'");
        CoreDevAssignment a;
        a.project_id = f[0];
        a.developer_id = f[1];
        a.first_commit_ts = time::parse_rfc3339_utc(f[2]);
        a.commit_count = parse_count(f[3], "commit_count");
        a.commit_share = std::stod(f[4]);
        cores[a.project_id].push_back(std::move(a));
    }
    return cores;
}

std::vector<ImportSequence> load_imports_jsonl(std::istream& in, std::int64_t cutoff_ts) {
    if (!in) throw DataError("imports: unreadable source");
    std::vector<ImportSequence> imports;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("project") ||
            !j.contains("packages") || !j["project"].is_string() || !j["packages"].is_array())
            throw DataError("imports: bad record at line " + std::to_string(lineno));
        ImportSequence seq;
        seq.project_id = j["project"].get<std::string>();
        seq.cutoff_ts = cutoff_ts;
        std::unordered_set<std::string> seen;
        for (const auto& p : j["packages"]) {
            if (!p.is_string())
                throw DataError("imports: non-string package at line " + std::to_string(lineno));
            std::string pkg = p.get<std::string>();
            if (seen.insert(pkg).second) seq.packages.push_back(std::move(pkg));
        }
        imports.push_back(std::move(seq));
    }
    return imports;
}

std::vector<ImportSequence> load_imports_jsonl_file(const std::string& path,
                                                    std::int64_t cutoff_ts) {
    std::ifstream in(path);
    if (!in) throw DataError("imports: cannot open '" + path + "'");
    return load_imports_jsonl(in, cutoff_ts);
}

void write_imports_jsonl(const std::vector<ImportSequence>& imports, std::ostream& out) {
    for (const auto& seq : imports) {
        json j;
        j["project"] = seq.project_id;
        j["packages"] = seq.packages;
        out << j.dump() << '\n';
    }
}

} // namespace weakties::corpus
