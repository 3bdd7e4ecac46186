#include "weakties/graph.hpp"

#include "weakties/errors.hpp"
#include "weakties/timeutil.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace weakties::net {

std::vector<std::pair<std::string, int>> ProjectGraph::out_edges(const std::string& src) const {
    std::vector<std::pair<std::string, int>> out;
    auto it = edges.lower_bound({src, std::string()});
    for (; it != edges.end() && it->first.first == src; ++it)
        out.emplace_back(it->first.second, it->second);
    return out;
}

std::vector<std::string> ProjectGraph::out_neighbors(const std::string& src) const {
    std::vector<std::string> out;
    for (auto& [dst, w] : out_edges(src)) {
        (void)w;
        out.push_back(dst);
    }
    return out;
}

ProjectGraph project_network(const corpus::EventLog& log,
                             const std::vector<corpus::CoreDevAssignment>& cores,
                             corpus::InteractionKind kind, int window_months) {
    if (window_months <= 0)
        throw ConfigError("window_months must be positive");

    ProjectGraph g;
    g.kind = kind;
    g.window_months = window_months;

    // (developer, focal project) -> window [start, first_commit)
    std::map<std::pair<std::string, std::string>, std::pair<std::int64_t, std::int64_t>> windows;
    for (auto& c : cores) {
        g.nodes.insert(c.project_id);
        std::int64_t end = c.first_commit_ts;
        windows[{c.developer_id, c.project_id}] = {time::minus_months(end, window_months), end};
    }

    // (src, dst) -> contributing developers; weight is the count of distinct ones.
    std::map<std::pair<std::string, std::string>, std::set<std::string>> contributors;
    for (auto& ev : log.events) {
        if (ev.kind != kind)
            continue;
        auto it = windows.lower_bound({ev.actor_id, std::string()});
        for (; it != windows.end() && it->first.first == ev.actor_id; ++it) {
            const std::string& focal = it->first.second;
            if (ev.project_id == focal)
                continue; // self-loops carry no external knowledge
            auto [start, end] = it->second;
            if (ev.timestamp >= start && ev.timestamp < end)
                contributors[{focal, ev.project_id}].insert(ev.actor_id);
        }
    }

    for (auto& [key, devs] : contributors) {
        g.nodes.insert(key.second);
        g.edges[key] = static_cast<int>(devs.size());
    }
    return g;
}

double degree_out(const ProjectGraph& graph, const std::string& project) {
    if (!graph.has_node(project))
        throw DataError("degree_out: unknown project '" + project + "'");
    double sum = 0;
    for (auto& [dst, w] : graph.out_edges(project)) {
        (void)dst;
        sum += w;
    }
    return sum;
}

std::size_t UndirectedGraph::non_isolate_count() const {
    std::set<std::string> touched;
    for (auto& [a, b] : edges) {
        touched.insert(a);
        touched.insert(b);
    }
    return touched.size();
}

UndirectedGraph undirected_view(const ProjectGraph& graph) {
    UndirectedGraph u;
    u.nodes = graph.nodes;
    for (auto& [key, w] : graph.edges) {
        (void)w;
        auto [a, b] = key;
        if (a == b)
            continue;
        u.edges.insert({std::min(a, b), std::max(a, b)});
    }
    return u;
}

UndirectedGraph undirected_view(const UndirectedGraph& graph) { return graph; }

TriangleCensus count_triangles_and_triads(const UndirectedGraph& graph) {
    std::map<std::string, std::set<std::string>> adj;
    for (auto& [a, b] : graph.edges) {
        adj[a].insert(b);
        adj[b].insert(a);
    }

    TriangleCensus c;
    for (auto& [node, nbrs] : adj) {
        (void)node;
        std::uint64_t d = nbrs.size();
        c.triads += d * (d - 1) / 2;
    }
    // Each triangle {a,b,c} with a<b<c is found exactly once: from edge (a,b)
    // scanning common neighbors greater than b.
    for (auto& [a, b] : graph.edges) {
        const auto& na = adj[a];
        const auto& nb = adj[b];
        const auto& small = na.size() <= nb.size() ? na : nb;
        const auto& large = na.size() <= nb.size() ? nb : na;
        for (auto it = small.upper_bound(b); it != small.end(); ++it)
            if (large.count(*it))
                ++c.triangles;
    }
    return c;
}

double transitivity(const UndirectedGraph& graph) {
    TriangleCensus c = count_triangles_and_triads(graph);
    if (c.triads == 0)
        throw NumericError("transitivity undefined: graph has no connected triads");
    return 3.0 * static_cast<double>(c.triangles) / static_cast<double>(c.triads);
}

void write_graph_csv(const ProjectGraph& graph, std::ostream& out) {
    out << "src,dst,weight,kind\n";
    const std::string kind = corpus::to_string(graph.kind);
    for (auto& [key, w] : graph.edges)
        out << key.first << ',' << key.second << ',' << w << ',' << kind << '\n';
}

ProjectGraph read_graph_csv(std::istream& in) {
    ProjectGraph g;
    std::string line;
    if (!std::getline(in, line))
        throw DataError("graph csv: empty input");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != "src,dst,weight,kind")
        throw DataError("graph csv: unexpected header '" + line + "'");

    std::size_t lineno = 1;
    bool have_kind = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string src, dst, weight, kind;
        if (!std::getline(ss, src, ',') || !std::getline(ss, dst, ',') ||
            !std::getline(ss, weight, ',') || !std::getline(ss, kind))
            throw DataError("graph csv: malformed row at line " + std::to_string(lineno));
        int w = 0;
        try {
            std::size_t pos = 0;
            w = std::stoi(weight, &pos);
            if (pos != weight.size())
                throw std::invalid_argument(weight);
        } catch (const std::exception&) {
            throw DataError("graph csv: bad weight at line " + std::to_string(lineno));
        }
        auto k = corpus::kind_from_string(kind);
        if (!k)
            throw DataError("graph csv: unknown kind at line " + std::to_string(lineno));
        if (!have_kind) {
            g.kind = *k;
            have_kind = true;
        } else if (*k != g.kind) {
            throw DataError("graph csv: mixed kinds at line " + std::to_string(lineno));
        }
        g.nodes.insert(src);
        g.nodes.insert(dst);
        g.edges[{src, dst}] = w;
    }
    return g;
}

} // namespace weakties::net
