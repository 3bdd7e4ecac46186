#pragma once

#include "weakties/corpus.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace weakties::net {

// Directed project-to-project knowledge network for one interaction kind.
// Weight of A->B counts the distinct core developers of A with at least one
// event of the kind on B inside their personal pre-first-commit window.
struct ProjectGraph {
    corpus::InteractionKind kind = corpus::InteractionKind::Commit;
    int window_months = 12;
    std::set<std::string> nodes;
    std::map<std::pair<std::string, std::string>, int> edges; // (src,dst) -> weight

    bool has_node(const std::string& id) const { return nodes.count(id) > 0; }
    std::vector<std::pair<std::string, int>> out_edges(const std::string& src) const;
    // Distinct out-neighbors, sorted.
    std::vector<std::string> out_neighbors(const std::string& src) const;
};

ProjectGraph project_network(const corpus::EventLog& log,
                             const std::vector<corpus::CoreDevAssignment>& cores,
                             corpus::InteractionKind kind, int window_months);

// Weighted out-degree; 0 for isolates, DataError for unknown projects.
double degree_out(const ProjectGraph& graph, const std::string& project);

struct UndirectedGraph {
    std::set<std::string> nodes;
    std::set<std::pair<std::string, std::string>> edges; // first < second

    std::size_t non_isolate_count() const;
};

// Symmetric closure with weights dropped: {A,B} present iff A->B or B->A.
UndirectedGraph undirected_view(const ProjectGraph& graph);
UndirectedGraph undirected_view(const UndirectedGraph& graph); // idempotence helper

struct TriangleCensus {
    std::uint64_t triangles = 0;
    std::uint64_t triads = 0; // paths of length two: sum over nodes of C(deg, 2)
};

TriangleCensus count_triangles_and_triads(const UndirectedGraph& graph);

// T = 3 * triangles / triads; NumericError when the graph has no triads.
double transitivity(const UndirectedGraph& graph);

// CSV rows "src,dst,weight,kind", sorted by (src,dst).
void write_graph_csv(const ProjectGraph& graph, std::ostream& out);
ProjectGraph read_graph_csv(std::istream& in);

} // namespace weakties::net
