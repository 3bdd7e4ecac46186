#pragma once

#include "weakties/corpus.hpp"
#include "weakties/embed.hpp"
#include "weakties/graph.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace weakties::metrics {

struct DiversityScore {
    double value = 0.0;        // in [-1, 1]
    std::size_t neighbor_count = 0;
};

// Knowledge diversity of a project's out-neighborhood P (distinct neighbors,
// weights ignored): average over ordered pairs i != j in P of -cos(v_i, v_j).
// nullopt when |P| < 2; DataError listing ids when a neighbor has no vector.
std::optional<DiversityScore> knowledge_diversity(const net::ProjectGraph& graph,
                                                  const embed::EmbeddingMatrix& emb,
                                                  const std::map<std::string, std::size_t>& emb_index,
                                                  const std::string& project);
std::optional<DiversityScore> knowledge_diversity(const net::ProjectGraph& graph,
                                                  const embed::EmbeddingMatrix& emb,
                                                  const std::string& project);

// Mean over unordered distinct package pairs of -cos(v_p, v_q). Packages
// absent from the vocabulary are dropped (count reported via dropped);
// nullopt when fewer than two usable packages remain.
std::optional<double> innovativeness(const std::vector<std::string>& packages,
                                     const embed::EmbeddingMatrix& pkg_emb,
                                     const std::map<std::string, std::size_t>& emb_index,
                                     std::size_t* dropped = nullptr);

struct ProjectFeatureRow {
    std::string project_id;
    double deg_commit = 0, deg_issue = 0, deg_star = 0;
    std::optional<double> div_commit, div_issue, div_star;
    std::optional<double> innov;
    int org_owned = 0;
    double owner_stars = 0;
    int n_core_devs = 0;
    int n_packages = 0;
    int year_creation = 0;
};

struct FeatureTable {
    std::vector<ProjectFeatureRow> rows; // one per sample project, id order
};

struct FeatureInputs {
    const net::ProjectGraph* commit_graph = nullptr;
    const net::ProjectGraph* issue_graph = nullptr;
    const net::ProjectGraph* star_graph = nullptr;
    const embed::EmbeddingMatrix* commit_emb = nullptr;
    const embed::EmbeddingMatrix* issue_emb = nullptr;
    const embed::EmbeddingMatrix* star_emb = nullptr;
    const embed::EmbeddingMatrix* package_emb = nullptr;
    const std::vector<corpus::ImportSequence>* imports = nullptr;
    const std::map<std::string, std::vector<corpus::CoreDevAssignment>>* cores = nullptr;
};

// One row per selected project. Degrees default to 0 for network isolates,
// diversity/innovativeness stay missing when undefined; never imputed.
FeatureTable build_feature_table(const corpus::ProjectCatalog& sample, const FeatureInputs& in);

// features.csv with missing values serialized as empty fields.
void write_features_csv(const FeatureTable& table, std::ostream& out);
FeatureTable read_features_csv(std::istream& in);
void write_features_csv_file(const FeatureTable& table, const std::string& path);
FeatureTable read_features_csv_file(const std::string& path);

} // namespace weakties::metrics
