#include "weakties/metrics.hpp"

#include "weakties/errors.hpp"
#include "weakties/timeutil.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace weakties::metrics {

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i)
            out += ", ";
        out += ids[i];
    }
    return out;
}

// Mean of -cos over all unordered pairs of the given embedding rows.
double mean_negated_cosine(const embed::EmbeddingMatrix& emb, const std::vector<std::size_t>& rows) {
    double sum = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            sum += -embed::cosine_similarity(emb.row(rows[i]), emb.row(rows[j]), emb.d);
            ++pairs;
        }
    return sum / static_cast<double>(pairs);
}

} // namespace

std::optional<DiversityScore> knowledge_diversity(const net::ProjectGraph& graph,
                                                  const embed::EmbeddingMatrix& emb,
                                                  const std::map<std::string, std::size_t>& emb_index,
                                                  const std::string& project) {
    std::vector<std::string> neighbors = graph.out_neighbors(project);
    if (neighbors.size() < 2)
        return std::nullopt;

    std::vector<std::size_t> rows;
    std::vector<std::string> missing;
    for (auto& n : neighbors) {
        auto it = emb_index.find(n);
        if (it == emb_index.end())
            missing.push_back(n);
        else
            rows.push_back(it->second);
    }
    if (!missing.empty())
        throw DataError("knowledge_diversity(" + project + "): neighbors missing from embedding: " +
                        join_ids(missing));

    // The ordered-pair average in the definition equals the unordered-pair
    // average by symmetry of cosine.
    DiversityScore s;
    s.neighbor_count = rows.size();
    s.value = mean_negated_cosine(emb, rows);
    return s;
}

std::optional<DiversityScore> knowledge_diversity(const net::ProjectGraph& graph,
                                                  const embed::EmbeddingMatrix& emb,
                                                  const std::string& project) {
    return knowledge_diversity(graph, emb, emb.make_index(), project);
}

std::optional<double> innovativeness(const std::vector<std::string>& packages,
                                     const embed::EmbeddingMatrix& pkg_emb,
                                     const std::map<std::string, std::size_t>& emb_index,
                                     std::size_t* dropped) {
    std::vector<std::size_t> rows;
    std::size_t miss = 0;
    for (auto& p : packages) {
        auto it = emb_index.find(p);
        if (it == emb_index.end())
            ++miss;
        else
            rows.push_back(it->second);
    }
    if (dropped)
        *dropped = miss;
    if (rows.size() < 2)
        return std::nullopt;
    return mean_negated_cosine(pkg_emb, rows);
}

FeatureTable build_feature_table(const corpus::ProjectCatalog& sample, const FeatureInputs& in) {
    if (!in.commit_graph || !in.issue_graph || !in.star_graph || !in.commit_emb || !in.issue_emb ||
        !in.star_emb || !in.package_emb || !in.imports || !in.cores)
        throw ConfigError("build_feature_table: all inputs must be provided");

    auto commit_idx = in.commit_emb->make_index();
    auto issue_idx = in.issue_emb->make_index();
    auto star_idx = in.star_emb->make_index();
    auto pkg_idx = in.package_emb->make_index();

    std::map<std::string, const corpus::ImportSequence*> imports_by_project;
    for (auto& seq : *in.imports)
        imports_by_project[seq.project_id] = &seq;

    auto degree_or_zero = [](const net::ProjectGraph& g, const std::string& id) {
        return g.has_node(id) ? net::degree_out(g, id) : 0.0;
    };
    auto div_or_missing = [](const net::ProjectGraph& g, const embed::EmbeddingMatrix& emb,
                             const std::map<std::string, std::size_t>& idx,
                             const std::string& id) -> std::optional<double> {
        if (!g.has_node(id))
            return std::nullopt;
        auto s = knowledge_diversity(g, emb, idx, id);
        if (!s)
            return std::nullopt;
        return s->value;
    };

    FeatureTable table;
    table.rows.reserve(sample.size());
    for (auto& rec : sample) {
        ProjectFeatureRow row;
        row.project_id = rec.project_id;
        row.deg_commit = degree_or_zero(*in.commit_graph, rec.project_id);
        row.deg_issue = degree_or_zero(*in.issue_graph, rec.project_id);
        row.deg_star = degree_or_zero(*in.star_graph, rec.project_id);
        row.div_commit = div_or_missing(*in.commit_graph, *in.commit_emb, commit_idx, rec.project_id);
        row.div_issue = div_or_missing(*in.issue_graph, *in.issue_emb, issue_idx, rec.project_id);
        row.div_star = div_or_missing(*in.star_graph, *in.star_emb, star_idx, rec.project_id);

        auto imp = imports_by_project.find(rec.project_id);
        if (imp != imports_by_project.end()) {
            row.n_packages = static_cast<int>(imp->second->packages.size());
            row.innov = innovativeness(imp->second->packages, *in.package_emb, pkg_idx);
        }

        row.org_owned = rec.owner_kind == corpus::OwnerKind::Organization ? 1 : 0;
        row.owner_stars = static_cast<double>(rec.owner_stars_at_creation);
        auto cit = in.cores->find(rec.project_id);
        row.n_core_devs = cit == in.cores->end() ? 0 : static_cast<int>(cit->second.size());
        row.year_creation = time::year_of(rec.created_at);
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

constexpr const char* kFeaturesHeader =
    "project,deg_commit,deg_issue,deg_star,div_commit,div_issue,div_star,innov,"
    "org_owned,owner_stars,n_core_devs,n_packages,year_creation";

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_optional(const std::optional<double>& v) {
    return v ? fmt_double(*v) : std::string();
}

double parse_double(const std::string& s, std::size_t lineno) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("features csv: bad number '" + s + "' at line " + std::to_string(lineno));
    }
}

std::optional<double> parse_optional(const std::string& s, std::size_t lineno) {
    if (s.empty())
        return std::nullopt;
    return parse_double(s, lineno);
}

} // namespace

void write_features_csv(const FeatureTable& table, std::ostream& out) {
    out << kFeaturesHeader << '\n';
    for (auto& r : table.rows) {
        out << r.project_id << ',' << fmt_double(r.deg_commit) << ',' << fmt_double(r.deg_issue)
            << ',' << fmt_double(r.deg_star) << ',' << fmt_optional(r.div_commit) << ','
            << fmt_optional(r.div_issue) << ',' << fmt_optional(r.div_star) << ','
            << fmt_optional(r.innov) << ',' << r.org_owned << ',' << fmt_double(r.owner_stars)
            << ',' << r.n_core_devs << ',' << r.n_packages << ',' << r.year_creation << '\n';
    }
}

FeatureTable read_features_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw DataError("features csv: empty input");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != kFeaturesHeader)
        throw DataError("features csv: unexpected header");

    FeatureTable table;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::string field;
        std::istringstream ss(line);
        while (std::getline(ss, field, ','))
            f.push_back(field);
        if (!line.empty() && line.back() == ',')
            f.push_back(""); // trailing empty field
        if (f.size() != 13)
            throw DataError("features csv: expected 13 fields at line " + std::to_string(lineno));

        ProjectFeatureRow r;
        r.project_id = f[0];
        r.deg_commit = parse_double(f[1], lineno);
        r.deg_issue = parse_double(f[2], lineno);
        r.deg_star = parse_double(f[3], lineno);
        r.div_commit = parse_optional(f[4], lineno);
        r.div_issue = parse_optional(f[5], lineno);
        r.div_star = parse_optional(f[6], lineno);
        r.innov = parse_optional(f[7], lineno);
        r.org_owned = static_cast<int>(parse_double(f[8], lineno));
        r.owner_stars = parse_double(f[9], lineno);
        r.n_core_devs = static_cast<int>(parse_double(f[10], lineno));
        r.n_packages = static_cast<int>(parse_double(f[11], lineno));
        r.year_creation = static_cast<int>(parse_double(f[12], lineno));
        table.rows.push_back(std::move(r));
    }
    return table;
}

void write_features_csv_file(const FeatureTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open for writing: " + path);
    write_features_csv(table, out);
}

FeatureTable read_features_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open: " + path);
    return read_features_csv(in);
}

} // namespace weakties::metrics
