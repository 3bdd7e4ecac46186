#include "weakties/pipeline.hpp"

#include "weakties/errors.hpp"
#include "weakties/rng.hpp"
#include "weakties/timeutil.hpp"

#include "json.hpp"
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace weakties::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config ---

PipelineConfig PipelineConfig::defaults() {
    PipelineConfig cfg;
    cfg.package_embed.window = 0; // whole-sequence pairing for import lists
    return cfg;
}

void PipelineConfig::validate() const {
    if (window_months != 6 && window_months != 12 && window_months != 24)
        throw ConfigError("window_months must be 6, 12 or 24");
    if (model != "I" && model != "II" && model != "III" && model != "IV")
        throw ConfigError("model must be one of I, II, III, IV");
    if (!cohort_axis.empty() && cohort_axis != "year" && cohort_axis != "team_size" &&
        cohort_axis != "ownership")
        throw ConfigError("cohort_axis must be year, team_size or ownership");
    if (output_dir.empty())
        throw ConfigError("output_dir must not be empty");
    if (walks.walk_length <= 0 || walks.walks_per_node <= 0)
        throw ConfigError("walk parameters must be positive");
    if (node_embed.window < 1)
        throw ConfigError("node_embed.window must be at least 1 (finite window on walks)");
    if (node_embed.min_count != 1)
        throw ConfigError("node_embed.min_count must be 1: every network node needs a vector");
    if (package_embed.window < 0)
        throw ConfigError("package_embed.window must be non-negative");
    if (!cutoff.empty())
        (void)time::parse_rfc3339_utc(cutoff); // throws DataError on bad format
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || it.key() == a;
        if (!ok)
            throw ConfigError(std::string("unknown config key '") + it.key() + "' in " + where);
    }
}

template <class T>
void read_key(const json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end())
        return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

void read_skipgram(const json& j, const char* where, embed::SkipGramConfig& out) {
    check_keys(j, {"d", "window", "negatives", "epochs", "lr_initial", "lr_final", "min_count",
                   "workers"},
               where);
    read_key(j, "d", out.d);
    read_key(j, "window", out.window);
    read_key(j, "negatives", out.negatives);
    read_key(j, "epochs", out.epochs);
    read_key(j, "lr_initial", out.lr_initial);
    read_key(j, "lr_final", out.lr_final);
    read_key(j, "min_count", out.min_count);
    read_key(j, "workers", out.workers);
}

json skipgram_to_json(const embed::SkipGramConfig& c) {
    return {{"d", c.d},
            {"window", c.window},
            {"negatives", c.negatives},
            {"epochs", c.epochs},
            {"lr_initial", c.lr_initial},
            {"lr_final", c.lr_final},
            {"min_count", c.min_count},
            {"workers", c.workers}};
}

} // namespace

PipelineConfig parse_config_json(const std::string& text, const PipelineConfig& base) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ConfigError("config is not a JSON object");

    check_keys(j,
               {"events", "projects", "imports", "bots", "awesome", "output_dir", "window_months",
                "core_rule", "cutoff", "seed", "model", "cohort_axis", "walks", "node_embed",
                "package_embed"},
               "config");

    PipelineConfig cfg = base;
    read_key(j, "events", cfg.events);
    read_key(j, "projects", cfg.projects);
    read_key(j, "imports", cfg.imports);
    read_key(j, "bots", cfg.bots);
    read_key(j, "awesome", cfg.awesome);
    read_key(j, "output_dir", cfg.output_dir);
    read_key(j, "window_months", cfg.window_months);
    read_key(j, "cutoff", cfg.cutoff);
    read_key(j, "seed", cfg.seed);
    read_key(j, "model", cfg.model);
    read_key(j, "cohort_axis", cfg.cohort_axis);

    if (auto it = j.find("core_rule"); it != j.end()) {
        auto rule = corpus::core_rule_from_string(it->get<std::string>());
        if (!rule)
            throw ConfigError("core_rule must be pct5min10 or cum80");
        cfg.core_rule = *rule;
    }
    if (auto it = j.find("walks"); it != j.end()) {
        check_keys(*it, {"walk_length", "walks_per_node"}, "walks");
        read_key(*it, "walk_length", cfg.walks.walk_length);
        read_key(*it, "walks_per_node", cfg.walks.walks_per_node);
    }
    if (auto it = j.find("node_embed"); it != j.end())
        read_skipgram(*it, "node_embed", cfg.node_embed);
    if (auto it = j.find("package_embed"); it != j.end())
        read_skipgram(*it, "package_embed", cfg.package_embed);
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_json(ss.str(), PipelineConfig::defaults());
}

std::string config_to_json(const PipelineConfig& cfg) {
    json j = {{"events", cfg.events},
              {"projects", cfg.projects},
              {"imports", cfg.imports},
              {"bots", cfg.bots},
              {"awesome", cfg.awesome},
              {"output_dir", cfg.output_dir},
              {"window_months", cfg.window_months},
              {"core_rule", corpus::to_string(cfg.core_rule)},
              {"cutoff", cfg.cutoff},
              {"seed", cfg.seed},
              {"model", cfg.model},
              {"cohort_axis", cfg.cohort_axis},
              {"walks",
               {{"walk_length", cfg.walks.walk_length},
                {"walks_per_node", cfg.walks.walks_per_node}}},
              {"node_embed", skipgram_to_json(cfg.node_embed)},
              {"package_embed", skipgram_to_json(cfg.package_embed)}};
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- hashing ---

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
        throw NumericError("sha256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open for hashing: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

// ----------------------------------------------------------------- ingest ---

namespace {

std::vector<std::string> load_id_list(const std::string& path) {
    std::vector<std::string> out;
    if (path.empty())
        return out;
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open: " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        out.push_back(line);
    }
    return out;
}

LoadedCorpus ingest_common(corpus::EventLog events, corpus::ProjectCatalog catalog,
                           std::vector<corpus::ImportSequence> imports,
                           const std::vector<std::string>& bot_denylist,
                           std::vector<std::string> awesome, const PipelineConfig& cfg) {
    LoadedCorpus data;
    data.rejected_lines = events.rejected_lines;

    corpus::BotRules rules = corpus::BotRules::defaults();
    for (auto& b : bot_denylist)
        rules.denylist.insert(b);
    auto [clean, report] = corpus::filter_bots(events, rules);
    data.events = std::move(clean);
    data.bot_report = std::move(report);

    data.catalog = std::move(catalog);
    data.sample = corpus::select_projects(data.catalog, corpus::SelectionRules::defaults());

    std::vector<std::string> ids;
    ids.reserve(data.sample.selected.size());
    for (auto& rec : data.sample.selected)
        ids.push_back(rec.project_id);

    if (!cfg.cutoff.empty()) {
        // The cutoff bounds core-developer identification, mirroring a
        // data-collection end date; interaction windows are already bounded
        // per developer.
        std::int64_t cut = time::parse_rfc3339_utc(cfg.cutoff);
        corpus::EventLog bounded;
        for (auto& e : data.events.events)
            if (e.timestamp < cut)
                bounded.events.push_back(e);
        data.cores = corpus::identify_all_cores(bounded, ids, cfg.core_rule);
        for (auto& seq : imports)
            seq.cutoff_ts = cut;
    } else {
        data.cores = corpus::identify_all_cores(data.events, ids, cfg.core_rule);
    }

    data.imports = std::move(imports);
    data.awesome = std::move(awesome);
    return data;
}

} // namespace

LoadedCorpus ingest(const PipelineConfig& cfg) {
    if (cfg.events.empty() || cfg.projects.empty())
        throw ConfigError("ingest needs events and projects paths");
    corpus::EventLog events = corpus::load_events_file(cfg.events);
    corpus::ProjectCatalog catalog = corpus::load_projects_csv_file(cfg.projects);
    std::vector<corpus::ImportSequence> imports;
    if (!cfg.imports.empty())
        imports = corpus::load_imports_jsonl_file(cfg.imports, 0);
    std::vector<std::string> denylist = load_id_list(cfg.bots);
    std::vector<std::string> awesome = load_id_list(cfg.awesome);
    return ingest_common(std::move(events), std::move(catalog), std::move(imports), denylist,
                         std::move(awesome), cfg);
}

LoadedCorpus ingest_memory(corpus::EventLog events, corpus::ProjectCatalog catalog,
                           std::vector<corpus::ImportSequence> imports,
                           const std::vector<std::string>& bot_denylist,
                           std::vector<std::string> awesome, const PipelineConfig& cfg) {
    return ingest_common(std::move(events), std::move(catalog), std::move(imports), bot_denylist,
                         std::move(awesome), cfg);
}

// --------------------------------------------------------------- networks ---

const net::ProjectGraph& NetworkSet::by_kind(corpus::InteractionKind k) const {
    switch (k) {
    case corpus::InteractionKind::Commit:
        return commit;
    case corpus::InteractionKind::Issue:
        return issue;
    case corpus::InteractionKind::Star:
        return star;
    }
    throw ConfigError("unknown interaction kind");
}

NetworkSet build_networks(const LoadedCorpus& data, int window_months) {
    std::vector<corpus::CoreDevAssignment> flat;
    for (auto& [pid, assignments] : data.cores)
        flat.insert(flat.end(), assignments.begin(), assignments.end());

    auto build = [&](corpus::InteractionKind k) {
        return net::project_network(data.events, flat, k, window_months);
    };
    auto fc = std::async(std::launch::async, build, corpus::InteractionKind::Commit);
    auto fi = std::async(std::launch::async, build, corpus::InteractionKind::Issue);
    NetworkSet nets;
    nets.star = build(corpus::InteractionKind::Star);
    nets.commit = fc.get();
    nets.issue = fi.get();
    return nets;
}

// ------------------------------------------------------------- embeddings ---

EmbeddingSet train_embeddings(const NetworkSet& nets, const LoadedCorpus& data,
                              const PipelineConfig& cfg) {
    auto train_nodes = [&](const net::ProjectGraph& g, std::uint64_t tag) {
        embed::WalkConfig wc = cfg.walks;
        wc.seed = rng::derive_seed(cfg.seed, 0x77a1c5, tag);
        embed::WalkSet ws = embed::sample_walks(g, wc);
        embed::SkipGramConfig sc = cfg.node_embed;
        sc.seed = rng::derive_seed(cfg.seed, 0x7e3a10, tag);
        return embed::train_skipgram(ws.walks, sc);
    };
    auto train_packages = [&] {
        embed::Corpus pc = embed::build_package_corpus(data.imports);
        embed::SkipGramConfig sc = cfg.package_embed;
        sc.seed = rng::derive_seed(cfg.seed, 0x7e3a10, 99);
        return embed::train_skipgram(pc, sc);
    };

    auto fc = std::async(std::launch::async, train_nodes, std::cref(nets.commit), 1);
    auto fi = std::async(std::launch::async, train_nodes, std::cref(nets.issue), 2);
    auto fp = std::async(std::launch::async, train_packages);
    EmbeddingSet out;
    out.star = train_nodes(nets.star, 3);
    out.commit = fc.get();
    out.issue = fi.get();
    out.packages = fp.get();
    return out;
}

// --------------------------------------------------- features, PCA, models ---

metrics::FeatureTable compute_features(const LoadedCorpus& data, const NetworkSet& nets,
                                       const EmbeddingSet& embs) {
    metrics::FeatureInputs in;
    in.commit_graph = &nets.commit;
    in.issue_graph = &nets.issue;
    in.star_graph = &nets.star;
    in.commit_emb = &embs.commit;
    in.issue_emb = &embs.issue;
    in.star_emb = &embs.star;
    in.package_emb = &embs.packages;
    in.imports = &data.imports;
    in.cores = &data.cores;
    return metrics::build_feature_table(data.sample.selected, in);
}

FeaturePcas fit_feature_pcas(const metrics::FeatureTable& table) {
    const std::vector<std::string> deg_names = {"deg_commit", "deg_issue", "deg_star"};
    const std::vector<std::string> div_names = {"div_commit", "div_issue", "div_star"};

    Eigen::MatrixXd degm(static_cast<Eigen::Index>(table.rows.size()), 3);
    std::vector<const metrics::ProjectFeatureRow*> div_rows;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        degm(static_cast<Eigen::Index>(r), 0) = row.deg_commit;
        degm(static_cast<Eigen::Index>(r), 1) = row.deg_issue;
        degm(static_cast<Eigen::Index>(r), 2) = row.deg_star;
        if (row.div_commit && row.div_issue && row.div_star)
            div_rows.push_back(&row);
    }
    Eigen::MatrixXd divm(static_cast<Eigen::Index>(div_rows.size()), 3);
    for (std::size_t r = 0; r < div_rows.size(); ++r) {
        divm(static_cast<Eigen::Index>(r), 0) = *div_rows[r]->div_commit;
        divm(static_cast<Eigen::Index>(r), 1) = *div_rows[r]->div_issue;
        divm(static_cast<Eigen::Index>(r), 2) = *div_rows[r]->div_star;
    }

    FeaturePcas out;
    // Degrees are non-negative and heavy-tailed: log1p then z. Diversities
    // live in [-1, 1] and can be negative: z only.
    out.degree = stats::fit_pca(degm, {true, true, true}, deg_names);
    out.degree_fit_rows = table.rows.size();
    out.diversity = stats::fit_pca(divm, {false, false, false}, div_names);
    out.diversity_fit_rows = div_rows.size();
    return out;
}

stats::DataTable build_model_table(const metrics::FeatureTable& table, const FeaturePcas& pcas) {
    stats::DataTable t;
    t.columns = {"innov",         "deg_ave",        "deg_weakness",    "div_ave",
                 "div_weakness",  "org_owned",      "log_owner_stars", "log_n_core_devs",
                 "log_n_packages", "year_creation"};

    const std::size_t n = table.rows.size();
    Eigen::MatrixXd degm(static_cast<Eigen::Index>(n), 3);
    for (std::size_t r = 0; r < n; ++r) {
        degm(static_cast<Eigen::Index>(r), 0) = table.rows[r].deg_commit;
        degm(static_cast<Eigen::Index>(r), 1) = table.rows[r].deg_issue;
        degm(static_cast<Eigen::Index>(r), 2) = table.rows[r].deg_star;
    }
    Eigen::MatrixXd deg_scores =
        stats::pca_scores(pcas.degree, stats::standardize_rows(pcas.degree, degm, {true, true, true}));

    t.rows.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = table.rows[r];
        std::vector<std::optional<double>> out(t.columns.size());
        out[0] = row.innov;
        out[1] = deg_scores(static_cast<Eigen::Index>(r), 0);
        out[2] = deg_scores(static_cast<Eigen::Index>(r), 1);
        if (row.div_commit && row.div_issue && row.div_star) {
            Eigen::MatrixXd one(1, 3);
            one << *row.div_commit, *row.div_issue, *row.div_star;
            Eigen::MatrixXd s = stats::pca_scores(
                pcas.diversity, stats::standardize_rows(pcas.diversity, one, {false, false, false}));
            out[3] = s(0, 0);
            out[4] = s(0, 1);
        }
        out[5] = static_cast<double>(row.org_owned);
        out[6] = std::log1p(row.owner_stars);
        out[7] = std::log1p(static_cast<double>(row.n_core_devs));
        out[8] = std::log1p(static_cast<double>(row.n_packages));
        out[9] = static_cast<double>(row.year_creation);
        t.rows.push_back(std::move(out));
    }
    return t;
}

namespace {

std::vector<std::string> interest_terms(const std::string& model_id) {
    if (model_id == "I" || model_id == "II")
        return {"deg_ave", "deg_weakness"};
    if (model_id == "III")
        return {"div_ave", "div_weakness"};
    if (model_id == "IV")
        return {"deg_ave", "deg_weakness", "div_ave", "div_weakness"};
    throw ConfigError("model must be one of I, II, III, IV");
}

const std::vector<std::string> kControls = {"org_owned", "log_owner_stars", "log_n_core_devs",
                                            "log_n_packages"};

} // namespace

stats::RegressionResult run_model(const stats::DataTable& table, const std::string& model_id) {
    stats::RegressionSpec spec;
    spec.response = "innov";
    spec.regressors = interest_terms(model_id);
    spec.regressors.insert(spec.regressors.end(), kControls.begin(), kControls.end());
    spec.fe_column = "year_creation";

    if (model_id == "II") {
        // Degree-only regression on the diversity-complete sample, isolating
        // the sample-composition shift from the diversity regressors.
        const std::size_t di = table.index_of("div_ave");
        stats::DataTable restricted;
        restricted.columns = table.columns;
        for (auto& row : table.rows)
            if (row[di].has_value())
                restricted.rows.push_back(row);
        return stats::ols_fixed_effects(restricted, spec);
    }
    return stats::ols_fixed_effects(table, spec);
}

// ------------------------------------------------------------ file stages ---

namespace {

struct StageClock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

template <class F>
auto in_stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("stage ") + name + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string("stage ") + name + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(std::string("stage ") + name + ": " + e.what());
    } catch (const std::exception& e) {
        throw DataError(std::string("stage ") + name + ": " + e.what());
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw ConfigError("cannot create output directory: " + dir);
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary); // binary: no newline translation
    if (!out)
        throw DataError("cannot open for writing: " + path.string());
    out << content;
    if (!out)
        throw DataError("write failed: " + path.string());
}

json ingest_report_json(const LoadedCorpus& data, const PipelineConfig& cfg) {
    json bots = json::object();
    for (auto& [actor, n] : data.bot_report.removed)
        bots[actor] = n;
    std::size_t assignments = 0;
    for (auto& [pid, v] : data.cores)
        assignments += v.size();
    return {{"rejected_lines", data.rejected_lines},
            {"bots_removed", bots},
            {"selection",
             {{"included", data.sample.report.included},
              {"excluded_fork", data.sample.report.excluded_fork},
              {"excluded_commits", data.sample.report.excluded_commits},
              {"excluded_python_files", data.sample.report.excluded_python_files},
              {"excluded_created_at", data.sample.report.excluded_created_at}}},
            {"core_rule", corpus::to_string(cfg.core_rule)},
            {"projects_with_cores", data.cores.size()},
            {"core_assignments", assignments}};
}

void write_ingest_outputs(const LoadedCorpus& data, const PipelineConfig& cfg,
                          std::vector<std::string>* written) {
    ensure_dir(cfg.output_dir);
    {
        std::ostringstream ss;
        corpus::write_cores_csv(data.cores, ss);
        write_text_file(fs::path(cfg.output_dir) / "cores.csv", ss.str());
    }
    write_text_file(fs::path(cfg.output_dir) / "ingest.json",
                    ingest_report_json(data, cfg).dump(2) + "\n");
    if (written) {
        written->push_back("cores.csv");
        written->push_back("ingest.json");
    }
}

json network_summary_json(const NetworkSet& nets, std::vector<std::string>* warnings) {
    auto one = [&](const net::ProjectGraph& g, const char* name) {
        json j = {{"nodes", g.nodes.size()}, {"edges", g.edges.size()}};
        try {
            j["transitivity"] = net::transitivity(net::undirected_view(g));
        } catch (const NumericError& e) {
            j["transitivity"] = nullptr;
            if (warnings)
                warnings->push_back(std::string(name) + ": " + e.what());
        }
        return j;
    };
    return {{"commit", one(nets.commit, "commit")},
            {"issue", one(nets.issue, "issue")},
            {"star", one(nets.star, "star")}};
}

void write_network_outputs(const NetworkSet& nets, const PipelineConfig& cfg,
                           std::vector<std::string>* written, std::vector<std::string>* warnings) {
    ensure_dir(cfg.output_dir);
    auto write_graph = [&](const net::ProjectGraph& g, const char* name) {
        std::ostringstream ss;
        net::write_graph_csv(g, ss);
        write_text_file(fs::path(cfg.output_dir) / name, ss.str());
        if (written)
            written->push_back(name);
    };
    write_graph(nets.commit, "network_commit.csv");
    write_graph(nets.issue, "network_issue.csv");
    write_graph(nets.star, "network_star.csv");
    write_text_file(fs::path(cfg.output_dir) / "networks.json",
                    network_summary_json(nets, warnings).dump(2) + "\n");
    if (written)
        written->push_back("networks.json");
}

void write_embedding_outputs(const EmbeddingSet& embs, const PipelineConfig& cfg,
                             std::vector<std::string>* written) {
    ensure_dir(cfg.output_dir);
    auto save = [&](const embed::EmbeddingMatrix& m, const char* name) {
        embed::save_embeddings(m, (fs::path(cfg.output_dir) / name).string());
        if (written)
            written->push_back(name);
    };
    save(embs.commit, "embeddings_commit.bin");
    save(embs.issue, "embeddings_issue.bin");
    save(embs.star, "embeddings_star.bin");
    save(embs.packages, "embeddings_packages.bin");
}

net::ProjectGraph read_graph_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open: " + path.string());
    return net::read_graph_csv(in);
}

NetworkSet read_network_outputs(const PipelineConfig& cfg) {
    NetworkSet nets;
    nets.commit = read_graph_file(fs::path(cfg.output_dir) / "network_commit.csv");
    nets.issue = read_graph_file(fs::path(cfg.output_dir) / "network_issue.csv");
    nets.star = read_graph_file(fs::path(cfg.output_dir) / "network_star.csv");
    return nets;
}

// The CSV is an edge list, so isolates are not in it. Every project with a
// core developer is a node; restore them from cores.csv so staged runs see
// the same graphs (and walk corpora) as a single-process run.
void add_core_nodes(NetworkSet& nets,
                    const std::map<std::string, std::vector<corpus::CoreDevAssignment>>& cores) {
    for (auto& [pid, v] : cores) {
        (void)v;
        nets.commit.nodes.insert(pid);
        nets.issue.nodes.insert(pid);
        nets.star.nodes.insert(pid);
    }
}

EmbeddingSet read_embedding_outputs(const PipelineConfig& cfg) {
    EmbeddingSet embs;
    embs.commit = embed::load_embeddings((fs::path(cfg.output_dir) / "embeddings_commit.bin").string());
    embs.issue = embed::load_embeddings((fs::path(cfg.output_dir) / "embeddings_issue.bin").string());
    embs.star = embed::load_embeddings((fs::path(cfg.output_dir) / "embeddings_star.bin").string());
    embs.packages =
        embed::load_embeddings((fs::path(cfg.output_dir) / "embeddings_packages.bin").string());
    return embs;
}

std::map<std::string, std::vector<corpus::CoreDevAssignment>> read_cores_file(
    const PipelineConfig& cfg) {
    std::ifstream in(fs::path(cfg.output_dir) / "cores.csv");
    if (!in)
        throw DataError("cannot open cores.csv in " + cfg.output_dir + " (run ingest first)");
    return corpus::read_cores_csv(in);
}

} // namespace

void stage_ingest(const PipelineConfig& cfg) {
    in_stage("ingest", [&] {
        cfg.validate();
        LoadedCorpus data = ingest(cfg);
        write_ingest_outputs(data, cfg, nullptr);
    });
}

void stage_networks(const PipelineConfig& cfg) {
    in_stage("networks", [&] {
        cfg.validate();
        if (cfg.events.empty())
            throw ConfigError("networks needs the events path");
        corpus::EventLog events = corpus::load_events_file(cfg.events);
        corpus::BotRules rules = corpus::BotRules::defaults();
        for (auto& b : load_id_list(cfg.bots))
            rules.denylist.insert(b);
        LoadedCorpus data;
        data.events = corpus::filter_bots(events, rules).first;
        data.cores = read_cores_file(cfg);
        NetworkSet nets = build_networks(data, cfg.window_months);
        write_network_outputs(nets, cfg, nullptr, nullptr);
    });
}

void stage_embed(const PipelineConfig& cfg) {
    in_stage("embed", [&] {
        cfg.validate();
        LoadedCorpus data;
        if (!cfg.imports.empty())
            data.imports = corpus::load_imports_jsonl_file(
                cfg.imports, cfg.cutoff.empty() ? 0 : time::parse_rfc3339_utc(cfg.cutoff));
        NetworkSet nets = read_network_outputs(cfg);
        add_core_nodes(nets, read_cores_file(cfg));
        EmbeddingSet embs = train_embeddings(nets, data, cfg);
        write_embedding_outputs(embs, cfg, nullptr);
    });
}

void stage_features(const PipelineConfig& cfg) {
    in_stage("features", [&] {
        cfg.validate();
        if (cfg.projects.empty())
            throw ConfigError("features needs the projects path");
        LoadedCorpus data;
        data.catalog = corpus::load_projects_csv_file(cfg.projects);
        data.sample = corpus::select_projects(data.catalog, corpus::SelectionRules::defaults());
        data.cores = read_cores_file(cfg);
        if (!cfg.imports.empty())
            data.imports = corpus::load_imports_jsonl_file(
                cfg.imports, cfg.cutoff.empty() ? 0 : time::parse_rfc3339_utc(cfg.cutoff));
        NetworkSet nets = read_network_outputs(cfg);
        add_core_nodes(nets, data.cores);
        EmbeddingSet embs = read_embedding_outputs(cfg);
        metrics::FeatureTable table = compute_features(data, nets, embs);
        metrics::write_features_csv_file(table,
                                         (fs::path(cfg.output_dir) / "features.csv").string());
    });
}

namespace {

metrics::FeatureTable read_features_file(const PipelineConfig& cfg) {
    fs::path p = fs::path(cfg.output_dir) / "features.csv";
    if (!fs::exists(p))
        throw DataError("features.csv not found in " + cfg.output_dir + " (run features first)");
    return metrics::read_features_csv_file(p.string());
}

} // namespace

void stage_pca(const PipelineConfig& cfg) {
    in_stage("pca", [&] {
        cfg.validate();
        metrics::FeatureTable table = read_features_file(cfg);
        FeaturePcas pcas = fit_feature_pcas(table);
        write_text_file(fs::path(cfg.output_dir) / "pca.json", pca_json(pcas));
    });
}

void stage_regress(const PipelineConfig& cfg) {
    in_stage("regress", [&] {
        cfg.validate();
        metrics::FeatureTable table = read_features_file(cfg);
        // PCA is refit from features.csv rather than parsed back from
        // pca.json: determinism makes both identical and features.csv stays
        // the single source of truth.
        FeaturePcas pcas = fit_feature_pcas(table);
        stats::DataTable model = build_model_table(table, pcas);
        stats::RegressionResult result = run_model(model, cfg.model);
        write_text_file(fs::path(cfg.output_dir) / "regression.json",
                        regression_json(cfg.model, result));
        write_text_file(fs::path(cfg.output_dir) / "regression.txt",
                        stats::render_regression_table({{"Model " + cfg.model, result}}));
    });
}

// ----------------------------------------------------------------- report ---

namespace {

std::string fmt(double v, const char* f = "%.4f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string pca_block_text(const char* title, const stats::PcaResult& p, std::size_t fit_rows,
                           const std::vector<std::string>& names) {
    std::ostringstream out;
    out << title << " (fit on " << fit_rows << " rows)\n";
    out << "  variance ratios:";
    for (Eigen::Index j = 0; j < p.explained_variance_ratio.size(); ++j)
        out << ' ' << fmt(p.explained_variance_ratio(j));
    out << '\n';
    for (Eigen::Index c = 0; c < p.loadings.cols(); ++c) {
        out << "  PC" << (c + 1) << ":";
        for (Eigen::Index r = 0; r < p.loadings.rows(); ++r)
            out << ' ' << names[static_cast<std::size_t>(r)] << '=' << fmt(p.loadings(r, c));
        out << '\n';
    }
    return out.str();
}

struct CohortFit {
    std::string label;
    std::size_t n = 0;
    bool ok = false;
    std::string error;
    std::vector<stats::RegressionTerm> interest;
};

std::vector<CohortFit> fit_cohorts(const stats::DataTable& model_table, const std::string& axis,
                                   const std::string& model_id) {
    stats::CohortAxis a = axis == "year"        ? stats::CohortAxis::YearCreation
                          : axis == "team_size" ? stats::CohortAxis::CoreTeamSize
                                                : stats::CohortAxis::Ownership;
    std::vector<CohortFit> out;
    for (auto& [label, sub] : stats::cohort_split(model_table, a)) {
        CohortFit fit;
        fit.label = label;
        fit.n = sub.n_rows();
        try {
            stats::RegressionResult r;
            if (a == stats::CohortAxis::YearCreation) {
                stats::RegressionSpec spec;
                spec.response = "innov";
                spec.regressors = interest_terms(model_id);
                spec.regressors.insert(spec.regressors.end(), kControls.begin(), kControls.end());
                spec.fe_column.clear();
                const std::size_t di = sub.index_of("div_ave");
                if (model_id == "II") {
                    stats::DataTable restricted;
                    restricted.columns = sub.columns;
                    for (auto& row : sub.rows)
                        if (row[di].has_value())
                            restricted.rows.push_back(row);
                    r = stats::ols_fixed_effects(restricted, spec);
                } else {
                    r = stats::ols_fixed_effects(sub, spec);
                }
            } else {
                r = run_model(sub, model_id);
            }
            for (auto& term : interest_terms(model_id))
                fit.interest.push_back(r.term(term));
            fit.ok = true;
        } catch (const std::exception& e) {
            fit.error = e.what();
        }
        out.push_back(std::move(fit));
    }
    return out;
}

} // namespace

void stage_report(const PipelineConfig& cfg) {
    in_stage("report", [&] {
        cfg.validate();
        metrics::FeatureTable table = read_features_file(cfg);
        FeaturePcas pcas = fit_feature_pcas(table);
        stats::DataTable model_table_ = build_model_table(table, pcas);
        stats::RegressionResult result = run_model(model_table_, cfg.model);

        json networks = nullptr;
        {
            fs::path p = fs::path(cfg.output_dir) / "networks.json";
            if (fs::exists(p)) {
                std::ifstream in(p);
                networks = json::parse(in, nullptr, false);
                if (networks.is_discarded())
                    networks = nullptr;
            }
        }

        std::vector<std::string> awesome = load_id_list(cfg.awesome);
        json ttest = nullptr;
        std::string ttest_note;
        {
            std::set<std::string> aset(awesome.begin(), awesome.end());
            std::vector<double> scores;
            std::vector<bool> flags;
            for (auto& r : table.rows)
                if (r.innov) {
                    scores.push_back(*r.innov);
                    flags.push_back(aset.count(r.project_id) > 0);
                }
            if (!awesome.empty()) {
                try {
                    stats::TTestResult t = stats::group_ttest(scores, flags);
                    ttest = {{"t", t.t},           {"dof", t.dof},
                             {"p", t.p},           {"mean_listed", t.mean_flagged},
                             {"mean_rest", t.mean_rest}};
                } catch (const std::exception& e) {
                    ttest_note = e.what();
                }
            }
        }

        std::vector<CohortFit> cohorts;
        if (!cfg.cohort_axis.empty())
            cohorts = fit_cohorts(model_table_, cfg.cohort_axis, cfg.model);

        // report.txt
        std::ostringstream out;
        out << "weakties run report (version " << kVersion << ")\n";
        out << "window " << cfg.window_months << " months, core rule "
            << corpus::to_string(cfg.core_rule) << ", model " << cfg.model << "\n\n";
        out << "projects in sample: " << table.rows.size() << "\n\n";

        if (!networks.is_null()) {
            out << "networks\n";
            for (const char* k : {"commit", "issue", "star"}) {
                const json& g = networks[k];
                out << "  " << k << ": nodes=" << g["nodes"].get<std::size_t>()
                    << " edges=" << g["edges"].get<std::size_t>() << " transitivity=";
                if (g["transitivity"].is_null())
                    out << "undefined";
                else
                    out << fmt(g["transitivity"].get<double>());
                out << '\n';
            }
            out << '\n';
        }

        out << pca_block_text("degree components", pcas.degree, pcas.degree_fit_rows,
                              {"deg_commit", "deg_issue", "deg_star"});
        out << pca_block_text("diversity components", pcas.diversity, pcas.diversity_fit_rows,
                              {"div_commit", "div_issue", "div_star"});
        out << '\n';

        out << stats::render_regression_table({{"Model " + cfg.model, result}}) << '\n';

        if (!ttest.is_null()) {
            out << "curated-list comparison (innovativeness, listed vs rest)\n";
            out << "  t=" << fmt(ttest["t"].get<double>()) << " dof=" << fmt(ttest["dof"].get<double>())
                << " p=" << fmt(ttest["p"].get<double>(), "%.6g")
                << " mean(listed)=" << fmt(ttest["mean_listed"].get<double>())
                << " mean(rest)=" << fmt(ttest["mean_rest"].get<double>()) << "\n\n";
        } else if (!ttest_note.empty()) {
            out << "curated-list comparison skipped: " << ttest_note << "\n\n";
        }

        if (!cohorts.empty()) {
            out << "cohorts by " << cfg.cohort_axis << " (model " << cfg.model << ")\n";
            for (auto& c : cohorts) {
                out << "  " << c.label << " n=" << c.n << ": ";
                if (!c.ok) {
                    out << "skipped (" << c.error << ")";
                } else {
                    for (std::size_t i = 0; i < c.interest.size(); ++i) {
                        if (i)
                            out << "  ";
                        out << c.interest[i].name << '=' << fmt(c.interest[i].coef)
                            << " (p=" << fmt(c.interest[i].p, "%.3g") << ')';
                    }
                }
                out << '\n';
            }
        }

        json jcohorts = nullptr;
        if (!cohorts.empty()) {
            jcohorts = json::array();
            for (auto& c : cohorts) {
                json terms = json::array();
                for (auto& t : c.interest)
                    terms.push_back({{"name", t.name}, {"coef", t.coef}, {"se", t.se}, {"p", t.p}});
                jcohorts.push_back({{"label", c.label},
                                    {"n", c.n},
                                    {"ok", c.ok},
                                    {"error", c.error},
                                    {"terms", terms}});
            }
        }
        json jreport = {{"version", kVersion},
                        {"model", cfg.model},
                        {"window_months", cfg.window_months},
                        {"core_rule", corpus::to_string(cfg.core_rule)},
                        {"networks", networks},
                        {"curated_ttest", ttest},
                        {"cohorts", jcohorts}};

        write_text_file(fs::path(cfg.output_dir) / "report.txt", out.str());
        write_text_file(fs::path(cfg.output_dir) / "report.json", jreport.dump(2) + "\n");
    });
}

// ------------------------------------------------------------------ JSON ----

std::string pca_json(const FeaturePcas& pcas) {
    auto block = [](const stats::PcaResult& p, std::size_t fit_rows, bool log1p,
                    const std::vector<std::string>& columns) {
        json loadings = json::array();
        for (Eigen::Index r = 0; r < p.loadings.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < p.loadings.cols(); ++c)
                row.push_back(p.loadings(r, c));
            loadings.push_back(row);
        }
        json ratios = json::array(), means = json::array(), sds = json::array();
        for (Eigen::Index i = 0; i < p.explained_variance_ratio.size(); ++i) {
            ratios.push_back(p.explained_variance_ratio(i));
            means.push_back(p.means(i));
            sds.push_back(p.sds(i));
        }
        return json{{"columns", columns}, {"loadings", loadings}, {"ratios", ratios},
                    {"means", means},     {"sds", sds},           {"fit_rows", fit_rows},
                    {"log1p", log1p},     {"rank", p.rank}};
    };
    json j = {{"degree", block(pcas.degree, pcas.degree_fit_rows, true,
                               {"deg_commit", "deg_issue", "deg_star"})},
              {"diversity", block(pcas.diversity, pcas.diversity_fit_rows, false,
                                  {"div_commit", "div_issue", "div_star"})}};
    return j.dump(2) + "\n";
}

std::string regression_json(const std::string& model_id, const stats::RegressionResult& r) {
    json terms = json::array();
    for (auto& t : r.terms)
        terms.push_back({{"name", t.name}, {"coef", t.coef}, {"se", t.se}, {"t", t.t}, {"p", t.p}});
    json j = {{"model", model_id},
              {"n_observations", r.n_observations},
              {"r2", r.r2},
              {"adjusted_r2", r.adjusted_r2},
              {"sigma2", r.sigma2},
              {"fe_column", r.fe_column},
              {"fe_reference", r.fe_reference},
              {"fe_levels", r.fe_levels},
              {"terms", terms}};
    return j.dump(2) + "\n";
}

// ------------------------------------------------------------ full run ------

RunManifest run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    RunManifest manifest;
    manifest.config = cfg;
    std::vector<std::string> written;

    auto timed = [&](const char* name, auto&& body) {
        StageClock clock;
        in_stage(name, body);
        manifest.stages.push_back({name, clock.ms()});
    };

    LoadedCorpus data;
    timed("ingest", [&] {
        data = ingest(cfg);
        write_ingest_outputs(data, cfg, &written);
    });

    NetworkSet nets;
    timed("networks", [&] {
        nets = build_networks(data, cfg.window_months);
        write_network_outputs(nets, cfg, &written, &manifest.warnings);
    });

    EmbeddingSet embs;
    timed("embed", [&] {
        embs = train_embeddings(nets, data, cfg);
        write_embedding_outputs(embs, cfg, &written);
    });

    metrics::FeatureTable table;
    timed("features", [&] {
        table = compute_features(data, nets, embs);
        metrics::write_features_csv_file(table,
                                         (fs::path(cfg.output_dir) / "features.csv").string());
        written.push_back("features.csv");
    });

    FeaturePcas pcas;
    timed("pca", [&] {
        pcas = fit_feature_pcas(table);
        write_text_file(fs::path(cfg.output_dir) / "pca.json", pca_json(pcas));
        written.push_back("pca.json");
    });

    timed("regress", [&] {
        stats::DataTable model = build_model_table(table, pcas);
        stats::RegressionResult result = run_model(model, cfg.model);
        write_text_file(fs::path(cfg.output_dir) / "regression.json",
                        regression_json(cfg.model, result));
        write_text_file(fs::path(cfg.output_dir) / "regression.txt",
                        stats::render_regression_table({{"Model " + cfg.model, result}}));
        written.push_back("regression.json");
        written.push_back("regression.txt");
    });

    {
        StageClock clock;
        stage_report(cfg); // reads the files this run just wrote; carries its own prefix
        manifest.stages.push_back({"report", clock.ms()});
        written.push_back("report.txt");
        written.push_back("report.json");
    }

    for (auto& name : written)
        manifest.outputs[name] = sha256_file((fs::path(cfg.output_dir) / name).string());

    json j = {{"version", manifest.version},
              {"config", json::parse(config_to_json(cfg))},
              {"warnings", manifest.warnings}};
    json stages = json::array();
    for (auto& s : manifest.stages)
        stages.push_back({{"name", s.name}, {"wall_ms", s.wall_ms}});
    j["stages"] = stages;
    json outputs = json::object();
    for (auto& [k, v] : manifest.outputs)
        outputs[k] = v;
    j["outputs"] = outputs;
    write_text_file(fs::path(cfg.output_dir) / "manifest.json", j.dump(2) + "\n");
    return manifest;
}

} // namespace weakties::pipeline
