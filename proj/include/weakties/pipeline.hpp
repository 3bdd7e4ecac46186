#pragma once

#include "weakties/corpus.hpp"
#include "weakties/embed.hpp"
#include "weakties/graph.hpp"
#include "weakties/metrics.hpp"
#include "weakties/stats.hpp"
#include "weakties/synth.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace weakties::pipeline {

inline constexpr const char* kVersion = "0.1.0";

struct PipelineConfig {
    // input paths
    std::string events;
    std::string projects;
    std::string imports;
    std::string bots;     // optional denylist
    std::string awesome;  // optional curated-list membership
    std::string output_dir = "out";

    int window_months = 12;                              // one of {6, 12, 24}
    corpus::CoreRule core_rule = corpus::CoreRule::Pct5Min10;
    std::string cutoff;                                  // RFC3339; "" = unbounded
    std::uint64_t seed = 0;
    std::string model = "IV";                            // I..IV
    std::string cohort_axis;                             // "", year, team_size, ownership

    embed::WalkConfig walks;
    embed::SkipGramConfig node_embed;     // shared by the three node trainings
    embed::SkipGramConfig package_embed;  // window 0 = whole sequence

    static PipelineConfig defaults();
    void validate() const; // ConfigError on out-of-range values
};

// Config file is JSON whose keys mirror the field names above; absent keys
// keep defaults, unknown keys are an error.
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config_json(const std::string& text, const PipelineConfig& base);
std::string config_to_json(const PipelineConfig& cfg);

struct LoadedCorpus {
    corpus::EventLog events;  // bot-filtered
    corpus::ProjectCatalog catalog;
    corpus::ProjectSet sample;
    std::map<std::string, std::vector<corpus::CoreDevAssignment>> cores;
    std::vector<corpus::ImportSequence> imports;
    std::vector<std::string> awesome;
    corpus::BotReport bot_report;
    std::size_t rejected_lines = 0;
};

LoadedCorpus ingest(const PipelineConfig& cfg);
// Same selection/filtering logic on in-memory inputs (tests, synthetic runs).
LoadedCorpus ingest_memory(corpus::EventLog events, corpus::ProjectCatalog catalog,
                           std::vector<corpus::ImportSequence> imports,
                           const std::vector<std::string>& bot_denylist,
                           std::vector<std::string> awesome, const PipelineConfig& cfg);

struct NetworkSet {
    net::ProjectGraph commit, issue, star;

    const net::ProjectGraph& by_kind(corpus::InteractionKind k) const;
};

// Three builds run concurrently.
NetworkSet build_networks(const LoadedCorpus& data, int window_months);

struct EmbeddingSet {
    embed::EmbeddingMatrix commit, issue, star, packages;
};

// Node trainings use per-kind seeds derived from cfg.seed; the package
// training gets its own. All four run concurrently.
EmbeddingSet train_embeddings(const NetworkSet& nets, const LoadedCorpus& data,
                              const PipelineConfig& cfg);

metrics::FeatureTable compute_features(const LoadedCorpus& data, const NetworkSet& nets,
                                       const EmbeddingSet& embs);

struct FeaturePcas {
    stats::PcaResult degree;     // fit on all sample rows, log1p + z
    stats::PcaResult diversity;  // fit on rows with all three diversities, z only
    std::size_t degree_fit_rows = 0;
    std::size_t diversity_fit_rows = 0;
};

FeaturePcas fit_feature_pcas(const metrics::FeatureTable& table);

// Modeling table: innov, deg_ave/deg_weakness, div_ave/div_weakness (missing
// off the diversity-complete rows), org_owned, log_owner_stars,
// log_n_core_devs, log_n_packages, year_creation.
stats::DataTable build_model_table(const metrics::FeatureTable& table, const FeaturePcas& pcas);

// Models mirror the published grid: I degree PCs on all rows; II degree PCs
// restricted to diversity-complete rows; III diversity PCs; IV both.
stats::RegressionResult run_model(const stats::DataTable& table, const std::string& model_id);

struct StageTiming {
    std::string name;
    double wall_ms = 0;
};

struct RunManifest {
    PipelineConfig config;
    std::string version = kVersion;
    std::vector<StageTiming> stages;
    std::map<std::string, std::string> outputs; // relative path -> sha256 hex
    std::vector<std::string> warnings;
};

// Full file-to-file run; every output is hashed into the manifest, which is
// itself written last as manifest.json.
RunManifest run_pipeline(const PipelineConfig& cfg);

// Individual file-backed stages behind the CLI subcommands. Each reads its
// upstream outputs from cfg.output_dir.
void stage_ingest(const PipelineConfig& cfg);
void stage_networks(const PipelineConfig& cfg);
void stage_embed(const PipelineConfig& cfg);
void stage_features(const PipelineConfig& cfg);
void stage_pca(const PipelineConfig& cfg);
void stage_regress(const PipelineConfig& cfg);
void stage_report(const PipelineConfig& cfg);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

// JSON renderers shared by stages and tests.
std::string pca_json(const FeaturePcas& pcas);
std::string regression_json(const std::string& model_id, const stats::RegressionResult& r);

} // namespace weakties::pipeline
