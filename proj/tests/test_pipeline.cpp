#include "doctest.h"

#include "weakties/corpus.hpp"
#include "weakties/errors.hpp"
#include "weakties/pipeline.hpp"
#include "weakties/synth.hpp"
#include "weakties/timeutil.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace weakties;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void append_line(const fs::path& p, const std::string& line) {
    std::ofstream out(p, std::ios::app | std::ios::binary);
    out << line << '\n';
}

pipeline::PipelineConfig fast_config() {
    pipeline::PipelineConfig cfg = pipeline::PipelineConfig::defaults();
    cfg.node_embed.d = 16;
    cfg.node_embed.epochs = 2;
    cfg.package_embed.d = 16;
    cfg.package_embed.epochs = 2;
    cfg.walks.walks_per_node = 4;
    cfg.walks.walk_length = 10;
    cfg.seed = 99;
    return cfg;
}

} // namespace

TEST_CASE("config json round-trips and rejects junk") {
    pipeline::PipelineConfig cfg = pipeline::PipelineConfig::defaults();
    cfg.events = "e.jsonl";
    cfg.window_months = 24;
    cfg.core_rule = corpus::CoreRule::Cum80;
    cfg.seed = 31337;
    cfg.model = "III";
    cfg.node_embed.d = 48;
    cfg.walks.walk_length = 15;

    pipeline::PipelineConfig back =
        pipeline::parse_config_json(pipeline::config_to_json(cfg), pipeline::PipelineConfig::defaults());
    CHECK(back.events == "e.jsonl");
    CHECK(back.window_months == 24);
    CHECK(back.core_rule == corpus::CoreRule::Cum80);
    CHECK(back.seed == 31337);
    CHECK(back.model == "III");
    CHECK(back.node_embed.d == 48);
    CHECK(back.walks.walk_length == 15);
    CHECK(back.package_embed.window == 0); // default preserved

    CHECK_THROWS_WITH_AS(
        (void)pipeline::parse_config_json(R"({"evnets":"typo.jsonl"})",
                                          pipeline::PipelineConfig::defaults()),
        doctest::Contains("evnets"), ConfigError);
    CHECK_THROWS_AS((void)pipeline::parse_config_json(R"({"seed":"not-a-number"})",
                                                      pipeline::PipelineConfig::defaults()),
                    ConfigError);
    CHECK_THROWS_AS((void)pipeline::parse_config_json("[1,2]", pipeline::PipelineConfig::defaults()),
                    ConfigError);
    CHECK_THROWS_AS(
        (void)pipeline::parse_config_json(R"({"walks":{"pace":3}})",
                                          pipeline::PipelineConfig::defaults()),
        ConfigError);
}

TEST_CASE("config validation catches bad values") {
    pipeline::PipelineConfig cfg = pipeline::PipelineConfig::defaults();
    cfg.window_months = 9;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = pipeline::PipelineConfig::defaults();
    cfg.model = "V";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = pipeline::PipelineConfig::defaults();
    cfg.cohort_axis = "zodiac";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = pipeline::PipelineConfig::defaults();
    cfg.cutoff = "some day";
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = pipeline::PipelineConfig::defaults();
    cfg.node_embed.min_count = 3; // would orphan graph nodes
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    pipeline::PipelineConfig::defaults().validate(); // defaults are valid
}

TEST_CASE("sha256 matches the reference vector") {
    CHECK(pipeline::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(pipeline::sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("ingest removes bots, selects the sample and finds cores") {
    synth::SynthSpec spec;
    spec.n_projects = 40;
    spec.cluster_count = 4;
    spec.seed = 11;
    synth::SyntheticCorpus corpus_data = synth::generate_synthetic_corpus(spec);

    pipeline::PipelineConfig cfg = fast_config();
    pipeline::LoadedCorpus data =
        pipeline::ingest_memory(corpus_data.events, corpus_data.projects, corpus_data.imports,
                                corpus_data.bot_actors, corpus_data.awesome, cfg);

    CHECK(!data.sample.selected.empty());
    CHECK(!data.cores.empty());
    for (auto& b : corpus_data.bot_actors) {
        for (auto& e : data.events.events)
            CHECK(e.actor_id != b);
        CHECK(data.bot_report.removed.count(b) == 1);
    }
    // every selected project with commits got a core roster
    CHECK(data.cores.size() <= data.sample.selected.size());
}

TEST_CASE("in-memory pipeline produces a full feature table and fits models") {
    synth::SynthSpec spec;
    spec.n_projects = 48;
    spec.cluster_count = 4;
    spec.planted_effect = 0.3;
    spec.seed = 21;
    synth::SyntheticCorpus corpus_data = synth::generate_synthetic_corpus(spec);

    pipeline::PipelineConfig cfg = fast_config();
    pipeline::LoadedCorpus data =
        pipeline::ingest_memory(corpus_data.events, corpus_data.projects, corpus_data.imports,
                                corpus_data.bot_actors, corpus_data.awesome, cfg);
    pipeline::NetworkSet nets = pipeline::build_networks(data, cfg.window_months);
    pipeline::EmbeddingSet embs = pipeline::train_embeddings(nets, data, cfg);
    metrics::FeatureTable table = pipeline::compute_features(data, nets, embs);

    CHECK(table.rows.size() == data.sample.selected.size()); // one row per sample project

    pipeline::FeaturePcas pcas = pipeline::fit_feature_pcas(table);
    CHECK(pcas.degree_fit_rows == table.rows.size());
    CHECK(pcas.diversity_fit_rows <= table.rows.size());
    CHECK(pcas.diversity_fit_rows > 3);

    stats::DataTable model_table = pipeline::build_model_table(table, pcas);
    stats::RegressionResult m4 = pipeline::run_model(model_table, "IV");
    CHECK(m4.n_observations > 10);
    CHECK(m4.term("div_ave").se > 0);

    // Model II restricts to diversity-complete rows
    stats::RegressionResult m1 = pipeline::run_model(model_table, "I");
    stats::RegressionResult m2 = pipeline::run_model(model_table, "II");
    CHECK(m2.n_observations <= m1.n_observations);
    CHECK_THROWS_AS((void)m2.term("div_ave"), DataError); // degree regressors only

    CHECK_THROWS_AS((void)pipeline::run_model(model_table, "V"), ConfigError);
}

TEST_CASE("staged runs reproduce the single-process pipeline byte for byte") {
    synth::SynthSpec spec;
    spec.n_projects = 44;
    spec.cluster_count = 4;
    spec.seed = 33;
    synth::SyntheticCorpus corpus_data = synth::generate_synthetic_corpus(spec);

    fs::path base = fs::temp_directory_path() / "weakties-stage-equivalence";
    fs::remove_all(base);
    fs::create_directories(base);
    fs::path src = base / "corpus";
    synth::write_corpus(corpus_data, src.string());

    // Graft on a project whose developer never interacts: it has cores, so it
    // is a node in every network, but stays an isolate. The staged path must
    // restore it from cores.csv when the edge-list CSVs cannot carry it.
    append_line(src / "projects.csv",
                "proj-lone,2015-04-01T00:00:00Z,false,20,12,individual,3");
    for (int i = 0; i < 12; ++i) {
        std::ostringstream ev;
        ev << R"({"actor":"dev-lone","project":"proj-lone","kind":"commit","ts":"2015-04-)"
           << (10 + i) << R"(T08:00:00Z"})";
        append_line(src / "events.jsonl", ev.str());
    }

    pipeline::PipelineConfig cfg = fast_config();
    cfg.events = (src / "events.jsonl").string();
    cfg.projects = (src / "projects.csv").string();
    cfg.imports = (src / "imports.jsonl").string();
    cfg.bots = (src / "bots.txt").string();
    cfg.awesome = (src / "awesome.txt").string();
    cfg.cohort_axis = "ownership";

    cfg.output_dir = (base / "mono").string();
    pipeline::RunManifest manifest = pipeline::run_pipeline(cfg);
    CHECK(manifest.outputs.count("features.csv") == 1);
    CHECK(manifest.stages.size() == 7);

    cfg.output_dir = (base / "staged").string();
    pipeline::stage_ingest(cfg);
    pipeline::stage_networks(cfg);
    pipeline::stage_embed(cfg);
    pipeline::stage_features(cfg);
    pipeline::stage_pca(cfg);
    pipeline::stage_regress(cfg);
    pipeline::stage_report(cfg);

    // the isolate actually made it into the run
    std::string features = slurp(base / "mono" / "features.csv");
    CHECK(features.find("proj-lone") != std::string::npos);

    for (const char* name :
         {"cores.csv", "ingest.json", "network_commit.csv", "network_issue.csv",
          "network_star.csv", "networks.json", "embeddings_commit.bin", "embeddings_issue.bin",
          "embeddings_star.bin", "embeddings_packages.bin", "features.csv", "pca.json",
          "regression.json", "regression.txt", "report.txt", "report.json"}) {
        INFO("file: " << name);
        CHECK(slurp(base / "mono" / name) == slurp(base / "staged" / name));
    }
    fs::remove_all(base);
}

TEST_CASE("stage errors carry the stage name and exception type") {
    pipeline::PipelineConfig cfg = fast_config();
    cfg.events = "/no/such/events.jsonl";
    cfg.projects = "/no/such/projects.csv";
    CHECK_THROWS_WITH_AS(pipeline::stage_ingest(cfg), doctest::Contains("stage ingest"), DataError);

    pipeline::PipelineConfig bad = fast_config();
    bad.window_months = 13;
    CHECK_THROWS_AS(pipeline::stage_networks(bad), ConfigError);
}

TEST_CASE("cutoff bounds core identification") {
    corpus::EventLog events;
    auto commit = [&](const char* dev, const char* ts) {
        events.events.push_back(
            {dev, "p", corpus::InteractionKind::Commit, time::parse_rfc3339_utc(ts)});
    };
    // early dev: 12 commits in 2014; late dev: 12 commits in 2021
    for (int i = 0; i < 12; ++i)
        commit("early", "2014-02-01T00:00:00Z");
    for (int i = 0; i < 12; ++i)
        commit("late", "2021-02-01T00:00:00Z");

    corpus::ProjectRecord rec;
    rec.project_id = "p";
    rec.created_at = time::parse_rfc3339_utc("2014-01-01T00:00:00Z");
    rec.n_python_files = 20;
    rec.total_commits = 24;

    pipeline::PipelineConfig cfg = fast_config();
    pipeline::LoadedCorpus all = pipeline::ingest_memory(events, {rec}, {}, {}, {}, cfg);
    REQUIRE(all.cores.count("p") == 1);
    CHECK(all.cores.at("p").size() == 2);

    cfg.cutoff = "2015-01-01T00:00:00Z";
    pipeline::LoadedCorpus bounded = pipeline::ingest_memory(events, {rec}, {}, {}, {}, cfg);
    REQUIRE(bounded.cores.count("p") == 1);
    REQUIRE(bounded.cores.at("p").size() == 1);
    CHECK(bounded.cores.at("p")[0].developer_id == "early");
}
