#include "CLI11.hpp"
#include "json.hpp"

#include "weakties/errors.hpp"
#include "weakties/pipeline.hpp"
#include "weakties/synth.hpp"

#include <cstdio>
#include <fstream>
#include <string>

namespace {

using weakties::pipeline::PipelineConfig;

struct CommonOpts {
    std::string config_path;
    std::string events, projects, imports, bots, awesome, out;
    std::string core_rule, cutoff, model, cohort_axis;
    int window_months = 12;
    std::uint64_t seed = 0;
    int workers = 1;
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--config", o.config_path, "JSON config file; flags override its values")
        ->check(CLI::ExistingFile);
    sub->add_option("--events", o.events, "interaction events (jsonl)");
    sub->add_option("--projects", o.projects, "project catalog (csv)");
    sub->add_option("--imports", o.imports, "package import sequences (jsonl)");
    sub->add_option("--bots", o.bots, "extra bot account denylist (one id per line)");
    sub->add_option("--awesome", o.awesome, "curated project list (one id per line)");
    sub->add_option("--out", o.out, "output directory (default: out)");
    sub->add_option("--window-months", o.window_months, "interaction window: 6, 12 or 24");
    sub->add_option("--core-rule", o.core_rule, "core developer rule: pct5min10 or cum80");
    sub->add_option("--cutoff", o.cutoff, "observation cutoff timestamp (RFC 3339 UTC)");
    sub->add_option("--seed", o.seed, "run seed (required wherever training happens)");
    sub->add_option("--model", o.model, "regression model: I, II, III or IV");
    sub->add_option("--cohort-axis", o.cohort_axis, "report cohorts: year, team_size or ownership");
    sub->add_option("--workers", o.workers, "training worker threads (>1 is non-deterministic)");
}

bool config_has_seed(const std::string& path) {
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    return j.is_object() && j.contains("seed");
}

// Start from defaults, overlay the config file, then overlay every flag the
// user actually passed. Returns whether a seed was given explicitly.
std::pair<PipelineConfig, bool> build_config(CLI::App* sub, const CommonOpts& o) {
    PipelineConfig cfg = PipelineConfig::defaults();
    bool seed_given = false;
    if (sub->count("--config") > 0) {
        cfg = weakties::pipeline::load_config(o.config_path);
        seed_given = config_has_seed(o.config_path);
    }
    if (sub->count("--events") > 0)
        cfg.events = o.events;
    if (sub->count("--projects") > 0)
        cfg.projects = o.projects;
    if (sub->count("--imports") > 0)
        cfg.imports = o.imports;
    if (sub->count("--bots") > 0)
        cfg.bots = o.bots;
    if (sub->count("--awesome") > 0)
        cfg.awesome = o.awesome;
    if (sub->count("--out") > 0)
        cfg.output_dir = o.out;
    if (sub->count("--window-months") > 0)
        cfg.window_months = o.window_months;
    if (sub->count("--core-rule") > 0) {
        auto rule = weakties::corpus::core_rule_from_string(o.core_rule);
        if (!rule)
            throw weakties::ConfigError("core-rule must be pct5min10 or cum80");
        cfg.core_rule = *rule;
    }
    if (sub->count("--cutoff") > 0)
        cfg.cutoff = o.cutoff;
    if (sub->count("--seed") > 0) {
        cfg.seed = o.seed;
        seed_given = true;
    }
    if (sub->count("--model") > 0)
        cfg.model = o.model;
    if (sub->count("--cohort-axis") > 0)
        cfg.cohort_axis = o.cohort_axis;
    if (sub->count("--workers") > 0) {
        cfg.node_embed.workers = o.workers;
        cfg.package_embed.workers = o.workers;
    }
    return {cfg, seed_given};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"interaction networks, embeddings and innovation regressions for project corpora"};
    app.set_version_flag("--version", std::string(weakties::pipeline::kVersion));
    app.require_subcommand(1);

    CommonOpts o;
    auto* c_ingest = app.add_subcommand(
        "ingest", "load events and projects, drop bots, select the sample, identify core developers");
    auto* c_networks =
        app.add_subcommand("networks", "build the commit/issue/star interaction networks");
    auto* c_embed =
        app.add_subcommand("embed", "sample walks and train node and package embeddings");
    auto* c_features = app.add_subcommand("features", "compute the per-project feature table");
    auto* c_pca = app.add_subcommand("pca", "fit degree and diversity principal components");
    auto* c_regress = app.add_subcommand("regress", "fit the configured fixed-effects regression");
    auto* c_report = app.add_subcommand("report", "render the summary report");
    auto* c_pipeline = app.add_subcommand("pipeline", "run every stage and write a manifest");
    for (CLI::App* sub : {c_ingest, c_networks, c_embed, c_features, c_pca, c_regress, c_report,
                          c_pipeline})
        add_common(sub, o);

    auto* c_synth = app.add_subcommand("synth", "generate a synthetic corpus with a planted effect");
    weakties::synth::SynthSpec synth_spec;
    std::string synth_out;
    c_synth->add_option("--projects", synth_spec.n_projects, "number of projects");
    c_synth->add_option("--devs", synth_spec.n_devs, "developer pool size (0: one per project)");
    c_synth->add_option("--clusters", synth_spec.cluster_count, "number of knowledge clusters");
    c_synth->add_option("--effect", synth_spec.planted_effect,
                        "planted cross-cluster import effect (0 disables it)");
    c_synth->add_option("--seed", synth_spec.seed, "corpus seed")->required();
    c_synth->add_option("--out", synth_out, "directory for the generated corpus")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e); // prints help or the error
        return rc == 0 ? 0 : 2;
    }

    try {
        if (c_synth->parsed()) {
            weakties::synth::SyntheticCorpus corpus =
                weakties::synth::generate_synthetic_corpus(synth_spec);
            weakties::synth::write_corpus(corpus, synth_out);
            std::printf("wrote %zu events for %zu projects to %s\n", corpus.events.events.size(),
                        corpus.projects.size(), synth_out.c_str());
            return 0;
        }

        CLI::App* sub = app.get_subcommands().front();
        auto [cfg, seed_given] = build_config(sub, o);
        const bool trains = c_embed->parsed() || c_pipeline->parsed();
        if (trains && !seed_given)
            throw weakties::ConfigError(
                "this command trains embeddings and needs --seed (or a seed in the config)");

        if (c_ingest->parsed())
            weakties::pipeline::stage_ingest(cfg);
        else if (c_networks->parsed())
            weakties::pipeline::stage_networks(cfg);
        else if (c_embed->parsed())
            weakties::pipeline::stage_embed(cfg);
        else if (c_features->parsed())
            weakties::pipeline::stage_features(cfg);
        else if (c_pca->parsed())
            weakties::pipeline::stage_pca(cfg);
        else if (c_regress->parsed())
            weakties::pipeline::stage_regress(cfg);
        else if (c_report->parsed())
            weakties::pipeline::stage_report(cfg);
        else if (c_pipeline->parsed()) {
            weakties::pipeline::RunManifest manifest = weakties::pipeline::run_pipeline(cfg);
            for (const auto& s : manifest.stages)
                std::printf("%-10s %8.1f ms\n", s.name.c_str(), s.wall_ms);
            std::printf("outputs: %zu files in %s\n", manifest.outputs.size(),
                        cfg.output_dir.c_str());
            for (const auto& w : manifest.warnings)
                std::fprintf(stderr, "warning: %s\n", w.c_str());
        }
    } catch (const weakties::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const weakties::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const weakties::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
