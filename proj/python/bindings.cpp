// Python surface for the measurement pipeline: whole-run entry point plus the
// individual operations (census, walks-free skip-gram training, diversity
// scoring, PCA, fixed-effects OLS) for notebook-scale use.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "weakties/corpus.hpp"
#include "weakties/embed.hpp"
#include "weakties/errors.hpp"
#include "weakties/graph.hpp"
#include "weakties/metrics.hpp"
#include "weakties/pipeline.hpp"
#include "weakties/stats.hpp"
#include "weakties/synth.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace py = pybind11;
using namespace weakties;

namespace {

py::dict manifest_to_dict(const pipeline::RunManifest& m) {
    py::dict out;
    out["version"] = m.version;
    out["output_dir"] = m.config.output_dir;
    py::list stages;
    for (const auto& s : m.stages) {
        py::dict st;
        st["name"] = s.name;
        st["wall_ms"] = s.wall_ms;
        stages.append(st);
    }
    out["stages"] = stages;
    py::dict outputs;
    for (const auto& [rel, digest] : m.outputs)
        outputs[py::str(rel)] = digest;
    out["outputs"] = outputs;
    out["warnings"] = m.warnings;
    return out;
}

py::dict regression_to_dict(const stats::RegressionResult& r) {
    py::dict out;
    py::list terms;
    for (const auto& t : r.terms) {
        py::dict term;
        term["name"] = t.name;
        term["coef"] = t.coef;
        term["se"] = t.se;
        term["t"] = t.t;
        term["p"] = t.p;
        terms.append(term);
    }
    out["terms"] = terms;
    out["r2"] = r.r2;
    out["adjusted_r2"] = r.adjusted_r2;
    out["sigma2"] = r.sigma2;
    out["n_observations"] = r.n_observations;
    if (!r.fe_column.empty()) {
        out["fe_column"] = r.fe_column;
        out["fe_levels"] = r.fe_levels;
        out["fe_reference"] = r.fe_reference;
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "collaboration-network diversity pipeline (native core)";
    m.attr("__version__") = pipeline::kVersion;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "run_pipeline",
        [](const std::string& config_path, std::optional<std::string> output_dir) {
            pipeline::PipelineConfig cfg = pipeline::load_config(config_path);
            if (output_dir)
                cfg.output_dir = *output_dir;
            py::gil_scoped_release release;
            pipeline::RunManifest manifest = pipeline::run_pipeline(cfg);
            py::gil_scoped_acquire acquire;
            return manifest_to_dict(manifest);
        },
        py::arg("config_path"), py::arg("output_dir") = std::nullopt,
        "Run ingest through report from a JSON config file; returns the manifest.");

    m.def(
        "generate_corpus",
        [](const std::string& out_dir, std::size_t projects, std::size_t clusters,
           double effect, std::uint64_t seed) {
            synth::SynthSpec spec;
            spec.n_projects = projects;
            spec.cluster_count = clusters;
            spec.planted_effect = effect;
            spec.seed = seed;
            synth::SyntheticCorpus corpus = synth::generate_synthetic_corpus(spec);
            synth::write_corpus(corpus, out_dir);
            py::dict out;
            out["events"] = corpus.events.events.size();
            out["projects"] = corpus.projects.size();
            out["bots"] = corpus.bot_actors.size();
            return out;
        },
        py::arg("out_dir"), py::arg("projects") = 2000, py::arg("clusters") = 8,
        py::arg("effect") = 0.0, py::arg("seed") = 0,
        "Write a seeded synthetic event corpus (events/projects/imports/bots/awesome).");

    m.def(
        "triangle_census",
        [](const std::vector<std::pair<std::string, std::string>>& edges) {
            net::UndirectedGraph g;
            for (const auto& [a, b] : edges) {
                if (a == b)
                    continue;
                g.nodes.insert(a);
                g.nodes.insert(b);
                g.edges.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
            }
            net::TriangleCensus c = net::count_triangles_and_triads(g);
            py::dict out;
            out["triangles"] = c.triangles;
            out["triads"] = c.triads;
            out["transitivity"] =
                c.triads == 0 ? py::object(py::none())
                              : py::object(py::float_(3.0 * static_cast<double>(c.triangles) /
                                                      static_cast<double>(c.triads)));
            return out;
        },
        py::arg("edges"),
        "Triangle/triad counts and global transitivity of an undirected edge list "
        "(transitivity is None when the graph has no triads).");

    m.def(
        "train_embeddings",
        [](const std::vector<std::vector<std::string>>& sentences, std::uint32_t d,
           std::uint32_t window, std::uint32_t negatives, std::uint32_t epochs,
           double lr_initial, std::uint32_t min_count, std::uint64_t seed) {
            embed::SkipGramConfig cfg;
            cfg.d = d;
            cfg.window = window;
            cfg.negatives = negatives;
            cfg.epochs = epochs;
            cfg.lr_initial = lr_initial;
            cfg.min_count = min_count;
            cfg.seed = seed;
            embed::EmbeddingMatrix emb;
            {
                py::gil_scoped_release release;
                emb = embed::train_skipgram(sentences, cfg);
            }
            py::dict out;
            for (std::size_t i = 0; i < emb.ids.size(); ++i) {
                const float* row = emb.row(i);
                py::list vec;
                for (std::uint32_t k = 0; k < emb.d; ++k)
                    vec.append(row[k]);
                out[py::str(emb.ids[i])] = vec;
            }
            return out;
        },
        py::arg("sentences"), py::arg("d") = 64, py::arg("window") = 5,
        py::arg("negatives") = 5, py::arg("epochs") = 5, py::arg("lr_initial") = 0.025,
        py::arg("min_count") = 1, py::arg("seed") = 0,
        "Train skip-gram embeddings on tokenized sequences (window=0 treats each "
        "sequence as one full context); returns {token: vector}.");

    m.def(
        "pairwise_distinctness",
        [](const std::vector<std::vector<double>>& vectors) {
            if (vectors.size() < 2)
                return py::object(py::none());
            double acc = 0;
            std::size_t pairs = 0;
            for (std::size_t a = 0; a < vectors.size(); ++a)
                for (std::size_t b = a + 1; b < vectors.size(); ++b) {
                    acc += -embed::cosine_similarity(vectors[a], vectors[b]);
                    ++pairs;
                }
            return py::object(py::float_(acc / static_cast<double>(pairs)));
        },
        py::arg("vectors"),
        "Mean pairwise negative cosine similarity (the diversity score applied to "
        "an explicit vector set); None below two vectors.");

    m.def(
        "pca",
        [](const std::vector<std::vector<double>>& rows, std::vector<bool> log_flags,
           std::vector<std::string> names) {
            if (rows.empty())
                throw DataError("pca: no rows");
            const std::size_t p = rows.front().size();
            Eigen::MatrixXd raw(static_cast<Eigen::Index>(rows.size()),
                                static_cast<Eigen::Index>(p));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != p)
                    throw DataError("pca: ragged rows");
                for (std::size_t j = 0; j < p; ++j)
                    raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        rows[i][j];
            }
            if (log_flags.empty())
                log_flags.assign(p, false);
            stats::PcaResult r = stats::fit_pca(raw, log_flags, names);
            py::dict out;
            py::list loadings;
            for (Eigen::Index j = 0; j < r.loadings.rows(); ++j) {
                py::list row;
                for (Eigen::Index k = 0; k < r.loadings.cols(); ++k)
                    row.append(r.loadings(j, k));
                loadings.append(row);
            }
            out["loadings"] = loadings;
            py::list evr;
            for (Eigen::Index k = 0; k < r.explained_variance_ratio.size(); ++k)
                evr.append(r.explained_variance_ratio(k));
            out["explained_variance_ratio"] = evr;
            out["rank"] = r.rank;
            return out;
        },
        py::arg("rows"), py::arg("log_flags") = std::vector<bool>{},
        py::arg("names") = std::vector<std::string>{},
        "Standardize (optionally log1p first, per column) and fit principal "
        "components; loadings[j][k] is variable j's weight on component k.");

    m.def(
        "ols",
        [](const std::vector<std::string>& columns,
           const std::vector<std::vector<std::optional<double>>>& rows,
           const std::string& response, const std::vector<std::string>& regressors,
           const std::string& fixed_effects) {
            stats::DataTable t;
            t.columns = columns;
            t.rows = rows;
            stats::RegressionSpec spec{response, regressors, fixed_effects};
            return regression_to_dict(stats::ols_fixed_effects(t, spec));
        },
        py::arg("columns"), py::arg("rows"), py::arg("response"), py::arg("regressors"),
        py::arg("fixed_effects") = std::string{},
        "Fixed-effects OLS with listwise deletion over None cells; classical "
        "standard errors, dummy-coded fixed effects with the earliest level absorbed.");
}
