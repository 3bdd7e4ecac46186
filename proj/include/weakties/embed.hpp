#pragma once

#include "weakties/corpus.hpp"
#include "weakties/graph.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace weakties::embed {

// A training corpus is a bag of token sequences: node ids from random walks,
// or package names from per-project import lists.
using Corpus = std::vector<std::vector<std::string>>;

struct WalkConfig {
    int walk_length = 20;
    int walks_per_node = 10;
    std::uint64_t seed = 0;
};

struct WalkSet {
    Corpus walks;
    int walk_length = 20;
    int walks_per_node = 10;
    std::uint64_t seed = 0;
};

// First-order weighted random walks: from every node, walks_per_node walks,
// next node drawn among out-neighbors with probability weight/sum(weights),
// truncated at sinks. Each walk runs on its own derived seed, so the result
// is independent of sampling order.
WalkSet sample_walks(const net::ProjectGraph& graph, const WalkConfig& cfg);

// One sequence per project, package order as imported.
Corpus build_package_corpus(const std::vector<corpus::ImportSequence>& imports);

struct SkipGramConfig {
    std::uint32_t d = 64;
    int window = 5;        // context radius; 0 = FULL (whole sequence), for package corpora
    int negatives = 5;
    int epochs = 5;
    double lr_initial = 0.025;
    double lr_final = 1e-4;
    int min_count = 1;
    int workers = 1;       // >1 enables lock-free parallel updates; output then run-dependent
    std::uint64_t seed = 0;
};

struct EmbeddingMatrix {
    std::vector<std::string> ids; // vocabulary order: count desc, then id asc
    std::uint32_t d = 0;
    std::vector<float> data;      // row-major |ids| x d

    std::size_t size() const { return ids.size(); }
    const float* row(std::size_t i) const { return data.data() + static_cast<std::size_t>(i) * d; }
    float* row(std::size_t i) { return data.data() + static_cast<std::size_t>(i) * d; }
    std::map<std::string, std::size_t> make_index() const;
};

struct TrainStats {
    std::vector<double> epoch_mean_loss;
    std::uint64_t positive_pairs = 0; // per epoch
};

struct SkipGramGrad {
    std::vector<double> d_center;
    std::vector<double> d_context;
    std::vector<std::vector<double>> d_negatives;
};

// Double-precision reference for the negative-sampling objective
//   L = -log sigma(u.v) - sum_i log sigma(-u.n_i)
// with exact analytic gradients. The float training kernel below is held to
// this function in tests.
double skipgram_loss_and_grad(const std::vector<double>& center,
                              const std::vector<double>& context,
                              const std::vector<std::vector<double>>& negatives,
                              SkipGramGrad& grad);

// Single SGD step on one (center, context, negatives) example, float
// precision, in place. Returns the example loss before the update.
float sgd_update(float* center, float* context, const std::vector<float*>& negatives,
                 std::uint32_t d, float lr);

EmbeddingMatrix train_skipgram(const Corpus& corpus, const SkipGramConfig& cfg,
                               TrainStats* stats = nullptr);

double cosine_similarity(const float* v, const float* w, std::uint32_t d);
double cosine_similarity(const std::vector<double>& v, const std::vector<double>& w);

// CSV: header "id,dim0,...,dimN", one row per vector.
void write_embeddings_csv(const EmbeddingMatrix& m, std::ostream& out);
EmbeddingMatrix read_embeddings_csv(std::istream& in);

// Binary: magic "WTEM", version u16 (=1), d u32, count u64, count*d
// little-endian f32, then the vocabulary as count (u32 length, bytes) pairs.
// Bit-exact round-trip.
void write_embeddings_binary(const EmbeddingMatrix& m, std::ostream& out);
EmbeddingMatrix read_embeddings_binary(std::istream& in);

void save_embeddings(const EmbeddingMatrix& m, const std::string& path); // by extension: .csv else binary
EmbeddingMatrix load_embeddings(const std::string& path);

} // namespace weakties::embed
