#include "weakties/embed.hpp"

#include "weakties/errors.hpp"
#include "weakties/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

namespace weakties::embed {

namespace {

// -log sigma(x), computed without overflow for large |x|.
double neg_log_sigmoid(double x) {
    if (x >= 0)
        return std::log1p(std::exp(-x));
    return -x + std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0)
        return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

WalkSet sample_walks(const net::ProjectGraph& graph, const WalkConfig& cfg) {
    if (graph.nodes.empty())
        throw DataError("sample_walks: empty graph");
    if (cfg.walk_length <= 0 || cfg.walks_per_node <= 0)
        throw ConfigError("sample_walks: walk_length and walks_per_node must be positive");

    // Index the adjacency once; nodes in sorted order fixes walk order.
    std::vector<std::string> nodes(graph.nodes.begin(), graph.nodes.end());
    std::map<std::string, std::vector<std::pair<std::string, double>>> adj;
    std::map<std::string, double> total;
    for (auto& [key, w] : graph.edges) {
        adj[key.first].emplace_back(key.second, static_cast<double>(w));
        total[key.first] += w;
    }

    WalkSet ws;
    ws.walk_length = cfg.walk_length;
    ws.walks_per_node = cfg.walks_per_node;
    ws.seed = cfg.seed;
    ws.walks.reserve(nodes.size() * static_cast<std::size_t>(cfg.walks_per_node));

    for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
        for (int r = 0; r < cfg.walks_per_node; ++r) {
            std::mt19937_64 gen(rng::derive_seed(cfg.seed, ni, static_cast<std::uint64_t>(r)));
            std::vector<std::string> walk;
            walk.reserve(cfg.walk_length);
            walk.push_back(nodes[ni]);
            while (static_cast<int>(walk.size()) < cfg.walk_length) {
                auto it = adj.find(walk.back());
                if (it == adj.end() || it->second.empty())
                    break; // sink
                double cut = rng::uniform_double(gen) * total[walk.back()];
                double acc = 0;
                const std::string* next = nullptr;
                for (auto& [dst, w] : it->second) {
                    acc += w;
                    if (cut < acc) {
                        next = &dst;
                        break;
                    }
                }
                if (!next)
                    next = &it->second.back().first; // guards rounding at the far edge
                walk.push_back(*next);
            }
            ws.walks.push_back(std::move(walk));
        }
    }
    return ws;
}

Corpus build_package_corpus(const std::vector<corpus::ImportSequence>& imports) {
    Corpus out;
    out.reserve(imports.size());
    for (auto& seq : imports)
        out.push_back(seq.packages);
    return out;
}

std::map<std::string, std::size_t> EmbeddingMatrix::make_index() const {
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < ids.size(); ++i)
        idx[ids[i]] = i;
    return idx;
}

double skipgram_loss_and_grad(const std::vector<double>& center,
                              const std::vector<double>& context,
                              const std::vector<std::vector<double>>& negatives,
                              SkipGramGrad& grad) {
    const std::size_t d = center.size();
    if (context.size() != d)
        throw DataError("skipgram_loss_and_grad: context dimension mismatch");
    for (auto& n : negatives)
        if (n.size() != d)
            throw DataError("skipgram_loss_and_grad: negative dimension mismatch");

    grad.d_center.assign(d, 0.0);
    grad.d_context.assign(d, 0.0);
    grad.d_negatives.assign(negatives.size(), std::vector<double>(d, 0.0));

    double dot = 0;
    for (std::size_t i = 0; i < d; ++i)
        dot += center[i] * context[i];
    double loss = neg_log_sigmoid(dot);
    double g = sigmoid(dot) - 1.0; // d loss / d dot for the positive term
    for (std::size_t i = 0; i < d; ++i) {
        grad.d_context[i] = g * center[i];
        grad.d_center[i] = g * context[i];
    }
    for (std::size_t k = 0; k < negatives.size(); ++k) {
        double ndot = 0;
        for (std::size_t i = 0; i < d; ++i)
            ndot += center[i] * negatives[k][i];
        loss += neg_log_sigmoid(-ndot);
        double gn = sigmoid(ndot); // d loss / d ndot for a negative term
        for (std::size_t i = 0; i < d; ++i) {
            grad.d_negatives[k][i] = gn * center[i];
            grad.d_center[i] += gn * negatives[k][i];
        }
    }
    return loss;
}

float sgd_update(float* center, float* context, const std::vector<float*>& negatives,
                 std::uint32_t d, float lr) {
    // Accumulate the center gradient aside so context/negative updates see the
    // pre-step center, matching the analytic gradients exactly.
    thread_local std::vector<float> acc;
    acc.assign(d, 0.0f);

    double dot = 0;
    for (std::uint32_t i = 0; i < d; ++i)
        dot += static_cast<double>(center[i]) * context[i];
    float loss = static_cast<float>(neg_log_sigmoid(dot));
    float g = static_cast<float>(sigmoid(dot) - 1.0);
    for (std::uint32_t i = 0; i < d; ++i) {
        acc[i] += g * context[i];
        context[i] -= lr * g * center[i];
    }
    for (float* neg : negatives) {
        double ndot = 0;
        for (std::uint32_t i = 0; i < d; ++i)
            ndot += static_cast<double>(center[i]) * neg[i];
        loss += static_cast<float>(neg_log_sigmoid(-ndot));
        float gn = static_cast<float>(sigmoid(ndot));
        for (std::uint32_t i = 0; i < d; ++i) {
            acc[i] += gn * neg[i];
            neg[i] -= lr * gn * center[i];
        }
    }
    for (std::uint32_t i = 0; i < d; ++i)
        center[i] -= lr * acc[i];
    return loss;
}

namespace {

struct Vocab {
    std::vector<std::string> ids;           // count desc, id asc
    std::map<std::string, std::size_t> index;
    std::vector<std::uint64_t> counts;      // aligned with ids
};

Vocab build_vocab(const Corpus& corpus, int min_count) {
    std::map<std::string, std::uint64_t> counts;
    for (auto& seq : corpus)
        for (auto& tok : seq)
            ++counts[tok];

    std::vector<std::pair<std::string, std::uint64_t>> order(counts.begin(), counts.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });

    Vocab v;
    for (auto& [tok, c] : order) {
        if (c < static_cast<std::uint64_t>(min_count))
            continue;
        v.index[tok] = v.ids.size();
        v.ids.push_back(tok);
        v.counts.push_back(c);
    }
    return v;
}

// Cumulative unigram^0.75 table for negative sampling.
std::vector<double> negative_table(const Vocab& v) {
    std::vector<double> cum(v.counts.size());
    double acc = 0;
    for (std::size_t i = 0; i < v.counts.size(); ++i) {
        acc += std::pow(static_cast<double>(v.counts[i]), 0.75);
        cum[i] = acc;
    }
    return cum;
}

std::size_t draw_negative(const std::vector<double>& cum, std::mt19937_64& gen) {
    double x = rng::uniform_double(gen) * cum.back();
    auto it = std::upper_bound(cum.begin(), cum.end(), x);
    if (it == cum.end())
        --it;
    return static_cast<std::size_t>(it - cum.begin());
}

struct EpochTotals {
    double loss = 0;
    std::uint64_t pairs = 0;
};

// One pass of one worker over its share of sequences.
void run_epoch_share(const std::vector<std::vector<std::uint32_t>>& seqs,
                     std::size_t begin, std::size_t stride,
                     EmbeddingMatrix& input, std::vector<float>& output,
                     const std::vector<double>& neg_cum, const SkipGramConfig& cfg,
                     std::mt19937_64& gen, std::atomic<std::uint64_t>& processed,
                     std::uint64_t total_positions, EpochTotals& totals) {
    const std::uint32_t d = cfg.d;
    std::vector<float*> negs;
    for (std::size_t si = begin; si < seqs.size(); si += stride) {
        const auto& seq = seqs[si];
        const int n = static_cast<int>(seq.size());
        for (int t = 0; t < n; ++t) {
            std::uint64_t done = processed.fetch_add(1, std::memory_order_relaxed);
            double frac = total_positions ? static_cast<double>(done) / total_positions : 0.0;
            float lr = static_cast<float>(cfg.lr_initial + (cfg.lr_final - cfg.lr_initial) * frac);

            int lo = cfg.window > 0 ? std::max(0, t - cfg.window) : 0;
            int hi = cfg.window > 0 ? std::min(n - 1, t + cfg.window) : n - 1;
            for (int c = lo; c <= hi; ++c) {
                if (c == t)
                    continue;
                std::uint32_t center = seq[t];
                std::uint32_t pos = seq[c];
                negs.clear();
                for (int k = 0; k < cfg.negatives; ++k) {
                    std::size_t cand = 0;
                    bool found = false;
                    for (int attempt = 0; attempt < 100; ++attempt) {
                        cand = draw_negative(neg_cum, gen);
                        if (cand != pos) {
                            found = true;
                            break;
                        }
                    }
                    if (found) // a one-token vocabulary yields no usable negatives
                        negs.push_back(output.data() + cand * d);
                }
                totals.loss += sgd_update(input.row(center), output.data() + pos * static_cast<std::size_t>(d),
                                          negs, d, lr);
                ++totals.pairs;
            }
        }
    }
}

} // namespace

EmbeddingMatrix train_skipgram(const Corpus& corpus, const SkipGramConfig& cfg, TrainStats* stats) {
    if (corpus.empty())
        throw DataError("train_skipgram: empty corpus");
    if (cfg.d == 0 || cfg.negatives < 0 || cfg.epochs <= 0 || cfg.window < 0)
        throw ConfigError("train_skipgram: d and epochs must be positive, window and negatives non-negative");
    if (cfg.lr_initial <= 0 || cfg.lr_final <= 0 || cfg.lr_final > cfg.lr_initial)
        throw ConfigError("train_skipgram: learning rates must satisfy 0 < lr_final <= lr_initial");
    if (cfg.min_count < 1 || cfg.workers < 1)
        throw ConfigError("train_skipgram: min_count and workers must be at least 1");

    Vocab vocab = build_vocab(corpus, cfg.min_count);
    if (vocab.ids.empty())
        throw DataError("train_skipgram: vocabulary empty after min_count filtering");

    std::vector<std::vector<std::uint32_t>> seqs;
    seqs.reserve(corpus.size());
    std::uint64_t tokens = 0;
    for (auto& seq : corpus) {
        std::vector<std::uint32_t> s;
        s.reserve(seq.size());
        for (auto& tok : seq) {
            auto it = vocab.index.find(tok);
            if (it != vocab.index.end())
                s.push_back(static_cast<std::uint32_t>(it->second));
        }
        tokens += s.size();
        seqs.push_back(std::move(s));
    }

    EmbeddingMatrix m;
    m.ids = vocab.ids;
    m.d = cfg.d;
    m.data.resize(m.ids.size() * static_cast<std::size_t>(cfg.d));
    {
        std::mt19937_64 gen(rng::derive_seed(cfg.seed, 0x696e6974 /*"init"*/));
        const float half = 0.5f / static_cast<float>(cfg.d);
        for (auto& x : m.data)
            x = static_cast<float>((rng::uniform_double(gen) * 2.0 - 1.0)) * half;
    }
    std::vector<float> output(m.data.size(), 0.0f);

    std::vector<double> neg_cum = negative_table(vocab);
    std::uint64_t total_positions = tokens * static_cast<std::uint64_t>(cfg.epochs);
    std::atomic<std::uint64_t> processed{0};

    if (stats) {
        stats->epoch_mean_loss.clear();
        stats->positive_pairs = 0;
    }

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        EpochTotals totals;
        if (cfg.workers == 1) {
            std::mt19937_64 gen(rng::derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(epoch)));
            run_epoch_share(seqs, 0, 1, m, output, neg_cum, cfg, gen, processed, total_positions, totals);
        } else {
            std::vector<EpochTotals> parts(cfg.workers);
            std::vector<std::thread> threads;
            for (int w = 0; w < cfg.workers; ++w) {
                threads.emplace_back([&, w] {
                    std::mt19937_64 gen(rng::derive_seed(
                        cfg.seed, 2 + static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(epoch)));
                    run_epoch_share(seqs, static_cast<std::size_t>(w), static_cast<std::size_t>(cfg.workers),
                                    m, output, neg_cum, cfg, gen, processed, total_positions, parts[w]);
                });
            }
            for (auto& t : threads)
                t.join();
            for (auto& p : parts) {
                totals.loss += p.loss;
                totals.pairs += p.pairs;
            }
        }
        if (stats) {
            stats->epoch_mean_loss.push_back(totals.pairs ? totals.loss / totals.pairs : 0.0);
            stats->positive_pairs = totals.pairs;
        }
    }
    return m;
}

double cosine_similarity(const float* v, const float* w, std::uint32_t d) {
    double dot = 0, nv = 0, nw = 0;
    for (std::uint32_t i = 0; i < d; ++i) {
        dot += static_cast<double>(v[i]) * w[i];
        nv += static_cast<double>(v[i]) * v[i];
        nw += static_cast<double>(w[i]) * w[i];
    }
    if (nv == 0 || nw == 0)
        throw NumericError("cosine_similarity: zero vector");
    return dot / (std::sqrt(nv) * std::sqrt(nw));
}

double cosine_similarity(const std::vector<double>& v, const std::vector<double>& w) {
    if (v.size() != w.size())
        throw DataError("cosine_similarity: dimension mismatch");
    double dot = 0, nv = 0, nw = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        dot += v[i] * w[i];
        nv += v[i] * v[i];
        nw += w[i] * w[i];
    }
    if (nv == 0 || nw == 0)
        throw NumericError("cosine_similarity: zero vector");
    return dot / (std::sqrt(nv) * std::sqrt(nw));
}

void write_embeddings_csv(const EmbeddingMatrix& m, std::ostream& out) {
    out << "id";
    for (std::uint32_t i = 0; i < m.d; ++i)
        out << ",dim" << i;
    out << '\n';
    char buf[64];
    for (std::size_t r = 0; r < m.size(); ++r) {
        out << m.ids[r];
        const float* row = m.row(r);
        for (std::uint32_t i = 0; i < m.d; ++i) {
            std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(row[i]));
            out << ',' << buf;
        }
        out << '\n';
    }
}

EmbeddingMatrix read_embeddings_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw DataError("embeddings csv: empty input");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    std::istringstream hs(line);
    std::string field;
    if (!std::getline(hs, field, ',') || field != "id")
        throw DataError("embeddings csv: header must start with 'id'");
    std::uint32_t d = 0;
    while (std::getline(hs, field, ',')) {
        if (field != "dim" + std::to_string(d))
            throw DataError("embeddings csv: unexpected header column '" + field + "'");
        ++d;
    }
    if (d == 0)
        throw DataError("embeddings csv: no dimension columns");

    EmbeddingMatrix m;
    m.d = d;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string id;
        if (!std::getline(ss, id, ',') || id.empty())
            throw DataError("embeddings csv: missing id at line " + std::to_string(lineno));
        m.ids.push_back(id);
        for (std::uint32_t i = 0; i < d; ++i) {
            if (!std::getline(ss, field, ','))
                throw DataError("embeddings csv: short row at line " + std::to_string(lineno));
            try {
                std::size_t pos = 0;
                m.data.push_back(std::stof(field, &pos));
                if (pos != field.size())
                    throw std::invalid_argument(field);
            } catch (const std::exception&) {
                throw DataError("embeddings csv: bad number at line " + std::to_string(lineno));
            }
        }
        if (std::getline(ss, field, ','))
            throw DataError("embeddings csv: long row at line " + std::to_string(lineno));
    }
    return m;
}

namespace {

void put_u16(std::ostream& out, std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i)
        b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

std::uint64_t get_uint(std::istream& in, int bytes, const char* what) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), bytes))
        throw DataError(std::string("embeddings binary: truncated ") + what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

} // namespace

void write_embeddings_binary(const EmbeddingMatrix& m, std::ostream& out) {
    out.write("WTEM", 4);
    put_u16(out, 1);
    put_u32(out, m.d);
    put_u64(out, m.size());
    for (float x : m.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &x, 4);
        put_u32(out, bits);
    }
    for (auto& id : m.ids) {
        put_u32(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
    if (!out)
        throw DataError("embeddings binary: write failed");
}

EmbeddingMatrix read_embeddings_binary(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "WTEM", 4) != 0)
        throw DataError("embeddings binary: bad magic");
    std::uint64_t version = get_uint(in, 2, "version");
    if (version != 1)
        throw DataError("embeddings binary: unsupported version " + std::to_string(version));
    EmbeddingMatrix m;
    m.d = static_cast<std::uint32_t>(get_uint(in, 4, "dimension"));
    std::uint64_t count = get_uint(in, 8, "count");
    if (m.d == 0)
        throw DataError("embeddings binary: zero dimension");
    m.data.resize(count * m.d);
    for (auto& x : m.data) {
        std::uint32_t bits = static_cast<std::uint32_t>(get_uint(in, 4, "vector data"));
        std::memcpy(&x, &bits, 4);
    }
    m.ids.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint32_t len = static_cast<std::uint32_t>(get_uint(in, 4, "id length"));
        std::string id(len, '\0');
        if (len && !in.read(id.data(), len))
            throw DataError("embeddings binary: truncated id");
        m.ids.push_back(std::move(id));
    }
    return m;
}

void save_embeddings(const EmbeddingMatrix& m, const std::string& path) {
    bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    std::ofstream out(path, csv ? std::ios::out : std::ios::out | std::ios::binary);
    if (!out)
        throw DataError("cannot open for writing: " + path);
    if (csv)
        write_embeddings_csv(m, out);
    else
        write_embeddings_binary(m, out);
}

EmbeddingMatrix load_embeddings(const std::string& path) {
    bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    std::ifstream in(path, csv ? std::ios::in : std::ios::in | std::ios::binary);
    if (!in)
        throw DataError("cannot open: " + path);
    return csv ? read_embeddings_csv(in) : read_embeddings_binary(in);
}

} // namespace weakties::embed
