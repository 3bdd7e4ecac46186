#include "weakties/synth.hpp"

#include "weakties/errors.hpp"
#include "weakties/rng.hpp"
#include "weakties/timeutil.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace weakties::synth {

namespace {

constexpr std::int64_t kDay = 86400;

std::string project_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "proj-%04d", i);
    return buf;
}

std::string dev_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "dev-%05d", i);
    return buf;
}

std::string package_id(int cluster, int i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "pkg-c%02d-%02d", cluster, i);
    return buf;
}

// Interaction timestamps sit in three bands before the first own commit, so
// 6/12/24-month windows capture strictly growing slices.
std::int64_t band_offset(std::mt19937_64& gen) {
    double r = rng::uniform_double(gen);
    auto in = [&](double lo_d, double hi_d) {
        return static_cast<std::int64_t>((lo_d + rng::uniform_double(gen) * (hi_d - lo_d)) * kDay);
    };
    if (r < 0.6)
        return in(5, 150);
    if (r < 0.8)
        return in(200, 330);
    return in(390, 690);
}

// Sample `want` distinct values from [0, n) excluding `self` (pass n for none).
std::vector<int> sample_distinct(std::mt19937_64& gen, int n, int want, int self) {
    std::vector<int> out;
    int avail = n - (self >= 0 && self < n ? 1 : 0);
    want = std::min(want, avail);
    while (static_cast<int>(out.size()) < want) {
        int c = static_cast<int>(rng::uniform_index(gen, static_cast<std::uint64_t>(n)));
        if (c == self || std::find(out.begin(), out.end(), c) != out.end())
            continue;
        out.push_back(c);
    }
    return out;
}

} // namespace

SyntheticCorpus generate_synthetic_corpus(const SynthSpec& spec) {
    if (spec.n_projects <= 0 || spec.cluster_count <= 0 || spec.n_devs < 0)
        throw ConfigError("generate_synthetic_corpus: sizes must be positive");
    if (spec.cluster_count > spec.n_projects)
        throw ConfigError("generate_synthetic_corpus: more clusters than projects");
    if (spec.planted_effect < 0)
        throw ConfigError("generate_synthetic_corpus: planted_effect must be non-negative");

    const int P = spec.n_projects;
    const int K = spec.cluster_count;
    const int D = spec.n_devs > 0 ? spec.n_devs : P;
    constexpr int kPackagesPerCluster = 30;
    constexpr int kGroupSize = 5; // dense commit-target groups inside a cluster

    SyntheticCorpus out;

    // Cluster membership round-robin: cluster c owns projects {c, c+K, ...}
    // and developers {c, c+K, ...}; both pools are index-addressable.
    std::vector<std::vector<int>> cluster_projects(K), cluster_devs(K);
    for (int i = 0; i < P; ++i)
        cluster_projects[i % K].push_back(i);
    for (int i = 0; i < D; ++i)
        cluster_devs[i % K].push_back(i);
    for (int c = 0; c < K; ++c)
        if (cluster_devs[c].empty())
            throw ConfigError("generate_synthetic_corpus: developer pool leaves a cluster empty");

    const std::int64_t created_lo = time::parse_rfc3339_utc("2012-01-01T00:00:00Z");
    const std::int64_t created_hi = time::parse_rfc3339_utc("2020-12-31T00:00:00Z");

    // Two independent project traits: `reach` raises cross-cluster mixing in
    // every channel (the shared-diversity factor), `bridge` raises it in the
    // star channel only (the weak-tie factor). The star propensity blends
    // them; imports couple to that blend, so teams that star across clusters
    // are exactly the ones importing cross-cluster package pairs.
    std::vector<double> reach(P), bridge(P), star_prop(P);
    std::vector<std::int64_t> created(P);
    std::vector<bool> fork(P), single_import(P), star_quiet(P);

    for (int i = 0; i < P; ++i) {
        std::mt19937_64 gen(rng::derive_seed(spec.seed, 0xA11, static_cast<std::uint64_t>(i)));
        reach[i] = rng::uniform_double(gen);
        bridge[i] = rng::uniform_double(gen);
        star_prop[i] = 0.08 + 0.10 * reach[i] + 0.55 * bridge[i];
        created[i] = created_lo + static_cast<std::int64_t>(
                                      rng::uniform_double(gen) *
                                      static_cast<double>(created_hi - created_lo));
        fork[i] = rng::uniform_double(gen) < 0.02;
        single_import[i] = rng::uniform_double(gen) < 0.05;  // innovativeness undefined
        star_quiet[i] = rng::uniform_double(gen) < 0.05;     // star diversity undefined
        out.latent[project_id(i)] = star_prop[i];
    }

    std::int64_t total_commits_meta = 0;
    for (int i = 0; i < P; ++i) {
        const int c = i % K;
        std::mt19937_64 gen(rng::derive_seed(spec.seed, 0xB22, static_cast<std::uint64_t>(i)));
        const std::string pid = project_id(i);

        int team_size = 1 + static_cast<int>(rng::uniform_index(gen, 3));
        std::vector<int> team = sample_distinct(
            gen, static_cast<int>(cluster_devs[c].size()), team_size, -1);

        // The commit-target group: this project's block of kGroupSize
        // neighbors inside the cluster.
        const auto& peers = cluster_projects[c];
        const int my_pos = i / K;
        const int group_lo = (my_pos / kGroupSize) * kGroupSize;
        const int group_n = std::min<int>(kGroupSize, static_cast<int>(peers.size()) - group_lo);

        std::int64_t project_commits = 0;
        for (int t : team) {
            const std::string did = dev_id(cluster_devs[c][static_cast<std::size_t>(t)]);
            std::int64_t first_commit =
                created[i] + static_cast<std::int64_t>(rng::uniform_index(gen, 60)) * kDay;

            // Own commits make the developer core under either rule.
            int n_commits = 10 + static_cast<int>(rng::uniform_index(gen, 11));
            std::int64_t ts = first_commit;
            for (int k = 0; k < n_commits; ++k) {
                out.events.events.push_back(
                    {did, pid, corpus::InteractionKind::Commit, ts});
                ts += kDay * (2 + static_cast<std::int64_t>(rng::uniform_index(gen, 4)));
            }
            project_commits += n_commits;

            auto emit = [&](corpus::InteractionKind kind, int target) {
                out.events.events.push_back(
                    {did, project_id(target), kind, first_commit - band_offset(gen)});
            };
            auto pick_other_cluster = [&]() {
                int oc = static_cast<int>(rng::uniform_index(gen, static_cast<std::uint64_t>(K - 1)));
                if (oc >= c)
                    ++oc;
                const auto& pool = cluster_projects[oc];
                return pool[rng::uniform_index(gen, pool.size())];
            };

            // Commit interactions: dense in-group, cross-cluster spillover
            // scaled by the shared trait.
            for (int g : sample_distinct(gen, group_n, 3, my_pos - group_lo)) {
                int target = peers[static_cast<std::size_t>(group_lo + g)];
                if (rng::uniform_double(gen) < 0.25 * reach[i])
                    target = pick_other_cluster();
                if (target != i)
                    emit(corpus::InteractionKind::Commit, target);
            }
            // Issue interactions: anywhere in the cluster, same shared trait.
            for (int g : sample_distinct(gen, static_cast<int>(peers.size()), 3, my_pos)) {
                int target = peers[static_cast<std::size_t>(g)];
                if (rng::uniform_double(gen) < 0.30 * reach[i])
                    target = pick_other_cluster();
                if (target != i)
                    emit(corpus::InteractionKind::Issue, target);
            }
            // Stars: cross-cluster at the blended star propensity, the only
            // channel the bridge trait touches.
            int n_stars = star_quiet[i] ? static_cast<int>(rng::uniform_index(gen, 2)) : 5;
            std::vector<int> starred;
            while (static_cast<int>(starred.size()) < n_stars) {
                int target;
                if (rng::uniform_double(gen) < star_prop[i]) {
                    target = pick_other_cluster();
                } else {
                    target = peers[rng::uniform_index(gen, peers.size())];
                }
                if (target == i ||
                    std::find(starred.begin(), starred.end(), target) != starred.end())
                    continue;
                starred.push_back(target);
                emit(corpus::InteractionKind::Star, target);
            }
        }

        corpus::ProjectRecord rec;
        rec.project_id = pid;
        rec.created_at = created[i];
        rec.is_fork = fork[i];
        rec.n_python_files = 11 + static_cast<std::int64_t>(rng::uniform_index(gen, 50));
        rec.total_commits = project_commits;
        rec.owner_kind = rng::uniform_double(gen) < 0.3 ? corpus::OwnerKind::Organization
                                                        : corpus::OwnerKind::Individual;
        rec.owner_stars_at_creation =
            static_cast<std::int64_t>(std::expm1(rng::uniform_double(gen) * 6.0));
        out.projects.push_back(std::move(rec));
        total_commits_meta += project_commits;

        // Imports: mostly own-cluster packages; cross-cluster picks scale with
        // planted_effect * star propensity, the planted association.
        corpus::ImportSequence seq;
        seq.project_id = pid;
        int n_pkg = single_import[i] ? 1 : 6 + static_cast<int>(rng::uniform_index(gen, 5));
        double cross_p = std::min(0.04 + spec.planted_effect * star_prop[i], 0.9);
        while (static_cast<int>(seq.packages.size()) < n_pkg) {
            int pc = c;
            if (K > 1 && rng::uniform_double(gen) < cross_p) {
                pc = static_cast<int>(rng::uniform_index(gen, static_cast<std::uint64_t>(K - 1)));
                if (pc >= c)
                    ++pc;
            }
            std::string pkg = package_id(pc, static_cast<int>(rng::uniform_index(gen, kPackagesPerCluster)));
            if (std::find(seq.packages.begin(), seq.packages.end(), pkg) == seq.packages.end())
                seq.packages.push_back(pkg);
        }
        out.imports.push_back(std::move(seq));
    }
    (void)total_commits_meta;

    // Bot accounts: half match the "-bot" suffix heuristic, half need the
    // denylist; all of them only star, loudly.
    {
        std::mt19937_64 gen(rng::derive_seed(spec.seed, 0xC33));
        int n_bots = std::max(2, P / 100);
        for (int b = 0; b < n_bots; ++b) {
            char buf[24];
            if (b % 2 == 0)
                std::snprintf(buf, sizeof buf, "auto-%d-bot", b);
            else
                std::snprintf(buf, sizeof buf, "svc-daemon-%d", b);
            std::string bid = buf;
            out.bot_actors.push_back(bid);
            for (int s = 0; s < 20; ++s) {
                int target = static_cast<int>(rng::uniform_index(gen, static_cast<std::uint64_t>(P)));
                std::int64_t ts = created_lo + static_cast<std::int64_t>(
                                                   rng::uniform_double(gen) *
                                                   static_cast<double>(created_hi - created_lo));
                out.events.events.push_back(
                    {bid, project_id(target), corpus::InteractionKind::Star, ts});
            }
        }
    }

    // Awesome list: top 2% by star propensity, the planted analogue of
    // curated lists.
    {
        std::vector<int> order(static_cast<std::size_t>(P));
        for (int i = 0; i < P; ++i)
            order[static_cast<std::size_t>(i)] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (star_prop[a] != star_prop[b])
                return star_prop[a] > star_prop[b];
            return a < b;
        });
        int n_awesome = std::max(1, P / 50);
        for (int r = 0; r < n_awesome; ++r)
            out.awesome.push_back(project_id(order[static_cast<std::size_t>(r)]));
        std::sort(out.awesome.begin(), out.awesome.end());
    }

    std::sort(out.events.events.begin(), out.events.events.end(),
              [](const corpus::InteractionEvent& a, const corpus::InteractionEvent& b) {
                  if (a.timestamp != b.timestamp)
                      return a.timestamp < b.timestamp;
                  if (a.actor_id != b.actor_id)
                      return a.actor_id < b.actor_id;
                  if (a.project_id != b.project_id)
                      return a.project_id < b.project_id;
                  return static_cast<int>(a.kind) < static_cast<int>(b.kind);
              });
    return out;
}

void write_corpus(const SyntheticCorpus& corpus, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw DataError("cannot create directory: " + dir);

    auto open = [&](const char* name) {
        std::ofstream out(fs::path(dir) / name);
        if (!out)
            throw DataError(std::string("cannot open for writing: ") + name);
        return out;
    };

    {
        auto f = open("events.jsonl");
        corpus::write_events(corpus.events, f);
    }
    {
        auto f = open("projects.csv");
        corpus::write_projects_csv(corpus.projects, f);
    }
    {
        auto f = open("imports.jsonl");
        corpus::write_imports_jsonl(corpus.imports, f);
    }
    {
        auto f = open("bots.txt");
        f << "# synthetic bot accounts\n";
        for (auto& b : corpus.bot_actors)
            f << b << '\n';
    }
    {
        auto f = open("awesome.txt");
        for (auto& p : corpus.awesome)
            f << p << '\n';
    }
}

} // namespace weakties::synth
