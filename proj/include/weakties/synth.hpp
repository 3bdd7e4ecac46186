#pragma once

#include "weakties/corpus.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace weakties::synth {

// Generator for verification corpora with controllable structure:
//  - commit interactions target small dense groups inside a project's cluster
//    (high transitivity), issue interactions target the whole cluster
//    (moderate), stars reach across clusters (low);
//  - two independent project traits drive cross-cluster mixing: a shared one
//    for every channel and a star-only one, so the diversity columns carry a
//    common factor plus a star-specific contrast;
//  - the blend of the two (the star propensity, exported as `latent`) sets —
//    only scaled by planted_effect — how often the project's imports pair
//    packages from different clusters. With planted_effect = 0 the import
//    mixing is constant, so diversity and innovativeness are unrelated by
//    construction.
struct SynthSpec {
    int n_projects = 2000;
    int n_devs = 0;        // 0: one developer per project in the pool
    int cluster_count = 8;
    double planted_effect = 0.0;
    std::uint64_t seed = 0;
};

struct SyntheticCorpus {
    corpus::EventLog events;               // chronological
    corpus::ProjectCatalog projects;
    std::vector<corpus::ImportSequence> imports;
    std::vector<std::string> bot_actors;   // for bots.txt
    std::vector<std::string> awesome;      // top 2% by latent, for awesome.txt
    std::map<std::string, double> latent;  // project -> cross-cluster propensity
};

SyntheticCorpus generate_synthetic_corpus(const SynthSpec& spec);

// events.jsonl, projects.csv, imports.jsonl, bots.txt, awesome.txt under dir.
void write_corpus(const SyntheticCorpus& corpus, const std::string& dir);

} // namespace weakties::synth
