#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "renki/kg.hpp"
#include "renki/synthetic.hpp"

namespace renki::io {

// Entity or relation vocabulary. Indices are assigned in first-seen order.
// Categories are optional per-entity tags used by negative sampling.
struct Vocabulary {
    std::vector<std::string> names;
    std::unordered_map<std::string, int> index;
    std::vector<int> categories;               // aligned with names; empty if untagged
    std::vector<std::string> category_names;   // category id -> label

    int add(const std::string& name);
    int lookup(const std::string& name) const;  // -1 if unknown
    std::size_t size() const { return names.size(); }
};

struct TripleData {
    std::vector<Triple> triples;
    Vocabulary entities;
    Vocabulary relations;
    std::map<RelationId, std::size_t> counts_per_relation;
};

// Triple file: tab-separated head-id, relation-id, tail-id with optional
// label and sigma columns; '#' starts a comment line. The one-argument form
// builds vocabularies in first-seen order; the three-argument form resolves
// ids against existing vocabularies and rejects unknown ones.
TripleData load_triples(const std::filesystem::path& path);
TripleData load_triples(const std::filesystem::path& path, const Vocabulary& entities,
                        const Vocabulary& relations);
void save_triples(const std::filesystem::path& path, std::span<const Triple> triples,
                  const Vocabulary& entities, const Vocabulary& relations);

// Vocabulary file: one "name<TAB>category" line per entry (category
// optional).
Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);

// Embedding file: header "D <dim>", then "entity-id v1 ... vD" lines.
// Loading requires every vocabulary entity to be covered.
Matrix load_embedding_file(const std::filesystem::path& path, const Vocabulary& entities);
void save_embedding_file(const std::filesystem::path& path, const Matrix& vectors,
                         const Vocabulary& entities);

// Flat key = value configuration text; '#' comments, later keys win.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> load_key_value_file(const std::filesystem::path& path);

// Dataset bundle: <base>.triples.tsv, <base>.entities.tsv,
// <base>.relations.tsv and a <base>.truth.json sidecar carrying the
// generator's ground-truth parameters.
void save_dataset(const std::filesystem::path& base, const SyntheticDataset& dataset);
SyntheticDataset load_dataset(const std::filesystem::path& base);
Vocabulary synthetic_entity_vocabulary(int entities);
Vocabulary synthetic_relation_vocabulary(int relations);

// Score models serialize to JSON.
void save_model(const std::filesystem::path& path, const ScoreModel& model);
ScoreModel load_model(const std::filesystem::path& path);

}  // namespace renki::io
