#pragma once

#include "xmln/logic.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace xmln {

struct LabeledAtom {
    GroundAtom atom;
    int8_t label;  // ground-truth value used for evaluation only
};

// Facts plus disjoint train/valid/test query lists. No query atom appears
// among the facts.
struct DatasetSplit {
    std::vector<std::pair<GroundAtom, int8_t>> facts;
    std::vector<LabeledAtom> train;
    std::vector<LabeledAtom> valid;
    std::vector<LabeledAtom> test;
};

// Schema file: `name<TAB>arity` lines. Facts file: `pred<TAB>c1...<TAB>ck<TAB>{0|1}`.
// Query files share the fact layout with the trailing column read as a label.
// Closed-world expansion runs last and never touches query predicates.
KnowledgeBase load_kb(const std::string& facts_path, const std::string& schema_path,
                      const std::string& rules_path, WorldSemantics semantics,
                      const std::vector<std::string>& query_predicates = {});

// Loads a query TSV against an existing KB; unseen constants are added.
std::vector<LabeledAtom> load_queries(const std::string& path, KnowledgeBase& kb);

// For closed-world mode: every unobserved grounding of a predicate that has
// observations and is not a query predicate becomes an explicit 0 fact.
// Throws DataError if the expansion would exceed `budget` fact entries.
void apply_closed_world(KnowledgeBase& kb, uint64_t budget = 5'000'000);

void save_facts(const KnowledgeBase& kb, const std::string& path);
void save_schema(const KnowledgeBase& kb, const std::string& path);
void save_queries(const KnowledgeBase& kb, const std::vector<LabeledAtom>& queries,
                  const std::string& path);

struct KinshipGenConfig {
    int n_entities = 62;
    uint64_t seed = 0;
    std::pair<int, int> subgroup_size = {2, 3};
    double fact_fraction = 0.8;          // recorded relations kept as observations
    double query_entity_fraction = 0.3;  // entities receiving Male/Female queries
};

struct GeneratedKb {
    KnowledgeBase kb;
    DatasetSplit split;
    std::string rules_text;
};

// Synthetic two-generation kinship world: sibling subgroups per generation,
// cross-subgroup couples, each couple assigned a second-generation subgroup
// as children. The family tree is traversed to record Husband/Wife,
// Father/Mother, Son/Daughter and sibling relations; couple atoms are kept or
// dropped together so Husband(x,y) always co-occurs with Wife(y,x). Queries
// are Male/Female atoms for a sampled entity subset.
GeneratedKb generate_kinship(const KinshipGenConfig& config);

// Writes schema.tsv, facts.tsv, valid.tsv, test.tsv and kinship.rules.
void save_kinship_dataset(const GeneratedKb& gen, const std::string& dir);

// Induced sub-KB on a random entity subset; facts with any argument outside
// the subset are dropped, constants renumbered densely.
KnowledgeBase subsample_kb(const KnowledgeBase& kb, int max_entities, uint64_t seed);

// Ranks clauses by empirical confidence on the KB facts (fraction of
// body-satisfying groundings whose head is observed true) and returns the
// top k. Mirrors confidence-based rule selection for completion runs.
std::vector<Clause> select_clauses(const KnowledgeBase& kb, const std::vector<Clause>& candidates,
                                   int k);

} // namespace xmln
