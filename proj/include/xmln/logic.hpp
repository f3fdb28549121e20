#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace xmln {

// An entity. Ids are dense 0..M-1 within a knowledge base.
struct Constant {
    int id;
    std::string name;
};

struct PredicateSchema {
    int id;
    std::string name;
    int arity;
};

// A predicate with all arguments bound; one binary random variable.
// Argument order is significant.
struct GroundAtom {
    int predicate = -1;
    std::vector<int> args;

    bool operator==(const GroundAtom& o) const {
        return predicate == o.predicate && args == o.args;
    }
    bool operator<(const GroundAtom& o) const {
        if (predicate != o.predicate) return predicate < o.predicate;
        return args < o.args;
    }
};

struct AtomHash {
    size_t operator()(const GroundAtom& a) const {
        uint64_t h = 0x9e3779b97f4a7c15ull ^ static_cast<uint64_t>(a.predicate);
        for (int v : a.args) {
            h ^= static_cast<uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return static_cast<size_t>(h);
    }
};

// One disjunct of a clause. `vars` are indices into the owning clause's
// variable list.
struct Literal {
    int predicate;
    std::vector<int> vars;
    bool negated = false;

    bool operator==(const Literal& o) const {
        return predicate == o.predicate && vars == o.vars && negated == o.negated;
    }
};

// Weighted disjunction of literals over shared variables (a formula f with
// confidence w_f). Equality is structural; the name is just a label.
struct Clause {
    std::string name;
    std::vector<std::string> variables;
    std::vector<Literal> literals;
    double weight = 1.0;

    bool operator==(const Clause& o) const {
        return variables == o.variables && literals == o.literals && weight == o.weight;
    }
};

enum class WorldSemantics { OpenWorld, ClosedWorld };

// K = (C, R, O): entities, predicate schemas, observed {0,1} facts, plus the
// clause list and the world-semantics mode. Mutating members are for
// construction; treat as immutable afterwards.
class KnowledgeBase {
  public:
    int add_constant(const std::string& name);            // idempotent on the name
    int require_constant(const std::string& name) const;  // DataError if unknown
    std::optional<int> constant_id(const std::string& name) const;

    int declare_schema(const std::string& name, int arity);
    std::optional<int> schema_id(const std::string& name) const;

    void add_clause(Clause c) { clauses_.push_back(std::move(c)); }

    // Duplicate facts with the same value are ignored; conflicting values are
    // a DataError.
    void add_fact(const GroundAtom& atom, int value);
    std::optional<int> fact_value(const GroundAtom& atom) const;
    bool is_observed(const GroundAtom& atom) const { return facts_.count(atom) > 0; }

    void validate_atom(const GroundAtom& atom) const;

    const std::vector<Constant>& constants() const { return constants_; }
    const std::vector<PredicateSchema>& schemas() const { return schemas_; }
    const std::vector<Clause>& clauses() const { return clauses_; }
    const std::unordered_map<GroundAtom, int8_t, AtomHash>& facts() const { return facts_; }
    int n_constants() const { return static_cast<int>(constants_.size()); }
    int n_schemas() const { return static_cast<int>(schemas_.size()); }
    int max_arity() const;

    WorldSemantics semantics() const { return semantics_; }
    void set_semantics(WorldSemantics s) { semantics_ = s; }

    const std::set<int>& query_predicates() const { return query_predicates_; }
    void mark_query_predicate(int schema) { query_predicates_.insert(schema); }

    // Facts grouped by predicate, in insertion order (sampler support).
    const std::vector<GroundAtom>& facts_of_predicate(int schema) const;

    std::string atom_to_string(const GroundAtom& atom) const;

  private:
    std::vector<Constant> constants_;
    std::unordered_map<std::string, int> constant_ids_;
    std::vector<PredicateSchema> schemas_;
    std::unordered_map<std::string, int> schema_ids_;
    std::vector<Clause> clauses_;
    std::unordered_map<GroundAtom, int8_t, AtomHash> facts_;
    std::vector<std::vector<GroundAtom>> facts_by_predicate_;
    std::set<int> query_predicates_;
    WorldSemantics semantics_ = WorldSemantics::OpenWorld;
};

// --- rule DSL -------------------------------------------------------------
//
// One clause per line, `#` comments. A line is either a disjunction of
// literals `[!]Name(v1,...,vk)` joined by `|`, or an implication
// `L1 & L2 => H1 | H2` which desugars by De Morgan into
// `!L1 | !L2 | H1 | H2`. An optional `weight: <w>` prefix sets w_f
// (default 1). Variables are collected left to right. Predicates must be
// declared in the knowledge base; `+w` template arguments are rejected as
// unsupported.
std::vector<Clause> parse_rules(std::string_view text, const KnowledgeBase& kb);

// Canonical disjunctive form, inverse of parse_rules for a single clause.
std::string print_clause(const Clause& clause, const KnowledgeBase& kb);

// Instantiates the clause's literals in order under a complete binding.
// Returns (atom, negated) pairs. Missing binding is a DataError.
std::vector<std::pair<GroundAtom, bool>> ground_clause(
    const Clause& clause, const std::unordered_map<std::string, int>& binding);

// Engine form: binding indexed by the clause's variable order.
std::vector<std::pair<GroundAtom, bool>> ground_clause(const Clause& clause,
                                                       std::span<const int> binding);

struct GroundingCount {
    uint64_t count = 0;
    bool saturated = false;  // true when M^arity overflowed uint64
};

// Visits all M^arity argument tuples in lexicographic order.
template <typename F>
void for_each_arg_tuple(int arity, int n_entities, F&& fn) {
    if (n_entities <= 0) return;
    std::vector<int> args(static_cast<size_t>(arity), 0);
    while (true) {
        fn(static_cast<const std::vector<int>&>(args));
        int pos = arity - 1;
        while (pos >= 0 && ++args[static_cast<size_t>(pos)] == n_entities) {
            args[static_cast<size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
}

// Number of groundings M^arity, saturating on overflow.
GroundingCount grounding_count(const PredicateSchema& schema, uint64_t n_entities);

} // namespace xmln
