#include "xmln/kb_io.hpp"

#include "xmln/errors.hpp"
#include "xmln/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace xmln {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

// Iterates non-empty, non-comment lines of a TSV file.
template <typename F>
void for_each_tsv_line(const std::string& path, F&& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        fn(line_no, split_tabs(line));
    }
}

GroundAtom parse_atom_fields(KnowledgeBase& kb, const std::vector<std::string>& fields,
                             size_t n_args, const std::string& path, int line_no) {
    const auto pid = kb.schema_id(fields[0]);
    if (!pid)
        throw DataError(path + ":" + std::to_string(line_no) + ": unknown predicate '" +
                        fields[0] + "'");
    const PredicateSchema& schema = kb.schemas()[static_cast<size_t>(*pid)];
    if (static_cast<size_t>(schema.arity) != n_args)
        throw DataError(path + ":" + std::to_string(line_no) + ": predicate " + fields[0] +
                        " expects " + std::to_string(schema.arity) + " arguments, got " +
                        std::to_string(n_args));
    GroundAtom atom;
    atom.predicate = *pid;
    for (size_t i = 1; i <= n_args; ++i) atom.args.push_back(kb.add_constant(fields[i]));
    return atom;
}

int parse_bit(const std::string& s, const std::string& path, int line_no) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw DataError(path + ":" + std::to_string(line_no) + ": expected 0 or 1, got '" + s + "'");
}

} // namespace

KnowledgeBase load_kb(const std::string& facts_path, const std::string& schema_path,
                      const std::string& rules_path, WorldSemantics semantics,
                      const std::vector<std::string>& query_predicates) {
    KnowledgeBase kb;
    for_each_tsv_line(schema_path, [&](int line_no, const std::vector<std::string>& f) {
        if (f.size() != 2)
            throw DataError(schema_path + ":" + std::to_string(line_no) +
                            ": expected `name<TAB>arity`");
        int arity = 0;
        try {
            arity = std::stoi(f[1]);
        } catch (const std::exception&) {
            throw DataError(schema_path + ":" + std::to_string(line_no) + ": bad arity '" +
                            f[1] + "'");
        }
        kb.declare_schema(f[0], arity);
    });

    for_each_tsv_line(facts_path, [&](int line_no, const std::vector<std::string>& f) {
        if (f.size() < 3)
            throw DataError(facts_path + ":" + std::to_string(line_no) + ": too few columns");
        GroundAtom atom = parse_atom_fields(kb, f, f.size() - 2, facts_path, line_no);
        kb.add_fact(atom, parse_bit(f.back(), facts_path, line_no));
    });

    if (!rules_path.empty()) {
        for (Clause& c : parse_rules(read_file(rules_path), kb)) kb.add_clause(std::move(c));
    }

    for (const std::string& name : query_predicates) {
        const auto pid = kb.schema_id(name);
        if (!pid) throw DataError("query predicate not in schema: " + name);
        kb.mark_query_predicate(*pid);
    }

    kb.set_semantics(semantics);
    if (semantics == WorldSemantics::ClosedWorld) apply_closed_world(kb);
    return kb;
}

std::vector<LabeledAtom> load_queries(const std::string& path, KnowledgeBase& kb) {
    std::vector<LabeledAtom> out;
    for_each_tsv_line(path, [&](int line_no, const std::vector<std::string>& f) {
        if (f.size() < 3)
            throw DataError(path + ":" + std::to_string(line_no) + ": too few columns");
        GroundAtom atom = parse_atom_fields(kb, f, f.size() - 2, path, line_no);
        const int label = parse_bit(f.back(), path, line_no);
        kb.mark_query_predicate(atom.predicate);
        out.push_back({std::move(atom), static_cast<int8_t>(label)});
    });
    return out;
}

void apply_closed_world(KnowledgeBase& kb, uint64_t budget) {
    const int m = kb.n_constants();
    uint64_t total = 0;
    std::vector<int> expand;
    for (const PredicateSchema& s : kb.schemas()) {
        if (kb.facts_of_predicate(s.id).empty()) continue;
        if (kb.query_predicates().count(s.id)) continue;  // queries stay open-world
        const GroundingCount gc = grounding_count(s, static_cast<uint64_t>(m));
        if (gc.saturated || total + gc.count > budget)
            throw DataError("closed-world expansion exceeds budget of " +
                            std::to_string(budget) + " groundings");
        total += gc.count;
        expand.push_back(s.id);
    }
    for (int pid : expand) {
        const PredicateSchema& s = kb.schemas()[static_cast<size_t>(pid)];
        for_each_arg_tuple(s.arity, m, [&](const std::vector<int>& args) {
            GroundAtom atom{pid, args};
            if (!kb.is_observed(atom)) kb.add_fact(atom, 0);
        });
    }
}

namespace {

void write_atom_fields(std::ofstream& out, const KnowledgeBase& kb, const GroundAtom& atom) {
    out << kb.schemas()[static_cast<size_t>(atom.predicate)].name;
    for (int c : atom.args) out << '\t' << kb.constants()[static_cast<size_t>(c)].name;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open file for writing: " + path);
    return out;
}

} // namespace

void save_facts(const KnowledgeBase& kb, const std::string& path) {
    std::ofstream out = open_out(path);
    // deterministic order: predicate id, then argument tuple
    std::vector<GroundAtom> atoms;
    atoms.reserve(kb.facts().size());
    for (const auto& [atom, value] : kb.facts()) atoms.push_back(atom);
    std::sort(atoms.begin(), atoms.end());
    for (const GroundAtom& atom : atoms) {
        write_atom_fields(out, kb, atom);
        out << '\t' << static_cast<int>(*kb.fact_value(atom)) << '\n';
    }
}

void save_schema(const KnowledgeBase& kb, const std::string& path) {
    std::ofstream out = open_out(path);
    for (const PredicateSchema& s : kb.schemas()) out << s.name << '\t' << s.arity << '\n';
}

void save_queries(const KnowledgeBase& kb, const std::vector<LabeledAtom>& queries,
                  const std::string& path) {
    std::ofstream out = open_out(path);
    for (const LabeledAtom& q : queries) {
        write_atom_fields(out, kb, q.atom);
        out << '\t' << static_cast<int>(q.label) << '\n';
    }
}

// --- synthetic kinship ------------------------------------------------------

namespace {

// 22 hand-coded kinship formulae, Male/Female are the query predicates.
const char* const kKinshipRules = R"(# kinship rules
Father(x,y) => Male(x)
Mother(x,y) => Female(x)
Husband(x,y) => Male(x)
Wife(x,y) => Female(x)
Son(x,y) => Male(x)
Daughter(x,y) => Female(x)
Brother(x,y) => Male(x)
Sister(x,y) => Female(x)
Husband(x,y) => Wife(y,x)
Wife(x,y) => Husband(y,x)
Father(x,z) & Mother(y,z) => Husband(x,y)
Father(x,z) & Husband(x,y) => Mother(y,z)
Mother(y,z) & Husband(x,y) => Father(x,z)
Son(y,x) => Father(x,y) | Mother(x,y)
Daughter(y,x) => Father(x,y) | Mother(x,y)
Father(x,y) & Male(y) => Son(y,x)
Mother(x,y) & Female(y) => Daughter(y,x)
Brother(x,y) => Brother(y,x) | Sister(y,x)
Sister(x,y) => Brother(y,x) | Sister(y,x)
Brother(x,y) & Brother(y,z) => Brother(x,z)
Sister(x,y) & Sister(y,z) => Sister(x,z)
!Male(x) | !Female(x)
)";

const char* const kKinshipSchemas[] = {
    "Male",        "Female",      "Father", "Mother", "Son",    "Daughter", "Husband", "Wife",
    "Brother",     "Sister",      "Grandfather", "Grandmother", "Uncle",    "Aunt",    "Nephew",
};

std::vector<std::vector<int>> make_subgroups(std::vector<int> members,
                                             std::pair<int, int> size_range, Rng& rng) {
    std::vector<std::vector<int>> groups;
    size_t pos = 0;
    while (pos < members.size()) {
        const int lo = size_range.first, hi = size_range.second;
        size_t size = static_cast<size_t>(lo + rng.uniform_int(hi - lo + 1));
        size = std::min(size, members.size() - pos);
        // avoid a trailing singleton: fold it into the previous group
        if (members.size() - pos - size == 1) ++size;
        groups.emplace_back(members.begin() + static_cast<long>(pos),
                            members.begin() + static_cast<long>(pos + size));
        pos += size;
    }
    return groups;
}

} // namespace

GeneratedKb generate_kinship(const KinshipGenConfig& config) {
    if (config.n_entities < 4) throw ConfigError("generate_kinship: n_entities must be >= 4");
    if (config.subgroup_size.first < 2 || config.subgroup_size.second < config.subgroup_size.first)
        throw ConfigError("generate_kinship: bad subgroup size range");
    Rng rng(config.seed);

    GeneratedKb gen;
    KnowledgeBase& kb = gen.kb;
    const int n = config.n_entities;
    char buf[32];
    for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "P%03d", i);
        kb.add_constant(buf);
    }
    for (const char* name : kKinshipSchemas)
        kb.declare_schema(name, std::string(name) == "Male" || std::string(name) == "Female" ? 1
                                                                                             : 2);
    const int kMale = *kb.schema_id("Male");
    const int kFemale = *kb.schema_id("Female");
    const int kFather = *kb.schema_id("Father");
    const int kMother = *kb.schema_id("Mother");
    const int kSon = *kb.schema_id("Son");
    const int kDaughter = *kb.schema_id("Daughter");
    const int kHusband = *kb.schema_id("Husband");
    const int kWife = *kb.schema_id("Wife");
    const int kBrother = *kb.schema_id("Brother");
    const int kSister = *kb.schema_id("Sister");

    // generations and sibling subgroups
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    rng.shuffle(order);
    const size_t gen1_size = (order.size() + 1) / 2;
    std::vector<int> gen1(order.begin(), order.begin() + static_cast<long>(gen1_size));
    std::vector<int> gen2(order.begin() + static_cast<long>(gen1_size), order.end());
    auto groups1 = make_subgroups(gen1, config.subgroup_size, rng);
    auto groups2 = make_subgroups(gen2, config.subgroup_size, rng);

    std::vector<int8_t> male(static_cast<size_t>(n));
    std::vector<int> subgroup_of(static_cast<size_t>(n), -1);
    for (int c = 0; c < n; ++c) male[static_cast<size_t>(c)] = rng.bernoulli(0.5);
    for (size_t g = 0; g < groups1.size(); ++g)
        for (int c : groups1[g]) subgroup_of[static_cast<size_t>(c)] = static_cast<int>(g);

    // couple entities from different first-generation subgroups
    std::vector<int> males, females;
    for (int c : gen1) (male[static_cast<size_t>(c)] ? males : females).push_back(c);
    rng.shuffle(males);
    rng.shuffle(females);
    std::vector<std::pair<int, int>> couples;  // (husband, wife)
    std::vector<int8_t> taken(females.size(), 0);
    for (int h : males) {
        if (couples.size() >= groups2.size()) break;
        for (size_t i = 0; i < females.size(); ++i) {
            if (taken[i]) continue;
            if (subgroup_of[static_cast<size_t>(females[i])] ==
                subgroup_of[static_cast<size_t>(h)])
                continue;
            taken[i] = 1;
            couples.emplace_back(h, females[i]);
            break;
        }
    }

    // traverse the family tree and record all kinship relations; couple atoms
    // form one unit so the Husband/Wife pairing survives the split
    std::vector<std::vector<std::pair<GroundAtom, int8_t>>> units;
    auto rel = [](int pred, int a, int b) {
        return std::make_pair(GroundAtom{pred, {a, b}}, static_cast<int8_t>(1));
    };
    for (size_t ci = 0; ci < couples.size(); ++ci) {
        const auto [h, w] = couples[ci];
        units.push_back({rel(kHusband, h, w), rel(kWife, w, h)});
        if (ci < groups2.size()) {
            for (int child : groups2[ci]) {
                units.push_back({rel(kFather, h, child)});
                units.push_back({rel(kMother, w, child)});
                const int child_rel = male[static_cast<size_t>(child)] ? kSon : kDaughter;
                units.push_back({rel(child_rel, child, h)});
                units.push_back({rel(child_rel, child, w)});
            }
        }
    }
    auto record_siblings = [&](const std::vector<std::vector<int>>& groups) {
        for (const auto& g : groups)
            for (int a : g)
                for (int b : g) {
                    if (a == b) continue;
                    units.push_back({rel(male[static_cast<size_t>(a)] ? kBrother : kSister, a, b)});
                }
    };
    record_siblings(groups1);
    record_siblings(groups2);

    // keep a seeded fraction of the recorded relations as observations
    rng.shuffle(units);
    const size_t keep = static_cast<size_t>(config.fact_fraction * static_cast<double>(units.size()) + 0.5);
    for (size_t i = 0; i < units.size() && i < keep; ++i) {
        for (const auto& [atom, value] : units[i]) {
            kb.add_fact(atom, value);
            gen.split.facts.emplace_back(atom, value);
        }
    }

    // Male/Female queries over a sampled entity subset
    std::vector<int> qents(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) qents[static_cast<size_t>(i)] = i;
    rng.shuffle(qents);
    const size_t n_query = static_cast<size_t>(
        std::max(1.0, config.query_entity_fraction * static_cast<double>(n) + 0.5));
    qents.resize(std::min(n_query, qents.size()));
    for (size_t i = 0; i < qents.size(); ++i) {
        const int c = qents[i];
        const bool m = male[static_cast<size_t>(c)] != 0;
        auto& bucket = (i < qents.size() / 3) ? gen.split.valid : gen.split.test;
        bucket.push_back({GroundAtom{kMale, {c}}, static_cast<int8_t>(m ? 1 : 0)});
        bucket.push_back({GroundAtom{kFemale, {c}}, static_cast<int8_t>(m ? 0 : 1)});
    }
    kb.mark_query_predicate(kMale);
    kb.mark_query_predicate(kFemale);

    gen.rules_text = kKinshipRules;
    for (Clause& c : parse_rules(gen.rules_text, kb)) kb.add_clause(std::move(c));
    return gen;
}

void save_kinship_dataset(const GeneratedKb& gen, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    save_schema(gen.kb, (base / "schema.tsv").string());
    save_facts(gen.kb, (base / "facts.tsv").string());
    save_queries(gen.kb, gen.split.valid, (base / "valid.tsv").string());
    save_queries(gen.kb, gen.split.test, (base / "test.tsv").string());
    std::ofstream rules = open_out((base / "kinship.rules").string());
    rules << gen.rules_text;
}

KnowledgeBase subsample_kb(const KnowledgeBase& kb, int max_entities, uint64_t seed) {
    if (max_entities < 1) throw ConfigError("subsample_kb: max_entities must be >= 1");
    if (max_entities >= kb.n_constants()) return kb;

    Rng rng(seed);
    std::vector<int> ids(static_cast<size_t>(kb.n_constants()));
    for (int i = 0; i < kb.n_constants(); ++i) ids[static_cast<size_t>(i)] = i;
    rng.shuffle(ids);
    ids.resize(static_cast<size_t>(max_entities));
    std::sort(ids.begin(), ids.end());

    KnowledgeBase out;
    std::vector<int> remap(static_cast<size_t>(kb.n_constants()), -1);
    for (int old_id : ids)
        remap[static_cast<size_t>(old_id)] =
            out.add_constant(kb.constants()[static_cast<size_t>(old_id)].name);
    for (const PredicateSchema& s : kb.schemas()) out.declare_schema(s.name, s.arity);
    for (const Clause& c : kb.clauses()) out.add_clause(c);
    for (int q : kb.query_predicates()) out.mark_query_predicate(q);
    out.set_semantics(kb.semantics());

    std::vector<GroundAtom> atoms;
    for (const auto& [atom, value] : kb.facts()) atoms.push_back(atom);
    std::sort(atoms.begin(), atoms.end());
    for (const GroundAtom& atom : atoms) {
        GroundAtom mapped{atom.predicate, {}};
        bool ok = true;
        for (int c : atom.args) {
            const int nc = remap[static_cast<size_t>(c)];
            if (nc < 0) {
                ok = false;
                break;
            }
            mapped.args.push_back(nc);
        }
        if (ok) out.add_fact(mapped, *kb.fact_value(atom));
    }
    return out;
}

// --- clause selection -------------------------------------------------------

namespace {

// Recursively binds body literals to observed-true facts and counts, for each
// complete body binding, whether some head literal holds.
struct ClauseScorer {
    const KnowledgeBase& kb;
    const Clause& clause;
    std::vector<const Literal*> body;
    std::vector<const Literal*> head;
    std::vector<int> binding;  // -1 = unbound, indexed by clause variable
    int64_t support = 0;
    int64_t satisfied = 0;
    static constexpr int64_t kSupportCap = 200000;

    explicit ClauseScorer(const KnowledgeBase& kb_, const Clause& c) : kb(kb_), clause(c) {
        for (const Literal& lit : c.literals) (lit.negated ? body : head).push_back(&lit);
        binding.assign(c.variables.size(), -1);
    }

    bool head_holds() const {
        for (const Literal* lit : head) {
            GroundAtom atom{lit->predicate, {}};
            bool bound = true;
            for (int v : lit->vars) {
                if (binding[static_cast<size_t>(v)] < 0) {
                    bound = false;
                    break;
                }
                atom.args.push_back(binding[static_cast<size_t>(v)]);
            }
            if (!bound) {
                // unbound head variable: existential check over facts
                for (const GroundAtom& f : kb.facts_of_predicate(lit->predicate)) {
                    if (*kb.fact_value(f) != 1) continue;
                    bool match = true;
                    for (size_t i = 0; i < lit->vars.size(); ++i) {
                        const int b = binding[static_cast<size_t>(lit->vars[i])];
                        if (b >= 0 && f.args[i] != b) {
                            match = false;
                            break;
                        }
                    }
                    if (match) return true;
                }
                continue;
            }
            const auto v = kb.fact_value(atom);
            if (v && *v == 1) return true;
        }
        return false;
    }

    void recurse(size_t bi) {
        if (support >= kSupportCap) return;
        if (bi == body.size()) {
            ++support;
            if (head_holds()) ++satisfied;
            return;
        }
        const Literal* lit = body[bi];
        for (const GroundAtom& f : kb.facts_of_predicate(lit->predicate)) {
            if (*kb.fact_value(f) != 1) continue;
            std::vector<std::pair<int, int>> bound_here;
            bool ok = true;
            for (size_t i = 0; i < lit->vars.size(); ++i) {
                const int var = lit->vars[i];
                const int cur = binding[static_cast<size_t>(var)];
                if (cur < 0) {
                    binding[static_cast<size_t>(var)] = f.args[i];
                    bound_here.emplace_back(var, -1);
                } else if (cur != f.args[i]) {
                    ok = false;
                    break;
                }
            }
            if (ok) recurse(bi + 1);
            for (auto [var, old] : bound_here) binding[static_cast<size_t>(var)] = old;
        }
    }
};

} // namespace

std::vector<Clause> select_clauses(const KnowledgeBase& kb, const std::vector<Clause>& candidates,
                                   int k) {
    std::vector<std::pair<double, size_t>> scored;
    for (size_t i = 0; i < candidates.size(); ++i) {
        ClauseScorer scorer(kb, candidates[i]);
        if (scorer.body.empty()) {
            scored.emplace_back(0.0, i);
            continue;
        }
        scorer.recurse(0);
        const double score =
            static_cast<double>(scorer.satisfied) / (static_cast<double>(scorer.support) + 1.0);
        scored.emplace_back(score, i);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Clause> out;
    for (size_t i = 0; i < scored.size() && static_cast<int>(out.size()) < k; ++i)
        out.push_back(candidates[scored[i].second]);
    return out;
}

} // namespace xmln
