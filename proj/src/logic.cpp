#include "xmln/logic.hpp"

#include "xmln/errors.hpp"

#include <cctype>
#include <cstdio>

namespace xmln {

int KnowledgeBase::add_constant(const std::string& name) {
    auto it = constant_ids_.find(name);
    if (it != constant_ids_.end()) return it->second;
    const int id = static_cast<int>(constants_.size());
    constants_.push_back({id, name});
    constant_ids_[name] = id;
    return id;
}

int KnowledgeBase::require_constant(const std::string& name) const {
    auto it = constant_ids_.find(name);
    if (it == constant_ids_.end()) throw DataError("unknown constant: " + name);
    return it->second;
}

std::optional<int> KnowledgeBase::constant_id(const std::string& name) const {
    auto it = constant_ids_.find(name);
    if (it == constant_ids_.end()) return std::nullopt;
    return it->second;
}

int KnowledgeBase::declare_schema(const std::string& name, int arity) {
    if (arity < 1) throw DataError("predicate " + name + ": arity must be >= 1");
    auto it = schema_ids_.find(name);
    if (it != schema_ids_.end()) {
        if (schemas_[static_cast<size_t>(it->second)].arity != arity)
            throw DataError("predicate " + name + " redeclared with different arity");
        return it->second;
    }
    const int id = static_cast<int>(schemas_.size());
    schemas_.push_back({id, name, arity});
    schema_ids_[name] = id;
    facts_by_predicate_.emplace_back();
    return id;
}

std::optional<int> KnowledgeBase::schema_id(const std::string& name) const {
    auto it = schema_ids_.find(name);
    if (it == schema_ids_.end()) return std::nullopt;
    return it->second;
}

void KnowledgeBase::validate_atom(const GroundAtom& atom) const {
    if (atom.predicate < 0 || atom.predicate >= n_schemas())
        throw DataError("atom references unknown predicate id " + std::to_string(atom.predicate));
    const PredicateSchema& s = schemas_[static_cast<size_t>(atom.predicate)];
    if (static_cast<int>(atom.args.size()) != s.arity)
        throw DataError("atom of " + s.name + ": expected " + std::to_string(s.arity) +
                        " arguments, got " + std::to_string(atom.args.size()));
    for (int c : atom.args)
        if (c < 0 || c >= n_constants())
            throw DataError("atom of " + s.name + " references unknown constant id " +
                            std::to_string(c));
}

void KnowledgeBase::add_fact(const GroundAtom& atom, int value) {
    if (value != 0 && value != 1) throw DataError("fact value must be 0 or 1");
    validate_atom(atom);
    auto [it, inserted] = facts_.emplace(atom, static_cast<int8_t>(value));
    if (!inserted) {
        if (it->second != value)
            throw DataError("conflicting duplicate fact: " + atom_to_string(atom));
        return;
    }
    facts_by_predicate_[static_cast<size_t>(atom.predicate)].push_back(atom);
}

std::optional<int> KnowledgeBase::fact_value(const GroundAtom& atom) const {
    auto it = facts_.find(atom);
    if (it == facts_.end()) return std::nullopt;
    return static_cast<int>(it->second);
}

int KnowledgeBase::max_arity() const {
    int m = 0;
    for (const auto& s : schemas_) m = std::max(m, s.arity);
    return m;
}

const std::vector<GroundAtom>& KnowledgeBase::facts_of_predicate(int schema) const {
    static const std::vector<GroundAtom> empty;
    if (schema < 0 || schema >= n_schemas()) return empty;
    return facts_by_predicate_[static_cast<size_t>(schema)];
}

std::string KnowledgeBase::atom_to_string(const GroundAtom& atom) const {
    std::string s = schemas_[static_cast<size_t>(atom.predicate)].name + "(";
    for (size_t i = 0; i < atom.args.size(); ++i) {
        if (i) s += ",";
        s += constants_[static_cast<size_t>(atom.args[i])].name;
    }
    return s + ")";
}

// --- rule DSL parser --------------------------------------------------------

namespace {

struct RawLiteral {
    bool negated;
    std::string predicate;
    std::vector<std::string> args;
    int line, col;
};

class LineLexer {
  public:
    LineLexer(std::string_view text, int line) : text_(text), line_(line) {}

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }

    bool done() {
        skip_ws();
        return pos_ >= text_.size();
    }

    int col() const { return static_cast<int>(pos_) + 1; }
    int line() const { return line_; }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool consume(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!consume(c)) fail(std::string("expected '") + c + "' " + what);
    }

    std::string ident() {
        skip_ws();
        const size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        if (pos_ == start) fail("expected identifier");
        return std::string(text_.substr(start, pos_ - start));
    }

    double number() {
        skip_ws();
        const size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                text_[pos_] == '-' || text_[pos_] == '+' || text_[pos_] == 'e' ||
                text_[pos_] == 'E'))
            ++pos_;
        if (pos_ == start) fail("expected number");
        const std::string s(text_.substr(start, pos_ - start));
        try {
            size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            pos_ = start;
            fail("malformed number '" + s + "'");
        }
        return 0.0;
    }

    [[noreturn]] void fail(const std::string& msg) { throw ParseError(line_, col(), msg); }

  private:
    std::string_view text_;
    size_t pos_ = 0;
    int line_;
};

RawLiteral parse_literal(LineLexer& lex) {
    RawLiteral lit;
    lex.skip_ws();
    lit.line = lex.line();
    lit.col = lex.col();
    lit.negated = lex.consume('!');
    lit.predicate = lex.ident();
    lex.expect('(', "after predicate name");
    while (true) {
        if (lex.consume('+')) {
            const std::string w = lex.ident();
            throw ParseError(lex.line(), lex.col(),
                             "unsupported feature: per-constant weight template '+" + w + "'");
        }
        lit.args.push_back(lex.ident());
        if (lex.consume(',')) continue;
        lex.expect(')', "to close argument list");
        break;
    }
    return lit;
}

std::vector<RawLiteral> parse_literal_chain(LineLexer& lex, char joiner) {
    std::vector<RawLiteral> lits;
    lits.push_back(parse_literal(lex));
    while (lex.consume(joiner)) lits.push_back(parse_literal(lex));
    return lits;
}

Clause assemble(const std::vector<RawLiteral>& raw, double weight, const std::string& name,
                const KnowledgeBase& kb) {
    Clause clause;
    clause.name = name;
    clause.weight = weight;
    std::unordered_map<std::string, int> var_index;
    for (const RawLiteral& rl : raw) {
        const auto pid = kb.schema_id(rl.predicate);
        if (!pid) throw ParseError(rl.line, rl.col, "unknown predicate '" + rl.predicate + "'");
        const PredicateSchema& schema = kb.schemas()[static_cast<size_t>(*pid)];
        if (static_cast<int>(rl.args.size()) != schema.arity)
            throw ParseError(rl.line, rl.col,
                             "arity mismatch for " + rl.predicate + ": declared " +
                                 std::to_string(schema.arity) + ", got " +
                                 std::to_string(rl.args.size()));
        Literal lit;
        lit.predicate = *pid;
        lit.negated = rl.negated;
        for (const std::string& v : rl.args) {
            auto [it, inserted] = var_index.emplace(v, static_cast<int>(clause.variables.size()));
            if (inserted) clause.variables.push_back(v);
            lit.vars.push_back(it->second);
        }
        clause.literals.push_back(std::move(lit));
    }
    return clause;
}

} // namespace

std::vector<Clause> parse_rules(std::string_view text, const KnowledgeBase& kb) {
    std::vector<Clause> clauses;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        const size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        const size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        LineLexer lex(line, line_no);
        if (lex.done()) continue;

        double weight = 1.0;
        // "weight:" prefix; a predicate named weight would be followed by '('
        {
            LineLexer probe = lex;
            if (probe.consume("weight") && probe.consume(':')) {
                weight = probe.number();
                lex = probe;
            }
        }

        std::vector<RawLiteral> body = parse_literal_chain(lex, '&');
        std::vector<RawLiteral> raw;
        if (lex.consume("=>")) {
            for (RawLiteral& rl : body) {
                rl.negated = !rl.negated;
                raw.push_back(std::move(rl));
            }
            std::vector<RawLiteral> head = parse_literal_chain(lex, '|');
            for (RawLiteral& rl : head) raw.push_back(std::move(rl));
        } else {
            if (body.size() > 1)
                lex.fail("'&' only allowed on the left of '=>'");
            raw = std::move(body);
            while (lex.consume('|')) raw.push_back(parse_literal(lex));
        }
        if (!lex.done()) lex.fail("trailing input");

        clauses.push_back(
            assemble(raw, weight, "f" + std::to_string(clauses.size()), kb));
    }
    return clauses;
}

std::string print_clause(const Clause& clause, const KnowledgeBase& kb) {
    char wbuf[40];
    std::snprintf(wbuf, sizeof wbuf, "%.17g", clause.weight);
    std::string out = std::string("weight: ") + wbuf + " ";
    for (size_t i = 0; i < clause.literals.size(); ++i) {
        const Literal& lit = clause.literals[i];
        if (i) out += " | ";
        if (lit.negated) out += "!";
        out += kb.schemas()[static_cast<size_t>(lit.predicate)].name + "(";
        for (size_t j = 0; j < lit.vars.size(); ++j) {
            if (j) out += ",";
            out += clause.variables[static_cast<size_t>(lit.vars[j])];
        }
        out += ")";
    }
    return out;
}

std::vector<std::pair<GroundAtom, bool>> ground_clause(const Clause& clause,
                                                       std::span<const int> binding) {
    if (binding.size() != clause.variables.size())
        throw DataError("ground_clause: binding covers " + std::to_string(binding.size()) +
                        " of " + std::to_string(clause.variables.size()) + " variables");
    std::vector<std::pair<GroundAtom, bool>> out;
    out.reserve(clause.literals.size());
    for (const Literal& lit : clause.literals) {
        GroundAtom atom;
        atom.predicate = lit.predicate;
        atom.args.reserve(lit.vars.size());
        for (int v : lit.vars) atom.args.push_back(binding[static_cast<size_t>(v)]);
        out.emplace_back(std::move(atom), lit.negated);
    }
    return out;
}

std::vector<std::pair<GroundAtom, bool>> ground_clause(
    const Clause& clause, const std::unordered_map<std::string, int>& binding) {
    std::vector<int> by_index(clause.variables.size());
    for (size_t i = 0; i < clause.variables.size(); ++i) {
        auto it = binding.find(clause.variables[i]);
        if (it == binding.end())
            throw DataError("ground_clause: missing binding for variable '" +
                            clause.variables[i] + "'");
        by_index[i] = it->second;
    }
    return ground_clause(clause, by_index);
}

GroundingCount grounding_count(const PredicateSchema& schema, uint64_t n_entities) {
    GroundingCount gc;
    gc.count = 1;
    for (int i = 0; i < schema.arity; ++i) {
        if (n_entities != 0 && gc.count > UINT64_MAX / n_entities) {
            gc.count = UINT64_MAX;
            gc.saturated = true;
            return gc;
        }
        gc.count *= n_entities;
    }
    return gc;
}

} // namespace xmln
