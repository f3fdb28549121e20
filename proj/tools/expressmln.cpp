// expressmln: train, evaluate and inspect mean-field posteriors for Markov
// Logic Networks parametrized by GNN plus tunable entity embeddings.

#include "xmln/config.hpp"
#include "xmln/errors.hpp"
#include "xmln/exact.hpp"
#include "xmln/factor_graph.hpp"
#include "xmln/kb_io.hpp"
#include "xmln/mean_field.hpp"
#include "xmln/metrics.hpp"
#include "xmln/model.hpp"
#include "xmln/sampler.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xmln;

namespace {

uint64_t default_seed() {
    if (const char* env = std::getenv("EXPRESSMLN_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("EXPRESSMLN_SEED is not an integer: ") + env);
        }
    }
    return 0;
}

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path))
        throw ConfigError(std::string(what) + " not found: " + path);
}

struct LoadedData {
    KnowledgeBase kb;
    DatasetSplit split;
};

// KB directory layout: schema.tsv, facts.tsv, optional train/valid/test.tsv.
LoadedData load_dir(const std::string& dir, const std::string& rules_path,
                    WorldSemantics semantics) {
    const fs::path base(dir);
    require_file((base / "schema.tsv").string(), "schema file");
    require_file((base / "facts.tsv").string(), "facts file");
    if (!rules_path.empty()) require_file(rules_path, "rules file");

    LoadedData data;
    data.kb = load_kb((base / "facts.tsv").string(), (base / "schema.tsv").string(), rules_path,
                      WorldSemantics::OpenWorld);
    auto load_if = [&](const char* name, std::vector<LabeledAtom>& out) {
        const fs::path p = base / name;
        if (fs::exists(p)) out = load_queries(p.string(), data.kb);
    };
    load_if("train.tsv", data.split.train);
    load_if("valid.tsv", data.split.valid);
    load_if("test.tsv", data.split.test);

    if (semantics == WorldSemantics::ClosedWorld) {
        data.kb.set_semantics(WorldSemantics::ClosedWorld);
        apply_closed_world(data.kb);
    }
    return data;
}

// map errors to exit codes: 2 config, 3 data, 4 numeric
int run_guarded(const std::function<void()>& fn) {
    try {
        fn();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            int i;
            while ((i = next.fetch_add(1)) < n) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

struct CommonFlags {
    std::string kb_dir;
    std::string rules;
    std::string config_path;
    std::string semantics = "open";
    uint64_t seed = default_seed();
    int threads = 1;
};

WorldSemantics parse_semantics(const std::string& s) {
    if (s == "open") return WorldSemantics::OpenWorld;
    if (s == "closed") return WorldSemantics::ClosedWorld;
    throw ConfigError("--semantics must be open or closed, got " + s);
}

struct ModelFlags {
    std::string variant = "express";
    int gnn_dim = 64;
    int tune_dim = 4;
    int rounds = 2;
    int hidden_dim = 0;
};

struct TrainFlags {
    int epochs = 10;
    int steps = 100;
    double lr = 0.0005;
    double p_obs = 0.9;
    int batch = 16;
    double formula_weight = 1.0;
    double entropy_weight = 1.0;
    double disc_weight = 0.0;
    int patience = 10;
    bool query_anchored = false;
};

ModelConfig make_model_config(const ModelFlags& mf, uint64_t seed) {
    ModelConfig mc;
    mc.variant = variant_from_string(mf.variant);
    mc.gnn_dim = mf.gnn_dim;
    mc.tune_dim = mf.tune_dim;
    mc.rounds = mf.rounds;
    mc.hidden_dim = mf.hidden_dim;
    mc.seed = seed;
    return mc;
}

void write_json(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot open file for writing: " + out_path);
    out << j.dump(2) << "\n";
}

// deductive metrics: pooled AUC-PR plus per-predicate macro average
json deductive_metrics(const KnowledgeBase& kb, PosteriorModel& model,
                       const std::vector<LabeledAtom>& queries, int threads) {
    if (queries.empty()) throw DataError("no queries to evaluate");
    model.refresh_cache();
    std::vector<double> scores(queries.size());
    std::vector<int8_t> labels(queries.size());
    parallel_for(static_cast<int>(queries.size()), threads, [&](int i) {
        scores[static_cast<size_t>(i)] = model.q_prob(queries[static_cast<size_t>(i)].atom);
        labels[static_cast<size_t>(i)] = queries[static_cast<size_t>(i)].label;
    });
    const double pooled = auc_pr(labels, scores);

    std::map<int, std::pair<std::vector<int8_t>, std::vector<double>>> per_pred;
    for (size_t i = 0; i < queries.size(); ++i) {
        auto& [pl, ps] = per_pred[queries[i].atom.predicate];
        pl.push_back(labels[i]);
        ps.push_back(scores[i]);
    }
    double macro = 0.0;
    int macro_n = 0;
    for (auto& [pid, data] : per_pred) {
        auto& [pl, ps] = data;
        bool has_pos = false, has_neg = false;
        for (int8_t l : pl) (l ? has_pos : has_neg) = true;
        if (!has_pos || !has_neg) continue;
        macro += auc_pr(pl, ps);
        ++macro_n;
    }
    json j;
    j["auc_pr"] = pooled;
    if (macro_n > 0) j["auc_pr_macro"] = macro / macro_n;
    j["n_queries"] = queries.size();
    (void)kb;
    return j;
}

json completion_metrics(const KnowledgeBase& kb, PosteriorModel& model,
                        const std::vector<LabeledAtom>& queries,
                        const std::vector<GroundAtom>& extra_known_true, int threads) {
    std::vector<GroundAtom> positives;
    for (const LabeledAtom& q : queries)
        if (q.label) positives.push_back(q.atom);
    if (positives.empty()) throw DataError("no positive queries to rank");

    model.refresh_cache();
    std::vector<std::vector<int>> ranks_per_query(positives.size());
    parallel_for(static_cast<int>(positives.size()), threads, [&](int i) {
        auto tasks = completion_tasks(kb, positives[static_cast<size_t>(i)], extra_known_true,
                                      [&](const GroundAtom& cand) { return model.q_prob(cand); });
        for (const RankTask& t : tasks)
            ranks_per_query[static_cast<size_t>(i)].push_back(filtered_rank(t));
    });
    std::vector<int> ranks;
    for (const auto& r : ranks_per_query) ranks.insert(ranks.end(), r.begin(), r.end());
    const RankSummary s = mrr_hits(ranks);
    json j;
    j["mrr"] = s.mrr;
    j["hits10"] = s.hits10;
    j["n_queries"] = positives.size();
    j["n_tasks"] = s.n;
    return j;
}

void cmd_train(const CommonFlags& common, const ModelFlags& mf, const TrainFlags& tf,
               const std::string& out_dir) {
    LoadedData data = load_dir(common.kb_dir, common.rules, parse_semantics(common.semantics));
    if (data.kb.clauses().empty()) throw ConfigError("no rules: training needs formulae");

    PosteriorModel model(data.kb, make_model_config(mf, common.seed));

    SamplerConfig sc;
    sc.p_obs = tf.p_obs;
    sc.batch_size = tf.batch;
    sc.query_anchored = tf.query_anchored;
    GroundSampler sampler(data.kb, data.kb.clauses(), sc, common.seed + 1);

    Adam opt(tf.lr);
    TrainConfig tc;
    tc.epochs = tf.epochs;
    tc.steps_per_epoch = tf.steps;
    tc.weights = {tf.formula_weight, tf.entropy_weight, tf.disc_weight};
    tc.plateau_patience = tf.patience;
    tc.query_anchored = tf.query_anchored;

    fs::create_directories(out_dir);
    const TrainHistory history = train(data.kb, model, sampler, opt, tc, &data.split);
    model.save((fs::path(out_dir) / "checkpoint.bin").string());
    history.save_csv((fs::path(out_dir) / "history.csv").string());

    std::ofstream cfg((fs::path(out_dir) / "run.config").string());
    cfg << "command = train\n"
        << "kb = " << common.kb_dir << "\nrules = " << common.rules << "\nseed = " << common.seed
        << "\nsemantics = " << common.semantics << "\nmodel.variant = " << mf.variant
        << "\nmodel.gnn_dim = " << mf.gnn_dim << "\nmodel.tune_dim = " << mf.tune_dim
        << "\nmodel.rounds = " << mf.rounds << "\nsampler.p_obs = " << tf.p_obs
        << "\nsampler.batch = " << tf.batch << "\nsampler.query_anchored = " << tf.query_anchored
        << "\ntrain.epochs = " << tf.epochs << "\ntrain.steps = " << tf.steps
        << "\ntrain.lr = " << tf.lr << "\n";
    std::cout << "checkpoint written to " << out_dir << "\n";
}

void cmd_eval(const CommonFlags& common, const std::string& checkpoint,
              const std::string& queries_path, const std::string& mode, bool inductive,
              bool zero_tunable, const std::string& out_path) {
    require_file(checkpoint, "checkpoint");
    LoadedData data = load_dir(common.kb_dir, common.rules, parse_semantics(common.semantics));

    std::string qp = queries_path;
    if (qp.empty()) qp = (fs::path(common.kb_dir) / "test.tsv").string();
    require_file(qp, "queries file");
    const std::vector<LabeledAtom> queries = load_queries(qp, data.kb);
    if (queries.empty()) throw DataError("empty query file: " + qp);

    auto model = PosteriorModel::load(data.kb, checkpoint, inductive);
    if (zero_tunable) model->set_zero_tunable(true);

    json j;
    if (mode == "deductive") {
        j = deductive_metrics(data.kb, *model, queries, common.threads);
    } else if (mode == "completion") {
        std::vector<GroundAtom> known_true;
        auto add_known = [&](const std::vector<LabeledAtom>& qs) {
            for (const LabeledAtom& q : qs)
                if (q.label) known_true.push_back(q.atom);
        };
        add_known(data.split.train);
        add_known(data.split.valid);
        add_known(data.split.test);
        add_known(queries);
        j = completion_metrics(data.kb, *model, queries, known_true, common.threads);
    } else {
        throw ConfigError("--mode must be deductive or completion, got " + mode);
    }
    j["mode"] = mode;
    write_json(j, out_path);
}

void cmd_infer(const CommonFlags& common, const std::string& checkpoint,
               const std::string& queries_path, const std::string& out_path) {
    require_file(checkpoint, "checkpoint");
    require_file(queries_path, "queries file");
    LoadedData data = load_dir(common.kb_dir, common.rules, parse_semantics(common.semantics));
    const std::vector<LabeledAtom> queries = load_queries(queries_path, data.kb);
    if (queries.empty()) throw DataError("empty query file: " + queries_path);
    auto model = PosteriorModel::load(data.kb, checkpoint);

    std::vector<GroundAtom> atoms;
    for (const LabeledAtom& q : queries) atoms.push_back(q.atom);
    const auto marginals = infer_marginals(data.kb, *model, atoms);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw DataError("cannot open file for writing: " + out_path);
        out = &file;
    }
    char buf[64];
    for (const auto& [atom, p] : marginals) {
        std::snprintf(buf, sizeof buf, "%.10g", p);
        (*out) << data.kb.atom_to_string(atom) << '\t' << buf << '\n';
    }
}

void cmd_gen_kinship(int n, uint64_t seed, int sub_min, int sub_max, const std::string& out_dir) {
    KinshipGenConfig cfg;
    cfg.n_entities = n;
    cfg.seed = seed;
    cfg.subgroup_size = {sub_min, sub_max};
    const GeneratedKb gen = generate_kinship(cfg);
    save_kinship_dataset(gen, out_dir);
    std::cout << "kinship dataset: " << gen.kb.n_constants() << " entities, "
              << gen.kb.facts().size() << " facts, "
              << gen.split.valid.size() + gen.split.test.size() << " queries -> " << out_dir
              << "\n";
}

void cmd_diag_colors(const CommonFlags& common, bool augmented, const std::string& dump_path,
                     const std::string& queries_path) {
    LoadedData data = load_dir(common.kb_dir, common.rules, parse_semantics(common.semantics));
    const FactorGraph graph =
        augmented ? build_augmented_graph(data.kb) : build_graph(data.kb);
    const Coloring coloring = color_refine(graph);

    if (!dump_path.empty()) {
        std::ofstream dump(dump_path);
        if (!dump) throw DataError("cannot open file for writing: " + dump_path);
        graph.dump_edges(dump, data.kb);
    }

    std::cout << "graph: " << graph.n_constants << " constants, " << graph.facts.size()
              << " facts, " << graph.edge_count() << " edges\n";
    std::cout << "refinement: " << coloring.n_colors << " colors after " << coloring.rounds
              << " rounds\n";
    for (const auto& cls : constant_partition(coloring)) {
        std::cout << "class:";
        for (int c : cls) std::cout << ' ' << data.kb.constants()[static_cast<size_t>(c)].name;
        std::cout << '\n';
    }

    // same-colored query argument tuples are indistinguishable to any GNN head
    std::vector<LabeledAtom> queries = data.split.test;
    if (!queries_path.empty()) {
        require_file(queries_path, "queries file");
        queries = load_queries(queries_path, data.kb);
    }
    int flagged = 0;
    for (size_t i = 0; i < queries.size(); ++i) {
        for (size_t j = i + 1; j < queries.size(); ++j) {
            const GroundAtom& a = queries[i].atom;
            const GroundAtom& b = queries[j].atom;
            if (a.predicate != b.predicate || a.args == b.args) continue;
            if (a.args.size() != b.args.size()) continue;
            if (indistinguishable(coloring, a.args, b.args)) {
                std::cout << "gnn-indistinguishable: " << data.kb.atom_to_string(a) << " ~ "
                          << data.kb.atom_to_string(b) << '\n';
                ++flagged;
            }
        }
    }
    std::cout << flagged << " gnn-indistinguishable query pairs\n";
}

void cmd_sweep(const CommonFlags& common, const TrainFlags& tf, const std::string& grid,
               int seeds, const std::string& out_path) {
    // grid cells: comma-separated variant specs, e.g. gnn:64,tune:64,express:64+4
    struct Cell {
        std::string label;
        ModelFlags mf;
    };
    std::vector<Cell> cells;
    size_t pos = 0;
    while (pos <= grid.size()) {
        size_t comma = grid.find(',', pos);
        if (comma == std::string::npos) comma = grid.size();
        const std::string spec = grid.substr(pos, comma - pos);
        pos = comma + 1;
        if (spec.empty()) continue;
        const size_t colon = spec.find(':');
        if (colon == std::string::npos) throw ConfigError("bad grid cell: " + spec);
        Cell cell;
        cell.label = spec;
        cell.mf.variant = spec.substr(0, colon);
        const std::string dims = spec.substr(colon + 1);
        const size_t plus = dims.find('+');
        try {
            if (cell.mf.variant == "tune" || cell.mf.variant == "tunable") {
                cell.mf.variant = "tunable";
                cell.mf.tune_dim = std::stoi(dims);
            } else if (plus != std::string::npos) {
                cell.mf.gnn_dim = std::stoi(dims.substr(0, plus));
                cell.mf.tune_dim = std::stoi(dims.substr(plus + 1));
            } else {
                cell.mf.gnn_dim = std::stoi(dims);
                cell.mf.tune_dim = 0;
            }
        } catch (const std::exception&) {
            throw ConfigError("bad grid cell: " + spec);
        }
        cells.push_back(std::move(cell));
    }
    if (cells.empty()) throw ConfigError("empty sweep grid");

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw DataError("cannot open file for writing: " + out_path);
        out = &file;
    }
    (*out) << "variant,seed,auc_pr,param_count\n";

    for (const Cell& cell : cells) {
        for (int s = 0; s < seeds; ++s) {
            const uint64_t seed = common.seed + static_cast<uint64_t>(s);
            LoadedData data =
                load_dir(common.kb_dir, common.rules, parse_semantics(common.semantics));
            PosteriorModel model(data.kb, make_model_config(cell.mf, seed));
            SamplerConfig sc;
            sc.p_obs = tf.p_obs;
            sc.batch_size = tf.batch;
            GroundSampler sampler(data.kb, data.kb.clauses(), sc, seed + 1);
            Adam opt(tf.lr);
            TrainConfig tc;
            tc.epochs = tf.epochs;
            tc.steps_per_epoch = tf.steps;
            tc.weights = {tf.formula_weight, tf.entropy_weight, tf.disc_weight};
            tc.plateau_patience = tf.patience;
            train(data.kb, model, sampler, opt, tc, &data.split);

            const json j =
                deductive_metrics(data.kb, model, data.split.test, common.threads);
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6f", j["auc_pr"].get<double>());
            (*out) << cell.label << ',' << seed << ',' << buf << ',' << model.param_count()
                   << '\n';
            out->flush();
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-field MLN inference with GNN + tunable entity embeddings"};
    app.require_subcommand(1);

    CommonFlags common;
    ModelFlags mf;
    TrainFlags tf;
    std::string out_dir = "run";
    std::string out_path;
    std::string checkpoint;
    std::string queries_path;
    std::string mode = "deductive";
    std::string grid = "gnn:64,express:64+4";
    std::string dump_path;
    bool inductive = false;
    bool zero_tunable = false;
    bool augmented = false;
    int gen_n = 62;
    int sub_min = 2, sub_max = 3;
    int seeds = 3;

    auto add_common = [&](CLI::App* cmd, bool needs_kb = true) {
        if (needs_kb) cmd->add_option("--kb", common.kb_dir, "KB directory")->required();
        cmd->add_option("--rules", common.rules, "rules file");
        cmd->add_option("--config", common.config_path, "key=value config file");
        cmd->add_option("--semantics", common.semantics, "open|closed");
        cmd->add_option("--seed", common.seed, "RNG seed (default: $EXPRESSMLN_SEED or 0)");
        cmd->add_option("--threads", common.threads,
                        "evaluation worker threads (training is single-threaded)");
    };
    auto add_model = [&](CLI::App* cmd) {
        cmd->add_option("--model", mf.variant, "naive|tunable|gnn|express");
        cmd->add_option("--gnn-dim", mf.gnn_dim, "GNN embedding width d");
        cmd->add_option("--tune-dim", mf.tune_dim, "tunable embedding width d_t");
        cmd->add_option("--rounds", mf.rounds, "message passing rounds T");
        cmd->add_option("--hidden-dim", mf.hidden_dim, "MLP hidden width (0 = embedding width)");
    };
    auto add_train = [&](CLI::App* cmd) {
        cmd->add_option("--epochs", tf.epochs);
        cmd->add_option("--steps", tf.steps, "steps per epoch");
        cmd->add_option("--lr", tf.lr);
        cmd->add_option("--p-obs", tf.p_obs, "observed-slot sampling probability");
        cmd->add_option("--batch", tf.batch, "ground formulae per step");
        cmd->add_option("--formula-weight", tf.formula_weight);
        cmd->add_option("--entropy-weight", tf.entropy_weight);
        cmd->add_option("--disc-weight", tf.disc_weight, "discriminative loss weight");
        cmd->add_option("--patience", tf.patience, "epochs before lr halving");
        cmd->add_flag("--query-anchored", tf.query_anchored, "anchor batches on train queries");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train a posterior model");
    add_common(train_cmd);
    add_model(train_cmd);
    add_train(train_cmd);
    train_cmd->add_option("--out", out_dir, "output directory");

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint)->required();
    eval_cmd->add_option("--queries", queries_path, "query TSV (default <kb>/test.tsv)");
    eval_cmd->add_option("--mode", mode, "deductive|completion");
    eval_cmd->add_flag("--inductive", inductive, "allow entity-count mismatch");
    eval_cmd->add_flag("--zero-tunable", zero_tunable, "zero out tunable embeddings");
    eval_cmd->add_option("--out", out_path, "metrics JSON path (default stdout)");

    CLI::App* infer_cmd = app.add_subcommand("infer", "posterior marginals for query atoms");
    add_common(infer_cmd);
    infer_cmd->add_option("--checkpoint", checkpoint)->required();
    infer_cmd->add_option("--queries", queries_path)->required();
    infer_cmd->add_option("--out", out_path, "output TSV (default stdout)");

    CLI::App* gen_cmd = app.add_subcommand("gen-kinship", "generate a synthetic kinship dataset");
    gen_cmd->add_option("--n", gen_n, "number of entities")->required();
    gen_cmd->add_option("--seed", common.seed);
    gen_cmd->add_option("--subgroup-min", sub_min);
    gen_cmd->add_option("--subgroup-max", sub_max);
    gen_cmd->add_option("--out", out_dir, "output directory")->required();

    CLI::App* diag_cmd = app.add_subcommand("diag-colors", "color refinement diagnostics");
    add_common(diag_cmd);
    diag_cmd->add_flag("--augmented", augmented, "refine the augmented graph");
    diag_cmd->add_option("--dump", dump_path, "write the edge list to a file");
    diag_cmd->add_option("--queries", queries_path, "queries to check for indistinguishability");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "train/eval a grid of variants");
    add_common(sweep_cmd);
    add_train(sweep_cmd);
    sweep_cmd->add_option("--grid", grid, "cells like gnn:64,tune:64,express:64+4");
    sweep_cmd->add_option("--seeds", seeds, "seeds per cell");
    sweep_cmd->add_option("--out", out_path, "CSV output (default stdout)");

    CLI11_PARSE(app, argc, argv);

    // config file fills in flags the user did not pass explicitly
    auto apply_config = [&](CLI::App* cmd) {
        if (common.config_path.empty()) return;
        const ConfigMap cfg = ConfigMap::from_file(common.config_path);
        auto fill = [&](const char* flag, const char* key, auto& target) {
            using T = std::decay_t<decltype(target)>;
            const CLI::Option* opt = cmd->get_option_no_throw(flag);
            if (opt != nullptr && opt->count() > 0) return;  // explicit flag wins
            if (!cfg.has(key)) return;
            if constexpr (std::is_same_v<T, std::string>) {
                target = cfg.get_or(key, target);
            } else if constexpr (std::is_same_v<T, bool>) {
                target = cfg.get_bool(key, target);
            } else if constexpr (std::is_floating_point_v<T>) {
                target = cfg.get_double(key, target);
            } else {
                target = static_cast<T>(cfg.get_int(key, static_cast<int>(target)));
            }
        };
        fill("--model", "model.variant", mf.variant);
        fill("--gnn-dim", "model.gnn_dim", mf.gnn_dim);
        fill("--tune-dim", "model.tune_dim", mf.tune_dim);
        fill("--rounds", "model.rounds", mf.rounds);
        fill("--hidden-dim", "model.hidden_dim", mf.hidden_dim);
        fill("--p-obs", "sampler.p_obs", tf.p_obs);
        fill("--batch", "sampler.batch", tf.batch);
        fill("--query-anchored", "sampler.query_anchored", tf.query_anchored);
        fill("--epochs", "train.epochs", tf.epochs);
        fill("--steps", "train.steps", tf.steps);
        fill("--lr", "train.lr", tf.lr);
        fill("--formula-weight", "train.formula_weight", tf.formula_weight);
        fill("--entropy-weight", "train.entropy_weight", tf.entropy_weight);
        fill("--disc-weight", "train.disc_weight", tf.disc_weight);
        fill("--patience", "train.patience", tf.patience);
        fill("--semantics", "semantics", common.semantics);
    };

    if (train_cmd->parsed())
        return run_guarded([&] {
            apply_config(train_cmd);
            cmd_train(common, mf, tf, out_dir);
        });
    if (eval_cmd->parsed())
        return run_guarded([&] {
            apply_config(eval_cmd);
            cmd_eval(common, checkpoint, queries_path, mode, inductive, zero_tunable, out_path);
        });
    if (infer_cmd->parsed())
        return run_guarded([&] { cmd_infer(common, checkpoint, queries_path, out_path); });
    if (gen_cmd->parsed())
        return run_guarded([&] { cmd_gen_kinship(gen_n, common.seed, sub_min, sub_max, out_dir); });
    if (diag_cmd->parsed())
        return run_guarded([&] { cmd_diag_colors(common, augmented, dump_path, queries_path); });
    if (sweep_cmd->parsed())
        return run_guarded([&] {
            apply_config(sweep_cmd);
            cmd_sweep(common, tf, grid, seeds, out_path);
        });
    return 0;
}
