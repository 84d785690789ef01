// fairaudit: audit tabular binary classifiers for group and individual
// fairness, repair data, train a fairness-regularized scorer, and solve
// tolerance-bounded threshold and Lipschitz optimization problems.
//
// Exit codes: 0 success, 1 runtime/validation error, 2 usage error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairaudit/dataset.hpp"
#include "fairaudit/group_metrics.hpp"
#include "fairaudit/individual_metrics.hpp"
#include "fairaudit/inprocess.hpp"
#include "fairaudit/io.hpp"
#include "fairaudit/lipschitz.hpp"
#include "fairaudit/postprocess.hpp"
#include "fairaudit/preprocess.hpp"

namespace {

using namespace fairaudit;

struct LoadedData {
    Schema schema;
    Dataset ds;
    GroupIndex gi;
    std::optional<std::size_t> privileged;
};

LoadedData load_data(const std::string& data_path, const std::string& schema_path) {
    LoadedData out;
    out.schema = load_schema(schema_path);
    out.ds = load_csv(data_path, out.schema);
    out.gi = build_group_index(out.ds, out.schema.protected_attrs);
    out.privileged = find_privileged_group(out.gi, out.schema);
    return out;
}

std::size_t require_unprivileged(const LoadedData& data, const std::string& command) {
    if (data.gi.n_groups() != 2) {
        throw ValidationError(command + " requires exactly 2 groups");
    }
    if (!data.privileged) {
        throw SchemaError(command +
                          " requires a privileged designation in the schema "
                          "(\"privileged\": {attr: value})");
    }
    return 1 - *data.privileged;
}

std::vector<double> parse_tau_list(const std::string& spec) {
    std::vector<double> taus;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) taus.push_back(parse_double(item, "--taus"));
    }
    return taus;
}

int run(int argc, char** argv) {
    CLI::App app{"fairness auditing and repair toolkit for tabular binary classifiers"};
    app.require_subcommand(1);
    app.fallthrough();
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "root seed for all randomized steps")->capture_default_str();

    // generate ---------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "synthesize a two-group dataset");
    struct {
        std::size_t n_a = 500, n_b = 500, n_features = 2;
        double delta = 0.0, variance_ratio = 1.0, offset = 0.0;
        std::string out, schema_out;
    } g;
    gen->add_option("--n-a", g.n_a, "records in group A")->capture_default_str();
    gen->add_option("--n-b", g.n_b, "records in group B")->capture_default_str();
    gen->add_option("--delta", g.delta, "group-B feature mean shift")->capture_default_str();
    gen->add_option("--variance-ratio", g.variance_ratio, "group-B feature variance")
        ->capture_default_str();
    gen->add_option("--base-rate-offset", g.offset, "base rate(B) - base rate(A)")
        ->capture_default_str();
    gen->add_option("--n-features", g.n_features, "feature count")->capture_default_str();
    gen->add_option("--out", g.out, "output CSV path")->required();
    gen->add_option("--schema-out", g.schema_out, "output schema JSON path");
    gen->callback([&] {
        SyntheticSpec spec{g.n_a, g.n_b, g.delta, g.variance_ratio, g.offset, g.n_features};
        const Dataset ds = generate_synthetic(spec, seed);
        write_csv(ds, g.out);
        if (!g.schema_out.empty()) {
            Schema s = schema_for(ds);
            s.privileged["group"] = g.offset >= 0.0 ? "B" : "A";
            save_schema(s, g.schema_out);
        }
        std::cout << "generate: " << ds.n_records() << " records, " << ds.n_features()
                  << " features -> " << g.out << '\n';
    });

    // audit ------------------------------------------------------------------
    auto* aud = app.add_subcommand("audit", "group-fairness report for predictions");
    struct {
        std::string data, schema, preds, scores, subgroups, out;
        double alpha = 1.0, beta = 1.0, tau_di = 0.8;
        std::size_t min_support = 1, knn_k = 5;
        bool individual = false;
    } a;
    aud->add_option("--data", a.data)->required();
    aud->add_option("--schema", a.schema)->required();
    aud->add_option("--preds", a.preds, "0/1 predictions, one per line")->required();
    aud->add_option("--scores", a.scores, "optional scores, one per line");
    aud->add_option("--alpha", a.alpha, "loss per false negative")->capture_default_str();
    aud->add_option("--beta", a.beta, "loss per false positive")->capture_default_str();
    aud->add_option("--tau-di", a.tau_di, "disparate-impact threshold")->capture_default_str();
    aud->add_option("--subgroups", a.subgroups, "comma-separated attributes to intersect");
    aud->add_option("--min-support", a.min_support, "subgroup support threshold")
        ->capture_default_str();
    aud->add_flag("--individual", a.individual,
                  "add kNN inconsistency and group Wasserstein distances");
    aud->add_option("--knn-k", a.knn_k, "neighbor count for --individual")
        ->capture_default_str();
    aud->add_option("--out", a.out, "report JSON path")->required();
    aud->callback([&] {
        const LoadedData data = load_data(a.data, a.schema);
        const auto preds = load_binary_column(a.preds);
        std::optional<std::vector<double>> scores;
        if (!a.scores.empty()) scores = load_value_column(a.scores);
        const ParityOptions opts{a.tau_di, data.privileged};
        const FairnessReport rep =
            parity_report(preds, scores, data.ds, data.gi, {a.alpha, a.beta}, opts);
        json j = to_json(rep);
        if (!a.subgroups.empty()) {
            std::vector<std::string> attrs;
            std::stringstream ss(a.subgroups);
            std::string item;
            while (std::getline(ss, item, ',')) attrs.push_back(item);
            j["subgroups"] = to_json(audit_subgroups(data.ds, preds, attrs, a.min_support));
        }
        if (a.individual) {
            // distances on standardized non-sensitive features
            const Dataset bare = drop_sensitive(data.ds);
            const Dataset std_ds = fit_standardizer(bare).apply(bare);
            std::vector<double> values;
            if (scores) {
                values = *scores;
            } else {
                for (int y : data.ds.labels) values.push_back(static_cast<double>(y));
            }
            json ind;
            ind["values_used"] = scores ? "scores" : "labels";
            ind["knn_k"] = a.knn_k;
            ind["knn_inconsistency"] = knn_inconsistency(values, std_ds, {a.knn_k});
            if (data.gi.n_groups() == 2) {
                const GroupDistance gd = group_feature_distance(std_ds, data.gi);
                ind["group_w1_per_feature"] = gd.per_feature;
                ind["group_w1_mean"] = gd.mean;
            }
            j["individual"] = std::move(ind);
        }
        save_json(j, a.out);
        std::cout << "audit: dp_ratio="
                  << (rep.dp_ratio ? format_double(*rep.dp_ratio) : std::string("undefined"))
                  << (rep.di_flagged ? " (disparate impact)" : "")
                  << " weighted_loss=" << format_double(rep.weighted_loss) << " -> " << a.out
                  << '\n';
    });

    // repair -----------------------------------------------------------------
    auto* rep_cmd = app.add_subcommand("repair", "pre-processing repairs");
    struct {
        std::string data, schema, method, scores, out, schema_out, log;
        double lambda = 1.0, rho_threshold = 0.4, tau_di = 0.8;
    } r;
    rep_cmd->add_option("--data", r.data)->required();
    rep_cmd->add_option("--schema", r.schema)->required();
    rep_cmd->add_option("--method", r.method, "drop|suppress|massage|reweight|di")
        ->required()
        ->check(CLI::IsMember({"drop", "suppress", "massage", "reweight", "di"}));
    rep_cmd->add_option("--lambda", r.lambda, "repair amount for di")->capture_default_str();
    rep_cmd->add_option("--rho-threshold", r.rho_threshold, "suppression correlation threshold")
        ->capture_default_str();
    rep_cmd->add_option("--tau-di", r.tau_di, "disparate-impact threshold")
        ->capture_default_str();
    rep_cmd->add_option("--scores", r.scores, "scores for massage flip ordering");
    rep_cmd->add_option("--out", r.out, "repaired CSV path")->required();
    rep_cmd->add_option("--schema-out", r.schema_out, "schema JSON matching the repaired CSV");
    rep_cmd->add_option("--log", r.log, "repair log JSON path");
    rep_cmd->callback([&] {
        const LoadedData data = load_data(r.data, r.schema);
        Dataset out_ds;
        json log;
        log["method"] = r.method;
        if (r.method == "drop") {
            out_ds = drop_sensitive(data.ds);
            log["parameters"] = json::object();
            log["dropped"] = data.ds.sensitive_features;
        } else if (r.method == "suppress") {
            SuppressResult res = suppress_correlated(data.ds, data.gi, r.rho_threshold);
            out_ds = std::move(res.data);
            log["parameters"] = {{"rho_threshold", r.rho_threshold}};
            log["dropped"] = res.dropped;
            log["warnings"] = res.warnings;
        } else if (r.method == "massage") {
            if (r.scores.empty()) {
                throw ValidationError("massage requires --scores");
            }
            const std::size_t unpriv = require_unprivileged(data, "massage");
            MassageResult res =
                massage(data.ds, data.gi, unpriv, load_value_column(r.scores));
            out_ds = std::move(res.data);
            log["parameters"] = {{"unprivileged", data.gi.label(unpriv)}};
            log["pairs"] = res.pairs;
            json flips = json::array();
            for (const auto& f : res.flips) {
                flips.push_back({{"record", f.record}, {"from", f.from}, {"to", f.to}});
            }
            log["flips"] = std::move(flips);
        } else if (r.method == "reweight") {
            out_ds = data.ds;
            out_ds.weights = reweight(data.ds, data.gi);
            log["parameters"] = json::object();
            json table = json::object();
            for (std::size_t g2 = 0; g2 < data.gi.n_groups(); ++g2) {
                json per_label = json::object();
                for (std::size_t i : data.gi.members[g2]) {
                    per_label[std::to_string(data.ds.labels[i])] = out_ds.weights[i];
                }
                table[data.gi.label(g2)] = std::move(per_label);
            }
            log["weights"] = std::move(table);
        } else {  // di
            out_ds = di_repair(data.ds, data.gi, {r.tau_di, r.lambda});
            log["parameters"] = {{"lambda", r.lambda}, {"tau_di", r.tau_di}};
        }
        write_csv(out_ds, r.out);
        if (!r.schema_out.empty()) save_schema(schema_for(out_ds), r.schema_out);
        if (!r.log.empty()) save_json(log, r.log);
        std::cout << "repair(" << r.method << "): " << out_ds.n_records() << " records, "
                  << out_ds.n_features() << " features -> " << r.out << '\n';
    });

    // train ------------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "logistic regression with fairness regularizer");
    struct {
        std::string data, schema, weights_from, out, scores_out;
        double lambda_fair = 0.0, lr = 0.1, l2 = 0.0;
        std::size_t iters = 1000;
    } t;
    tr->add_option("--data", t.data)->required();
    tr->add_option("--schema", t.schema)->required();
    tr->add_option("--lambda-fair", t.lambda_fair, "mean-score-gap penalty weight")
        ->capture_default_str();
    tr->add_option("--lr", t.lr, "learning rate")->capture_default_str();
    tr->add_option("--iters", t.iters, "gradient-descent iterations")->capture_default_str();
    tr->add_option("--l2", t.l2, "L2 penalty")->capture_default_str();
    tr->add_option("--weights-from", t.weights_from, "record weights, one per line");
    tr->add_option("--out", t.out, "model JSON path")->required();
    tr->add_option("--scores-out", t.scores_out, "write training-set scores");
    tr->callback([&] {
        const LoadedData data = load_data(t.data, t.schema);
        std::vector<double> weights;
        if (!t.weights_from.empty()) weights = load_value_column(t.weights_from);
        const TrainSpec spec{t.lr, t.iters, t.lambda_fair, t.l2};
        const Model model = train_logreg(data.ds, data.gi, spec, weights);
        save_json(to_json(model, seed), t.out);
        if (!t.scores_out.empty()) {
            write_value_column(predict_scores(model, data.ds), "score", t.scores_out);
        }
        std::cout << "train: " << model.coefficients.size() << " coefficients after " << t.iters
                  << " iterations -> " << t.out << '\n';
    });

    // thresholds ---------------------------------------------------------------
    auto* th = app.add_subcommand("thresholds", "tolerance-bounded per-group thresholds");
    struct {
        std::string data, schema, scores, out, preds_out;
        double alpha = 1.0, beta = 1.0, tau_fn = 0.05;
        bool include_fp = true;
    } o;
    th->add_option("--data", o.data)->required();
    th->add_option("--schema", o.schema)->required();
    th->add_option("--scores", o.scores, "scores, one per line")->required();
    th->add_option("--alpha", o.alpha)->capture_default_str();
    th->add_option("--beta", o.beta)->capture_default_str();
    th->add_option("--tau-fn", o.tau_fn, "maximum pairwise FN-rate gap")->capture_default_str();
    th->add_option("--include-fp", o.include_fp, "carry the beta*FP term")
        ->capture_default_str();
    th->add_option("--out", o.out, "policy + report JSON path")->required();
    th->add_option("--preds-out", o.preds_out, "write resulting predictions");
    th->callback([&] {
        const LoadedData data = load_data(o.data, o.schema);
        const auto scores = load_value_column(o.scores);
        const ParityOptions popts{0.8, data.privileged};
        const ThresholdResult res = optimize_thresholds(scores, data.ds, data.gi,
                                                        {o.alpha, o.beta},
                                                        {o.tau_fn, o.include_fp}, popts);
        json j;
        j["alpha"] = o.alpha;
        j["beta"] = o.beta;
        j["tau_fn"] = o.tau_fn;
        j["include_fp"] = o.include_fp;
        j["loss"] = res.loss;
        j["fn_gap"] = res.fn_gap;
        json thr = json::object();
        for (std::size_t g2 = 0; g2 < data.gi.n_groups(); ++g2) {
            thr[data.gi.label(g2)] = res.policy.thresholds[g2];
        }
        j["thresholds"] = std::move(thr);
        j["report"] = to_json(res.report);
        save_json(j, o.out);
        if (!o.preds_out.empty()) {
            write_value_column(res.policy.apply(scores, data.gi), "pred", o.preds_out);
        }
        std::cout << "thresholds: loss=" << format_double(res.loss)
                  << " fn_gap=" << format_double(res.fn_gap) << " -> " << o.out << '\n';
    });

    // sweep --------------------------------------------------------------------
    auto* sw = app.add_subcommand("sweep", "optimal loss across FN-gap tolerances");
    struct {
        std::string data, schema, scores, taus, out;
        double alpha = 1.0, beta = 1.0;
        bool include_fp = true;
    } s;
    sw->add_option("--data", s.data)->required();
    sw->add_option("--schema", s.schema)->required();
    sw->add_option("--scores", s.scores)->required();
    sw->add_option("--taus", s.taus, "comma-separated tolerances, ascending")->required();
    sw->add_option("--alpha", s.alpha)->capture_default_str();
    sw->add_option("--beta", s.beta)->capture_default_str();
    sw->add_option("--include-fp", s.include_fp)->capture_default_str();
    sw->add_option("--out", s.out, "sweep CSV path")->required();
    sw->callback([&] {
        const LoadedData data = load_data(s.data, s.schema);
        const auto scores = load_value_column(s.scores);
        const SweepResult res = sweep_tau(scores, data.ds, data.gi, {s.alpha, s.beta},
                                          parse_tau_list(s.taus), s.include_fp);
        write_sweep_csv(res, s.out);
        std::cout << "sweep: " << res.rows.size() << " rows -> " << s.out << '\n';
    });

    // eqodds ---------------------------------------------------------------------
    auto* eq = app.add_subcommand("eqodds", "equalized-odds label mixing");
    struct {
        std::string data, schema, preds, out, apply_out;
        double alpha = 1.0, beta = 1.0;
    } e;
    eq->add_option("--data", e.data)->required();
    eq->add_option("--schema", e.schema)->required();
    eq->add_option("--preds", e.preds)->required();
    eq->add_option("--alpha", e.alpha)->capture_default_str();
    eq->add_option("--beta", e.beta)->capture_default_str();
    eq->add_option("--out", e.out, "mixing JSON path")->required();
    eq->add_option("--apply-out", e.apply_out, "sample mixed predictions with --seed");
    eq->callback([&] {
        const LoadedData data = load_data(e.data, e.schema);
        const auto preds = load_binary_column(e.preds);
        const MixingResult mix =
            equalize_odds_mixing(preds, data.ds, data.gi, {e.alpha, e.beta});
        std::vector<std::string> names;
        for (std::size_t g2 = 0; g2 < data.gi.n_groups(); ++g2) {
            names.push_back(data.gi.label(g2));
        }
        save_json(to_json(mix, names), e.out);
        if (!e.apply_out.empty()) {
            write_value_column(apply_mixing(mix, preds, data.gi, seed), "pred", e.apply_out);
        }
        std::cout << "eqodds: target_tpr=" << format_double(mix.target_tpr)
                  << " target_fpr=" << format_double(mix.target_fpr)
                  << " cost=" << format_double(mix.cost) << " -> " << e.out << '\n';
    });

    // roc ------------------------------------------------------------------------
    auto* roc = app.add_subcommand("roc", "reject-option classification");
    struct {
        std::string data, schema, scores, out;
        double theta = 0.7;
    } c;
    roc->add_option("--data", c.data)->required();
    roc->add_option("--schema", c.schema)->required();
    roc->add_option("--scores", c.scores)->required();
    roc->add_option("--theta", c.theta, "confidence threshold in (0.5, 1]")
        ->capture_default_str();
    roc->add_option("--out", c.out, "predictions path")->required();
    roc->callback([&] {
        const LoadedData data = load_data(c.data, c.schema);
        const auto scores = load_value_column(c.scores);
        const std::size_t unpriv = require_unprivileged(data, "roc");
        const auto preds = roc_reject_option(scores, data.gi, unpriv, {c.theta});
        write_value_column(preds, "pred", c.out);
        std::cout << "roc: theta=" << format_double(c.theta) << " -> " << c.out << '\n';
    });

    // lipschitz ---------------------------------------------------------------------
    auto* lip = app.add_subcommand("lipschitz", "individual-fairness linear program");
    struct {
        std::string instance, out;
        bool relaxed = false;
        std::optional<double> epsilon;
    } l;
    lip->add_option("--instance", l.instance, "instance JSON path")->required();
    lip->add_flag("--relaxed", l.relaxed, "fair-affirmative-action mode");
    lip->add_option("--epsilon", l.epsilon, "override the instance parity bias");
    lip->add_option("--out", l.out, "solution JSON path")->required();
    lip->callback([&] {
        auto [inst, parity] = lipschitz_instance_from_json(load_json(l.instance));
        if (!triangle_inequality_holds(inst.d)) {
            std::cerr << "warning: distance matrix violates the triangle inequality\n";
        }
        LipschitzSolution sol;
        std::size_t violation_count = 0;
        double max_excess = 0.0;
        if (l.relaxed) {
            if (!parity) {
                throw ValidationError("--relaxed requires \"groups\" in the instance");
            }
            if (l.epsilon) parity->epsilon = *l.epsilon;
            sol = solve_fair_affirmative(inst, *parity);
            violation_count = within_group_violation_count(sol.p, inst.d, parity->group);
        } else {
            sol = solve_lipschitz_lp(inst);
            const ViolationStats v = lipschitz_violations(sol.p, inst.d);
            violation_count = v.count;
            max_excess = v.max_excess;
        }
        json j;
        j["mode"] = l.relaxed ? "relaxed" : "full";
        j["objective"] = sol.objective;
        j["p"] = sol.p;
        j["violations"] = {{"count", violation_count}, {"max_excess", max_excess}};
        save_json(j, l.out);
        std::cout << "lipschitz(" << (l.relaxed ? "relaxed" : "full")
                  << "): objective=" << format_double(sol.objective) << " -> " << l.out << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const fairaudit::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
