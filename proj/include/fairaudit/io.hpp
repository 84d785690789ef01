#pragma once
// File formats: CSV datasets (header row, UTF-8, comma separator, "." decimal
// point), schema config JSON, single-column value files, and JSON
// serialization of reports, models, and policies. Doubles are written with
// shortest round-trip formatting so load -> write -> load is the identity.

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/group_metrics.hpp"
#include "fairaudit/inprocess.hpp"
#include "fairaudit/lipschitz.hpp"
#include "fairaudit/postprocess.hpp"

namespace fairaudit {

using json = nlohmann::json;

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        throw ValidationError("unparsable numeric value '" + s + "' in " + where);
    }
    return v;
}

// ---------------------------------------------------------------------------
// Schema config.

struct Schema {
    std::string label;
    std::vector<std::string> protected_attrs;
    std::vector<std::string> features;
    std::map<std::string, std::string> privileged;  // attr -> privileged value
    std::vector<std::string> sensitive_features;
    std::optional<std::string> weight_column;
};

inline Schema schema_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("schema must be a JSON object");
    static const std::vector<std::string> known = {"label",      "protected",
                                                   "features",   "privileged",
                                                   "sensitive_features", "weight"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw SchemaError("unknown schema key '" + key + "'");
        }
    }
    for (const char* key : {"label", "protected", "features"}) {
        if (!j.contains(key)) throw SchemaError(std::string("schema missing key '") + key + "'");
    }
    Schema s;
    s.label = j.at("label").get<std::string>();
    s.protected_attrs = j.at("protected").get<std::vector<std::string>>();
    s.features = j.at("features").get<std::vector<std::string>>();
    if (s.protected_attrs.empty()) throw SchemaError("schema needs at least one protected column");
    if (s.features.empty()) throw SchemaError("schema needs at least one feature column");
    if (j.contains("privileged")) {
        s.privileged = j.at("privileged").get<std::map<std::string, std::string>>();
    }
    if (j.contains("sensitive_features")) {
        s.sensitive_features = j.at("sensitive_features").get<std::vector<std::string>>();
    }
    if (j.contains("weight")) s.weight_column = j.at("weight").get<std::string>();
    return s;
}

inline json schema_to_json(const Schema& s) {
    json j;
    j["label"] = s.label;
    j["protected"] = s.protected_attrs;
    j["features"] = s.features;
    if (!s.privileged.empty()) j["privileged"] = s.privileged;
    if (!s.sensitive_features.empty()) j["sensitive_features"] = s.sensitive_features;
    if (s.weight_column) j["weight"] = *s.weight_column;
    return j;
}

inline Schema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open schema file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("schema '" + path + "' is not valid JSON: " + e.what());
    }
    return schema_from_json(j);
}

inline void save_schema(const Schema& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write schema file '" + path + "'");
    out << schema_to_json(s).dump(2) << '\n';
}

// The privileged group id under a grouping, when the schema designates one
// for every grouping attribute.
inline std::optional<std::size_t> find_privileged_group(const GroupIndex& gi, const Schema& s) {
    GroupKey key;
    for (const auto& attr : gi.attrs) {
        const auto it = s.privileged.find(attr);
        if (it == s.privileged.end()) return std::nullopt;
        key.push_back(it->second);
    }
    return find_group(gi, key);
}

// ---------------------------------------------------------------------------
// CSV.

namespace detail {

inline std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace detail

inline Dataset load_csv(const std::string& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open data file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("data file '" + path + "' is empty");
    const auto header = detail::parse_csv_line(line);
    std::map<std::string, std::size_t> col_of;
    for (std::size_t i = 0; i < header.size(); ++i) col_of[header[i]] = i;
    auto require = [&](const std::string& name) {
        const auto it = col_of.find(name);
        if (it == col_of.end()) {
            throw SchemaError("data file is missing column '" + name + "'");
        }
        return it->second;
    };

    const std::size_t label_col = require(schema.label);
    std::vector<std::size_t> feature_cols, protected_cols;
    for (const auto& f : schema.features) feature_cols.push_back(require(f));
    for (const auto& p : schema.protected_attrs) protected_cols.push_back(require(p));
    std::optional<std::size_t> weight_col;
    if (schema.weight_column) weight_col = require(*schema.weight_column);

    Dataset ds;
    ds.feature_names = schema.features;
    ds.protected_names = schema.protected_attrs;
    ds.sensitive_features = schema.sensitive_features;
    ds.label_name = schema.label;
    if (schema.weight_column) ds.weight_name = *schema.weight_column;
    ds.protected_cols.resize(schema.protected_attrs.size());

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        const auto fields = detail::parse_csv_line(line);
        if (fields.size() != header.size()) {
            throw ValidationError("row " + std::to_string(row) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(header.size()));
        }
        const std::string& y = fields[label_col];
        if (y == "0") {
            ds.labels.push_back(0);
        } else if (y == "1") {
            ds.labels.push_back(1);
        } else {
            throw ValidationError("non-binary label value '" + y + "' in row " +
                                  std::to_string(row));
        }
        std::vector<double> feat;
        for (std::size_t c : feature_cols) {
            feat.push_back(parse_double(fields[c], "row " + std::to_string(row)));
        }
        ds.features.push_back(std::move(feat));
        for (std::size_t a = 0; a < protected_cols.size(); ++a) {
            ds.protected_cols[a].push_back(fields[protected_cols[a]]);
        }
        if (weight_col) {
            const double w = parse_double(fields[*weight_col], "row " + std::to_string(row));
            ds.weights.push_back(w);
        }
    }
    validate(ds);
    return ds;
}

inline void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write data file '" + path + "'");
    for (std::size_t f = 0; f < ds.n_features(); ++f) {
        out << detail::csv_escape(ds.feature_names[f]) << ',';
    }
    for (const auto& p : ds.protected_names) out << detail::csv_escape(p) << ',';
    out << detail::csv_escape(ds.label_name);
    if (!ds.weights.empty()) out << ',' << detail::csv_escape(ds.weight_name);
    out << '\n';
    for (std::size_t i = 0; i < ds.n_records(); ++i) {
        for (std::size_t f = 0; f < ds.n_features(); ++f) {
            out << format_double(ds.features[i][f]) << ',';
        }
        for (const auto& col : ds.protected_cols) out << detail::csv_escape(col[i]) << ',';
        out << ds.labels[i];
        if (!ds.weights.empty()) out << ',' << format_double(ds.weights[i]);
        out << '\n';
    }
}

inline Schema schema_for(const Dataset& ds) {
    Schema s;
    s.label = ds.label_name;
    s.protected_attrs = ds.protected_names;
    s.features = ds.feature_names;
    s.sensitive_features = ds.sensitive_features;
    if (!ds.weights.empty()) s.weight_column = ds.weight_name;
    return s;
}

// One value per line; a non-numeric first line is treated as a header.
inline std::vector<double> load_value_column(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open value file '" + path + "'");
    std::vector<double> out;
    std::string line;
    std::size_t row = 0;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        double v = 0.0;
        const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
        if (res.ec != std::errc() || res.ptr != line.data() + line.size()) {
            if (first) {
                --row;  // header line
                first = false;
                continue;
            }
            throw ValidationError("unparsable value '" + line + "' in row " +
                                  std::to_string(row) + " of '" + path + "'");
        }
        first = false;
        out.push_back(v);
    }
    return out;
}

inline std::vector<int> load_binary_column(const std::string& path) {
    const auto values = load_value_column(path);
    std::vector<int> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == 0.0) {
            out.push_back(0);
        } else if (values[i] == 1.0) {
            out.push_back(1);
        } else {
            throw ValidationError("non-binary value in row " + std::to_string(i + 1) + " of '" +
                                  path + "'");
        }
    }
    return out;
}

template <typename T>
inline void write_value_column(const std::vector<T>& values, const std::string& header,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write value file '" + path + "'");
    out << header << '\n';
    for (const T& v : values) {
        if constexpr (std::is_floating_point_v<T>) {
            out << format_double(v) << '\n';
        } else {
            out << v << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Report and model JSON.

inline json json_rate(const std::optional<double>& v) {
    return v ? json(*v) : json("undefined");
}

inline json to_json(const FairnessReport& rep) {
    json j;
    j["report_version"] = 1;
    j["dp_ratio"] = json_rate(rep.dp_ratio);
    j["disparate_impact_flagged"] = rep.di_flagged;
    j["tau_di"] = rep.tau_di;
    j["tpr_gap"] = json_rate(rep.tpr_gap);
    j["fpr_gap"] = json_rate(rep.fpr_gap);
    j["eopp_gap"] = json_rate(rep.eopp_gap);
    j["ppv_gap"] = json_rate(rep.ppv_gap);
    j["fn_gap_max"] = json_rate(rep.fn_gap);
    j["weighted_loss"] = rep.weighted_loss;
    json groups = json::object();
    for (std::size_t g = 0; g < rep.group_names.size(); ++g) {
        const auto& c = rep.per_group[g];
        json entry;
        entry["tp"] = c.tp;
        entry["fp"] = c.fp;
        entry["tn"] = c.tn;
        entry["fn"] = c.fn;
        entry["fnr"] = json_rate(c.fnr());
        entry["fpr"] = json_rate(c.fpr());
        entry["tpr"] = json_rate(c.tpr());
        entry["ppv"] = json_rate(c.ppv());
        entry["positive_rate"] = json_rate(c.positive_rate());
        if (!rep.mean_scores.empty()) entry["mean_score"] = json_rate(rep.mean_scores[g]);
        groups[rep.group_names[g]] = std::move(entry);
    }
    j["per_group"] = std::move(groups);
    j["warnings"] = rep.warnings;
    return j;
}

inline json to_json(const SubgroupReport& rep) {
    json j;
    j["attrs"] = rep.attrs;
    j["potential_intersections"] = rep.potential_intersections;
    j["observed"] = rep.observed;
    j["supported"] = rep.supported;
    j["min_support"] = rep.min_support;
    j["pairwise_constraints"] = rep.pairwise_constraints;
    json rows = json::array();
    for (const auto& r : rep.rows) {
        json row;
        row["values"] = group_label(r.values);
        row["size"] = r.size;
        row["fnr"] = json_rate(r.fnr);
        row["fpr"] = json_rate(r.fpr);
        row["supported"] = r.supported;
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j;
}

inline json to_json(const Model& m, std::uint64_t seed) {
    json j;
    j["coefficients"] = m.coefficients;
    j["intercept"] = m.intercept;
    j["trained_with"] = {{"learning_rate", m.trained_with.learning_rate},
                         {"iterations", m.trained_with.iterations},
                         {"lambda_fair", m.trained_with.lambda_fair},
                         {"l2", m.trained_with.l2},
                         {"seed", seed}};
    return j;
}

inline Model model_from_json(const json& j) {
    Model m;
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    const auto& t = j.at("trained_with");
    m.trained_with.learning_rate = t.at("learning_rate").get<double>();
    m.trained_with.iterations = t.at("iterations").get<std::size_t>();
    m.trained_with.lambda_fair = t.at("lambda_fair").get<double>();
    m.trained_with.l2 = t.at("l2").get<double>();
    return m;
}

inline json to_json(const MixingResult& mix, const std::vector<std::string>& group_names) {
    json j;
    json groups = json::object();
    for (std::size_t g = 0; g < mix.per_group.size(); ++g) {
        groups[group_names[g]] = {{"q0", mix.per_group[g].q0},
                                  {"q1", mix.per_group[g].q1},
                                  {"tpr", mix.achieved_tpr[g]},
                                  {"fpr", mix.achieved_fpr[g]}};
    }
    j["per_group"] = std::move(groups);
    j["target_tpr"] = mix.target_tpr;
    j["target_fpr"] = mix.target_fpr;
    j["cost"] = mix.cost;
    return j;
}

// Instance JSON: {"d": [[...]], "loss": [[L0, L1], ...], "groups"?: [...],
// "epsilon"?: x}
inline std::pair<LipschitzInstance, std::optional<ParitySpec>> lipschitz_instance_from_json(
    const json& j) {
    LipschitzInstance inst;
    inst.d = j.at("d").get<Matrix>();
    for (const auto& pair : j.at("loss")) {
        if (!pair.is_array() || pair.size() != 2) {
            throw ValidationError("each loss entry must be [L0, L1]");
        }
        inst.loss.push_back({pair[0].get<double>(), pair[1].get<double>()});
    }
    std::optional<ParitySpec> parity;
    if (j.contains("groups")) {
        ParitySpec p;
        p.group = j.at("groups").get<std::vector<int>>();
        p.epsilon = j.value("epsilon", 0.0);
        parity = std::move(p);
    }
    return {std::move(inst), std::move(parity)};
}

inline void write_sweep_csv(const SweepResult& sweep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write sweep file '" + path + "'");
    out << "tau,loss,fn_gap";
    for (const auto& name : sweep.group_names) {
        out << ',' << detail::csv_escape("threshold_" + name);
    }
    out << '\n';
    for (const auto& row : sweep.rows) {
        out << format_double(row.tau) << ',' << format_double(row.loss) << ','
            << format_double(row.fn_gap);
        for (double t : row.thresholds) out << ',' << format_double(t);
        out << '\n';
    }
}

inline void save_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file '" + path + "'");
    out << j.dump(2) << '\n';
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
    return j;
}

}  // namespace fairaudit
