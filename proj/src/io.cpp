#include "ibcal/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ibcal/version.hpp"

namespace ibcal::io {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SchemaError("cannot write file: " + path.string());
    out << bytes;
    if (!out) throw SchemaError("short write to file: " + path.string());
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void append_header(std::string& out, const FileMeta& meta) {
    out += std::string("# ") + kToolName + " " + kVersion + "\n";
    out += std::string("# unit: ") + unit_name(meta.unit) + "\n";
    out += "# config_hash: " + hex64(meta.config_hash) + "\n";
    for (const auto& [name, value] : meta.seeds) {
        out += "# seed:" + name + ": " + std::to_string(value) + "\n";
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

std::uint64_t parse_u64(std::string_view s, const std::string& context) {
    std::uint64_t value = 0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw SchemaError(context + ": expected an unsigned integer, got '" +
                          std::string(s) + "'");
    }
    return value;
}

json meta_to_json(const FileMeta& meta) {
    json seeds = json::object();
    for (const auto& [name, value] : meta.seeds) seeds[name] = value;
    return json{{"tool", kToolName},
                {"version", kVersion},
                {"unit", unit_name(meta.unit)},
                {"config_hash", hex64(meta.config_hash)},
                {"seeds", seeds}};
}

json hp_to_json(const HyperparameterPoint& hp) {
    return json{{"variant", variant_name(hp.variant)}, {"values", hp.values}};
}

HyperparameterPoint hp_from_json(const json& j) {
    HyperparameterPoint hp;
    hp.variant = parse_variant(j.at("variant").get<std::string>());
    hp.values = j.at("values").get<std::vector<double>>();
    hp.validate();
    return hp;
}

json optional_to_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

}  // namespace

std::uint64_t hash_bytes(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) h = (h ^ c) * 0x100000001b3ULL;
    return h;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(std::string_view s, const std::string& context) {
    double value = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw SchemaError(context + ": expected a number, got '" + std::string(s) + "'");
    }
    return value;
}

// ---- source PMF ----

void write_pmf_csv(const std::filesystem::path& path, const JointPMF& pmf,
                   const FileMeta& meta) {
    std::string out;
    append_header(out, meta);
    out += "# sizes: " + std::to_string(pmf.nu()) + "," + std::to_string(pmf.nv()) + "\n";
    for (std::size_t u = 0; u < pmf.nu(); ++u) {
        for (std::size_t v = 0; v < pmf.nv(); ++v) {
            if (v > 0) out += ",";
            out += fmt_double(pmf(u, v));
        }
        out += "\n";
    }
    write_file(path, out);
}

JointPMF load_pmf_csv(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv(line);
        std::vector<double> row;
        row.reserve(fields.size());
        for (const std::string& f : fields) {
            row.push_back(parse_double(f, path.string() + " line " + std::to_string(line_no)));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw SchemaError(path.string() + " line " + std::to_string(line_no) +
                              ": ragged matrix row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw SchemaError(path.string() + ": no matrix rows found");
    Mat m(rows.size(), rows.front().size());
    for (std::size_t u = 0; u < m.rows; ++u) {
        for (std::size_t v = 0; v < m.cols; ++v) m(u, v) = rows[u][v];
    }
    return JointPMF::from_matrix(std::move(m));
}

SourceSpec source_spec_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("source descriptor is not valid JSON: ") + e.what());
    }
    SourceSpec spec;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dsbs") {
        spec.kind = SourceSpec::Kind::Dsbs;
        spec.crossover = j.at("p").get<double>();
    } else if (kind == "dirichlet") {
        spec.kind = SourceSpec::Kind::Dirichlet;
        const auto sizes = j.at("sizes").get<std::vector<std::size_t>>();
        if (sizes.size() != 2) throw SchemaError("dirichlet source needs sizes: [|U|, |V|]");
        spec.nu = sizes[0];
        spec.nv = sizes[1];
        spec.concentration = j.value("concentration", 1.0);
        if (!j.contains("seed")) throw SchemaError("dirichlet source requires field 'seed'");
        spec.seed = j.at("seed").get<std::uint64_t>();
    } else if (kind == "matrix") {
        spec.kind = SourceSpec::Kind::Matrix;
        const auto rows = j.at("mass").get<std::vector<std::vector<double>>>();
        if (rows.empty()) throw SchemaError("matrix source needs a nonempty mass");
        Mat m(rows.size(), rows.front().size());
        for (std::size_t u = 0; u < m.rows; ++u) {
            if (rows[u].size() != m.cols) throw SchemaError("matrix source has ragged rows");
            for (std::size_t v = 0; v < m.cols; ++v) m(u, v) = rows[u][v];
        }
        spec.mass = std::move(m);
    } else {
        throw SchemaError("unknown source kind: '" + kind + "'");
    }
    return spec;
}

JointPMF load_source(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
        if (c == '{') return source_spec_from_json_text(text).realize();
        break;
    }
    return load_pmf_csv(path);
}

// ---- sample sets ----

void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples,
                       const FileMeta& meta) {
    std::string out;
    append_header(out, meta);
    out += "# sizes: " + std::to_string(samples.nu) + "," + std::to_string(samples.nv) + "\n";
    out += "# draw_seed: " + std::to_string(samples.seed) + "\n";
    out += "u,v\n";
    for (const auto& p : samples.pairs) {
        out += std::to_string(p.u) + "," + std::to_string(p.v) + "\n";
    }
    write_file(path, out);
}

SampleSet load_samples_csv(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    SampleSet out;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string ctx = path.string() + " line " + std::to_string(line_no);
            if (line.rfind("# sizes: ", 0) == 0) {
                const auto fields = split_csv(line.substr(9));
                if (fields.size() != 2) throw SchemaError(ctx + ": malformed sizes line");
                out.nu = parse_u64(fields[0], ctx);
                out.nv = parse_u64(fields[1], ctx);
            } else if (line.rfind("# draw_seed: ", 0) == 0) {
                out.seed = parse_u64(line.substr(13), ctx);
            }
            continue;
        }
        if (!saw_header) {
            if (line != "u,v") {
                throw SchemaError(path.string() + " line " + std::to_string(line_no) +
                                  ": expected header 'u,v'");
            }
            saw_header = true;
            continue;
        }
        const auto fields = split_csv(line);
        const std::string ctx = path.string() + " line " + std::to_string(line_no);
        if (fields.size() != 2) throw SchemaError(ctx + ": expected two columns");
        out.pairs.push_back({static_cast<std::uint32_t>(parse_u64(fields[0], ctx)),
                             static_cast<std::uint32_t>(parse_u64(fields[1], ctx))});
    }
    if (!saw_header) throw SchemaError(path.string() + ": missing 'u,v' header");
    if (out.pairs.empty()) throw SchemaError(path.string() + ": sample set is empty");
    if (out.nu == 0 || out.nv == 0) {
        throw SchemaError(path.string() + ": missing '# sizes:' metadata line");
    }
    for (const auto& p : out.pairs) {
        if (p.u >= out.nu || p.v >= out.nv) {
            throw SchemaError(path.string() + ": sample index outside declared alphabet");
        }
    }
    return out;
}

// ---- encoder grids ----

void write_encoder_grid(const std::filesystem::path& path,
                        std::span<const Encoder> encoders, const std::string& provenance,
                        const FileMeta& meta) {
    if (encoders.empty()) throw EmptyInput("cannot write an empty encoder grid");
    json j;
    j["meta"] = meta_to_json(meta);
    j["x_size"] = encoders.front().nx();
    j["t_size"] = encoders.front().nt();
    j["provenance"] = provenance;
    json list = json::array();
    for (std::size_t i = 0; i < encoders.size(); ++i) {
        const Encoder& e = encoders[i];
        list.push_back(json{{"grid_index", i},
                            {"hyperparameter", hp_to_json(e.hp)},
                            {"rows", e.rows.data},
                            {"diagnostics",
                             json{{"iterations", e.diag.iterations},
                                  {"final_objective", e.diag.final_objective},
                                  {"restart_index", e.diag.restart_index}}}});
    }
    j["encoders"] = std::move(list);
    write_file(path, j.dump(2) + "\n");
}

EncoderGridFile load_encoder_grid(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": invalid JSON: " + e.what());
    }
    EncoderGridFile out;
    try {
        out.provenance = j.value("provenance", std::string{});
        if (j.contains("meta")) {
            out.unit = parse_unit(j["meta"].value("unit", "nats"));
        }
        const std::size_t nx = j.at("x_size").get<std::size_t>();
        const std::size_t nt = j.at("t_size").get<std::size_t>();
        for (const json& e : j.at("encoders")) {
            Mat rows(nx, nt);
            const auto data = e.at("rows").get<std::vector<double>>();
            if (data.size() != nx * nt) {
                throw SchemaError(path.string() + ": encoder rows have the wrong length");
            }
            rows.data = data;
            Encoder::Diagnostics diag;
            if (e.contains("diagnostics")) {
                const json& d = e["diagnostics"];
                diag.iterations = d.value("iterations", std::size_t{0});
                diag.final_objective = d.value("final_objective", 0.0);
                diag.restart_index = d.value("restart_index", std::size_t{0});
            }
            out.encoders.push_back(
                make_encoder(std::move(rows), hp_from_json(e.at("hyperparameter")), diag));
        }
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": malformed encoder grid: " + e.what());
    }
    if (out.encoders.empty()) throw SchemaError(path.string() + ": encoder grid is empty");
    return out;
}

// ---- selection outcomes ----

namespace {

json eval_to_json(const CandidateEvaluation& ev) {
    return json{{"grid_index", ev.grid_index},
                {"hyperparameter", hp_to_json(ev.hp)},
                {"i_ty_opt", ev.i_ty_opt},
                {"i_xt_opt", ev.i_xt_opt},
                {"i_ty_mht", optional_to_json(ev.i_ty_mht)},
                {"i_xt_mht", optional_to_json(ev.i_xt_mht)},
                {"p_value", optional_to_json(ev.p_val)},
                {"i_ty_true", optional_to_json(ev.i_ty_true)},
                {"i_xt_true", optional_to_json(ev.i_xt_true)}};
}

}  // namespace

void write_outcome_json(const std::filesystem::path& path, const SelectionOutcome& outcome,
                        const ConventionalResult* baseline, const FileMeta& meta) {
    json j;
    j["meta"] = meta_to_json(meta);
    j["audit"] = json{{"alpha", outcome.audit.alpha},
                      {"delta", outcome.audit.delta},
                      {"n_opt", outcome.audit.n_opt},
                      {"n_mht", outcome.audit.n_mht},
                      {"seed", outcome.audit.seed},
                      {"unit", unit_name(outcome.audit.unit)}};
    json front = json::array();
    for (const CandidateEvaluation& ev : outcome.ordered_front) front.push_back(eval_to_json(ev));
    j["ordered_front"] = std::move(front);
    j["rejected_count"] = outcome.rejected_count;
    if (outcome.chosen) {
        j["lambda_star"] = hp_to_json(outcome.chosen_eval().hp);
        j["chosen_order_index"] = *outcome.chosen;
        j["chosen_grid_index"] = outcome.chosen_eval().grid_index;
    } else {
        j["lambda_star"] = nullptr;  // the procedure abstained
    }
    if (baseline != nullptr) {
        json b;
        if (baseline->chosen) {
            b["lambda_star"] = hp_to_json(baseline->evals[*baseline->chosen].hp);
            b["chosen_grid_index"] = *baseline->chosen;
        } else {
            b["lambda_star"] = nullptr;
        }
        json evals = json::array();
        for (const CandidateEvaluation& ev : baseline->evals) evals.push_back(eval_to_json(ev));
        b["evaluations"] = std::move(evals);
        j["baseline_conventional"] = std::move(b);
    }
    write_file(path, j.dump(2) + "\n");
}

void write_candidates_csv(const std::filesystem::path& path,
                          const SelectionOutcome& outcome, const FileMeta& meta) {
    std::string out;
    append_header(out, meta);
    out += "order,grid_index,variant,hp1,hp2,i_ty_opt,i_xt_opt,i_ty_mht,i_xt_mht,"
           "p_value,rejected,chosen,i_ty_true,i_xt_true\n";
    auto opt_field = [](const std::optional<double>& v) {
        return v ? fmt_double(*v) : std::string{};
    };
    for (std::size_t i = 0; i < outcome.ordered_front.size(); ++i) {
        const CandidateEvaluation& ev = outcome.ordered_front[i];
        out += std::to_string(i) + "," + std::to_string(ev.grid_index) + ",";
        out += variant_name(ev.hp.variant);
        out += "," + fmt_double(ev.hp.values[0]) + ",";
        if (ev.hp.values.size() > 1) out += fmt_double(ev.hp.values[1]);
        out += "," + fmt_double(ev.i_ty_opt) + "," + fmt_double(ev.i_xt_opt);
        out += "," + opt_field(ev.i_ty_mht) + "," + opt_field(ev.i_xt_mht);
        out += "," + opt_field(ev.p_val);
        out += "," + std::string(i < outcome.rejected_count ? "1" : "0");
        out += "," + std::string(outcome.chosen && *outcome.chosen == i ? "1" : "0");
        out += "," + opt_field(ev.i_ty_true) + "," + opt_field(ev.i_xt_true) + "\n";
    }
    write_file(path, out);
}

// ---- experiment artifacts ----

namespace {

void append_method_row(std::string& out, std::size_t trial, const char* method,
                       const MethodResult& m) {
    out += std::to_string(trial) + "," + method + ",";
    out += m.abstained ? "1" : "0";
    if (m.abstained) {
        out += ",,,,,,\n";
        return;
    }
    out += ",";
    out += variant_name(m.hp->variant);
    out += "," + fmt_double(m.hp->values[0]) + ",";
    if (m.hp->values.size() > 1) out += fmt_double(m.hp->values[1]);
    out += "," + fmt_double(m.exact_i_ty) + "," + fmt_double(m.exact_i_xt);
    out += ",";
    out += m.violated ? "1" : "0";
    out += "\n";
}

MethodResult method_from_fields(const std::vector<std::string>& f, const std::string& ctx) {
    MethodResult m;
    if (f[2] == "1") {
        m.abstained = true;
        return m;
    }
    if (f[2] != "0") throw SchemaError(ctx + ": abstained flag must be 0 or 1");
    m.abstained = false;
    HyperparameterPoint hp;
    hp.variant = parse_variant(f[3]);
    hp.values = {parse_double(f[4], ctx)};
    if (!f[5].empty()) hp.values.push_back(parse_double(f[5], ctx));
    hp.validate();
    m.hp = std::move(hp);
    m.exact_i_ty = parse_double(f[6], ctx);
    m.exact_i_xt = parse_double(f[7], ctx);
    if (f[8] == "1") {
        m.violated = true;
    } else if (f[8] == "0") {
        m.violated = false;
    } else {
        throw SchemaError(ctx + ": violated flag must be 0 or 1");
    }
    return m;
}

}  // namespace

void write_trials_csv(const std::filesystem::path& path,
                      std::span<const TrialRecord> records, const FileMeta& meta) {
    std::string out;
    append_header(out, meta);
    out += "trial,method,abstained,variant,hp1,hp2,exact_i_ty,exact_i_xt,violated\n";
    for (const TrialRecord& rec : records) {
        append_method_row(out, rec.index, "mht", rec.mht);
        append_method_row(out, rec.index, "conventional", rec.conventional);
    }
    write_file(path, out);
}

std::vector<TrialRecord> load_trials_csv(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    std::vector<TrialRecord> records;
    std::vector<std::pair<bool, bool>> seen;  // (mht row, conventional row) per trial
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line != "trial,method,abstained,variant,hp1,hp2,exact_i_ty,exact_i_xt,violated") {
                throw SchemaError(path.string() + " line " + std::to_string(line_no) +
                                  ": unexpected trials header");
            }
            saw_header = true;
            continue;
        }
        const auto fields = split_csv(line);
        const std::string ctx = path.string() + " row at line " + std::to_string(line_no);
        if (fields.size() != 9) throw SchemaError(ctx + ": expected 9 columns");
        if (fields[1].empty()) throw SchemaError(ctx + ": empty method field");
        const std::size_t trial = parse_u64(fields[0], ctx);
        if (records.empty() || records.back().index != trial) {
            if (!records.empty() && trial != records.back().index + 1) {
                throw SchemaError(ctx + ": trial indices must be consecutive");
            }
            if (records.empty() && trial != 0) {
                throw SchemaError(ctx + ": trials must start at 0");
            }
            records.push_back(TrialRecord{});
            records.back().index = trial;
            seen.emplace_back(false, false);
        }
        TrialRecord& rec = records.back();
        if (fields[1] == "mht") {
            if (seen.back().first) throw SchemaError(ctx + ": duplicate mht row");
            seen.back().first = true;
            rec.mht = method_from_fields(fields, ctx);
        } else if (fields[1] == "conventional") {
            if (seen.back().second) throw SchemaError(ctx + ": duplicate conventional row");
            seen.back().second = true;
            rec.conventional = method_from_fields(fields, ctx);
        } else {
            throw SchemaError(ctx + ": unknown method '" + fields[1] + "'");
        }
    }
    if (!saw_header) throw SchemaError(path.string() + ": missing trials header");
    if (records.empty()) throw SchemaError(path.string() + ": no trial rows");
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!seen[i].first || !seen[i].second) {
            throw SchemaError(path.string() + ": trial " + std::to_string(records[i].index) +
                              " is missing a method row");
        }
    }
    return records;
}

namespace {

json method_summary_to_json(const MethodSummary& m) {
    return json{{"trials", m.trials},
                {"abstentions", m.abstentions},
                {"violations", m.violations},
                {"outage_rate", m.outage_rate},
                {"abstention_rate", m.abstention_rate},
                {"mean_i_ty", m.mean_i_ty},
                {"std_i_ty", m.std_i_ty},
                {"mean_i_xt", m.mean_i_xt},
                {"std_i_xt", m.std_i_xt}};
}

MethodSummary method_summary_from_json(const json& j) {
    MethodSummary m;
    m.trials = j.at("trials").get<std::size_t>();
    m.abstentions = j.at("abstentions").get<std::size_t>();
    m.violations = j.at("violations").get<std::size_t>();
    m.outage_rate = j.at("outage_rate").get<double>();
    m.abstention_rate = j.at("abstention_rate").get<double>();
    m.mean_i_ty = j.at("mean_i_ty").get<double>();
    m.std_i_ty = j.at("std_i_ty").get<double>();
    m.mean_i_xt = j.at("mean_i_xt").get<double>();
    m.std_i_xt = j.at("std_i_xt").get<double>();
    return m;
}

}  // namespace

void write_summary_json(const std::filesystem::path& path, const SummaryStats& summary,
                        TrialMode mode, std::uint64_t master_seed, const FileMeta& meta) {
    json j;
    j["meta"] = meta_to_json(meta);
    j["alpha"] = summary.alpha;
    j["delta"] = summary.delta;
    j["trials"] = summary.trials;
    j["mode"] = trial_mode_name(mode);
    j["master_seed"] = master_seed;
    j["unit"] = unit_name(summary.unit);
    j["methods"] = json{{"mht", method_summary_to_json(summary.mht)},
                        {"conventional", method_summary_to_json(summary.conventional)}};
    write_file(path, j.dump(2) + "\n");
}

SummaryStats load_summary_json(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": invalid JSON: " + e.what());
    }
    SummaryStats s;
    try {
        s.alpha = j.at("alpha").get<double>();
        s.delta = j.at("delta").get<double>();
        s.trials = j.at("trials").get<std::size_t>();
        s.unit = parse_unit(j.value("unit", "nats"));
        s.mht = method_summary_from_json(j.at("methods").at("mht"));
        s.conventional = method_summary_from_json(j.at("methods").at("conventional"));
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": malformed summary: " + e.what());
    }
    return s;
}

void write_scatter_csv(const std::filesystem::path& path,
                       std::span<const TrialRecord> records, const FileMeta& meta) {
    std::string out;
    append_header(out, meta);
    out += "trial,method,exact_i_ty,exact_i_xt\n";
    for (const TrialRecord& rec : records) {
        if (!rec.mht.abstained) {
            out += std::to_string(rec.index) + ",mht," + fmt_double(rec.mht.exact_i_ty) +
                   "," + fmt_double(rec.mht.exact_i_xt) + "\n";
        }
        if (!rec.conventional.abstained) {
            out += std::to_string(rec.index) + ",conventional," +
                   fmt_double(rec.conventional.exact_i_ty) + "," +
                   fmt_double(rec.conventional.exact_i_xt) + "\n";
        }
    }
    write_file(path, out);
}

// ---- run configuration ----

namespace {

GridAxis axis_from_string(const std::string& s, const std::string& ctx) {
    // "log:<lo>:<hi>:<count>"
    if (s.rfind("log:", 0) != 0) {
        throw SchemaError(ctx + ": grid axis must look like log:<lo>:<hi>:<count>");
    }
    std::vector<std::string> parts;
    std::size_t start = 4;
    while (true) {
        const std::size_t pos = s.find(':', start);
        if (pos == std::string::npos) {
            parts.push_back(s.substr(start));
            break;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    if (parts.size() != 3) {
        throw SchemaError(ctx + ": grid axis must look like log:<lo>:<hi>:<count>");
    }
    GridAxis axis;
    axis.lo = parse_double(parts[0], ctx);
    axis.hi = parse_double(parts[1], ctx);
    axis.count = parse_u64(parts[2], ctx);
    return axis;
}

std::string axis_to_string(const GridAxis& a) {
    return "log:" + fmt_double(a.lo) + ":" + fmt_double(a.hi) + ":" +
           std::to_string(a.count);
}

json experiment_to_json(const ExperimentConfig& cfg);

json source_to_json(const SourceSpec& s) {
    switch (s.kind) {
        case SourceSpec::Kind::Dsbs:
            return json{{"kind", "dsbs"}, {"p", s.crossover}};
        case SourceSpec::Kind::Dirichlet:
            return json{{"kind", "dirichlet"},
                        {"sizes", std::vector<std::size_t>{s.nu, s.nv}},
                        {"concentration", s.concentration},
                        {"seed", s.seed}};
        case SourceSpec::Kind::Matrix: {
            std::vector<std::vector<double>> rows(s.mass.rows,
                                                  std::vector<double>(s.mass.cols));
            for (std::size_t u = 0; u < s.mass.rows; ++u) {
                for (std::size_t v = 0; v < s.mass.cols; ++v) rows[u][v] = s.mass(u, v);
            }
            return json{{"kind", "matrix"}, {"mass", rows}};
        }
    }
    throw OutOfRange("unknown source kind");
}

json experiment_to_json(const ExperimentConfig& cfg) {
    json j;
    j["seed"] = cfg.master_seed;
    j["unit"] = unit_name(cfg.unit);
    j["source"] = source_to_json(cfg.source);
    j["solver"] = json{{"variant", variant_name(cfg.grid.variant)},
                       {"t_size", cfg.solver.t_size},
                       {"max_iters", cfg.solver.max_iters},
                       {"conv_tol", cfg.solver.conv_tol},
                       {"restarts", cfg.solver.restarts},
                       {"init_concentration", cfg.solver.init_concentration},
                       {"n_train", cfg.n_train}};
    if (cfg.grid.variant == IbVariant::Deterministic) {
        j["grid"] = json{{"gamma", axis_to_string(cfg.grid.axis)},
                         {"beta", axis_to_string(cfg.grid.beta_axis)}};
    } else {
        j["grid"] = json{{"lambda", axis_to_string(cfg.grid.axis)}};
    }
    j["calibration"] = json{{"n_cal", cfg.n_cal}, {"opt_fraction", cfg.opt_fraction}};
    if (cfg.alpha) {
        j["mht"] = json{{"alpha", *cfg.alpha}, {"delta", cfg.delta}};
    } else {
        j["mht"] = json{{"alpha", "midrange"}, {"delta", cfg.delta}};
    }
    j["experiment"] = json{{"trials", cfg.trials}, {"mode", trial_mode_name(cfg.mode)}};
    return j;
}

}  // namespace

std::uint64_t config_hash(const ExperimentConfig& config) {
    return hash_bytes(experiment_to_json(config).dump());
}

RunConfig load_run_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": invalid JSON: " + e.what());
    }
    RunConfig rc;
    try {
        ExperimentConfig& cfg = rc.experiment;
        if (!j.contains("seed")) {
            throw SchemaError(path.string() + ": required field 'seed' is missing "
                              "(no wall-clock default)");
        }
        cfg.master_seed = j.at("seed").get<std::uint64_t>();
        cfg.unit = parse_unit(j.value("unit", "nats"));

        cfg.source = source_spec_from_json_text(j.at("source").dump());

        const json& solver = j.at("solver");
        cfg.grid.variant = parse_variant(solver.at("variant").get<std::string>());
        cfg.solver.t_size = solver.at("t_size").get<std::size_t>();
        cfg.solver.max_iters = solver.value("max_iters", std::size_t{2000});
        cfg.solver.conv_tol = solver.value("conv_tol", 1e-8);
        cfg.solver.restarts = solver.value("restarts", std::size_t{5});
        cfg.solver.init_concentration = solver.value("init_concentration", 1.0);

        const json& grid = j.at("grid");
        const std::string ctx = path.string() + " grid";
        if (cfg.grid.variant == IbVariant::Deterministic) {
            cfg.grid.axis = axis_from_string(grid.at("gamma").get<std::string>(), ctx);
            cfg.grid.beta_axis = axis_from_string(grid.at("beta").get<std::string>(), ctx);
        } else {
            cfg.grid.axis = axis_from_string(grid.at("lambda").get<std::string>(), ctx);
        }

        const json& cal = j.at("calibration");
        cfg.n_cal = cal.at("n_cal").get<std::size_t>();
        cfg.opt_fraction = cal.value("opt_fraction", 0.5);
        cfg.n_train = solver.value("n_train", std::size_t{0});

        const json& mht = j.at("mht");
        if (mht.at("alpha").is_string()) {
            if (mht.at("alpha").get<std::string>() != "midrange") {
                throw SchemaError(path.string() +
                                  ": mht.alpha must be a number or \"midrange\"");
            }
            cfg.alpha.reset();
        } else {
            cfg.alpha = mht.at("alpha").get<double>();
        }
        cfg.delta = mht.at("delta").get<double>();

        const json& exp = j.at("experiment");
        cfg.trials = exp.at("trials").get<std::size_t>();
        cfg.mode = parse_trial_mode(exp.value("mode", "redraw"));

        if (j.contains("output")) {
            rc.out_dir = j["output"].value("dir", std::string("out"));
        }
        rc.workers = j.value("workers", 0u);
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": malformed run config: " + e.what());
    }
    rc.config_hash = config_hash(rc.experiment);
    return rc;
}

std::string run_config_to_json_text(const RunConfig& rc) {
    json j = experiment_to_json(rc.experiment);
    j["output"] = json{{"dir", rc.out_dir.string()}};
    if (rc.workers != 0) j["workers"] = rc.workers;
    return j.dump(2) + "\n";
}

std::string render_summary_table(const SummaryStats& summary) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf), "alpha=%.6g delta=%.6g trials=%zu unit=%s\n",
                  summary.alpha, summary.delta, summary.trials, unit_name(summary.unit));
    out += buf;
    out += "method        outage  abstain  mean_i_ty  std_i_ty  mean_i_xt  std_i_xt\n";
    auto row = [&](const char* name, const MethodSummary& m) {
        std::snprintf(buf, sizeof(buf), "%-12s  %6.4f  %7.4f  %9.6f  %8.6f  %9.6f  %8.6f\n",
                      name, m.outage_rate, m.abstention_rate, m.mean_i_ty, m.std_i_ty,
                      m.mean_i_xt, m.std_i_xt);
        out += buf;
    };
    row("mht", summary.mht);
    row("conventional", summary.conventional);
    return out;
}

}  // namespace ibcal::io
