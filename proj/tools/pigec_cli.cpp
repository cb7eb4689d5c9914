// pigec: edit extraction, explanation generation and evaluation driver.
//
// Exit codes: 0 ok, 1 some examples failed, 2 usage or parse error.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pigec/llm_http.hpp"
#include "pigec/pigec.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

struct CostFlags {
    std::string insert = "1", del = "1", match = "0", case_only = "1/10", substitute_base = "2", transpose = "1";

    void add_to(CLI::App& app) {
        app.add_option("--cost-insert", insert, "Insertion cost")->capture_default_str();
        app.add_option("--cost-delete", del, "Deletion cost")->capture_default_str();
        app.add_option("--cost-match", match, "Match cost")->capture_default_str();
        app.add_option("--cost-case-only", case_only, "Case-only substitution cost")->capture_default_str();
        app.add_option("--cost-substitute-base", substitute_base, "Scale of the character-similarity cost")
            ->capture_default_str();
        app.add_option("--cost-transpose", transpose, "Per-token transposition cost")->capture_default_str();
    }

    pigec::CostModel model() const {
        pigec::CostModel c;
        c.insert_cost = pigec::parse_rational(insert);
        c.delete_cost = pigec::parse_rational(del);
        c.match_cost = pigec::parse_rational(match);
        c.case_only_substitute_cost = pigec::parse_rational(case_only);
        c.substitute_base = pigec::parse_rational(substitute_base);
        c.transpose_cost_per_token = pigec::parse_rational(transpose);
        c.validate();
        return c;
    }
};

json cost_model_json(const pigec::CostModel& c) {
    return {{"insert", pigec::to_string(c.insert_cost)},
            {"delete", pigec::to_string(c.delete_cost)},
            {"match", pigec::to_string(c.match_cost)},
            {"case_only", pigec::to_string(c.case_only_substitute_cost)},
            {"substitute_base", pigec::to_string(c.substitute_base)},
            {"transpose", pigec::to_string(c.transpose_cost_per_token)}};
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw pigec::IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw pigec::IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw pigec::IoError("cannot write " + path.string());
    out << content;
    if (!out) throw pigec::IoError("write failed for " + path.string());
}

json edits_json(const std::vector<pigec::Edit>& edits) {
    json arr = json::array();
    for (const auto& e : edits) {
        auto j = pigec::edit_to_json(e);
        j["index"] = e.index;
        arr.push_back(std::move(j));
    }
    return arr;
}

// ---------------------------------------------------------------------------
// extract-edits / apply

struct ExtractArgs {
    std::string src, tgt, m2;
    int annotator = 0;
    CostFlags costs;
};

int cmd_extract_edits(const ExtractArgs& a) {
    const auto costs = a.costs.model();
    if (!a.m2.empty()) {
        std::ifstream in(a.m2);
        if (!in) throw pigec::IoError("cannot open " + a.m2);
        for (const auto& entry : pigec::parse_m2(in)) {
            const auto target = pigec::apply_m2_tokens(entry, a.annotator);
            const auto edits = pigec::merge_ops(pigec::align(entry.source_tokens, target, costs), entry.source_tokens,
                                                target);
            std::cout << edits_json(edits).dump() << '\n';
        }
        return kExitOk;
    }
    const auto src = read_lines(a.src);
    const auto tgt = read_lines(a.tgt);
    if (src.size() != tgt.size())
        throw pigec::LengthMismatch(a.src + " has " + std::to_string(src.size()) + " lines but " + a.tgt + " has " +
                                    std::to_string(tgt.size()));
    for (std::size_t i = 0; i < src.size(); ++i)
        std::cout << edits_json(pigec::extract_edits(src[i], tgt[i], costs)).dump() << '\n';
    return kExitOk;
}

int cmd_apply(const std::string& src_path, const std::string& edits_path) {
    const auto src = read_lines(src_path);
    std::vector<std::string> edit_lines;
    if (edits_path.empty() || edits_path == "-") {
        std::string line;
        while (std::getline(std::cin, line)) edit_lines.push_back(line);
    } else {
        edit_lines = read_lines(edits_path);
    }
    if (src.size() != edit_lines.size())
        throw pigec::LengthMismatch(std::to_string(src.size()) + " source lines but " +
                                    std::to_string(edit_lines.size()) + " edit lines");
    for (std::size_t i = 0; i < src.size(); ++i) {
        std::vector<pigec::Edit> edits;
        try {
            const auto arr = json::parse(edit_lines[i]);
            for (std::size_t k = 0; k < arr.size(); ++k)
                edits.push_back(pigec::edit_from_json(arr[k], arr[k].value("index", k + 1)));
        } catch (const json::exception& e) {
            throw pigec::SchemaError(e.what(), i + 1);
        }
        std::cout << pigec::apply_edits(src[i], edits) << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// explain

struct ExplainArgs {
    std::string corpus, text, text_id = "text-1";
    std::string mode = "pi";
    std::size_t k = 16;
    bool k_given = false;
    std::uint64_t seed = 0;
    bool resample = false;
    std::string examples;
    std::string backend = "live";
    std::string wire = "chat";
    int jobs = 1;
    bool no_validate = false;
    bool single_call = false;
    std::string out = "results.jsonl";
    std::string transcripts;
    std::string instruction_file;
    int max_tokens = 256;
    std::string replay;
    std::optional<std::string> instruction;  // restored by --replay
    CostFlags costs;
};

struct Workload {
    std::vector<pigec::XgecExample> inputs;  // only id and source are used
    std::vector<pigec::XgecExample> pool;
};

std::string transcript_file_name(std::size_t ordinal, const std::string& id) {
    std::string safe;
    for (char c : id) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    char buf[16];
    std::snprintf(buf, sizeof buf, "%05zu", ordinal);
    return std::string(buf) + "-" + safe + ".json";
}

json fingerprint_json(const ExplainArgs& a, const pigec::CostModel& costs, const std::string& model,
                      const std::string& instruction, std::string_view mode) {
    return {{"mode", mode},
            {"k", a.k},
            {"seed", a.seed},
            {"resample", a.resample},
            {"backend", a.backend},
            {"wire", a.wire},
            {"model", model},
            {"max_tokens", a.max_tokens},
            {"temperature", 0.0},
            {"corpus", a.corpus},
            {"examples", a.examples},
            {"instruction", instruction},
            {"cost_model", cost_model_json(costs)}};
}

// Fills explain arguments from a fingerprint written by an earlier run.
void apply_fingerprint(ExplainArgs& a, const json& fp) {
    a.mode = fp.at("mode").get<std::string>();
    a.k = fp.at("k").get<std::size_t>();
    a.k_given = true;
    a.seed = fp.at("seed").get<std::uint64_t>();
    a.resample = fp.at("resample").get<bool>();
    a.backend = fp.at("backend").get<std::string>();
    a.wire = fp.at("wire").get<std::string>();
    a.max_tokens = fp.at("max_tokens").get<int>();
    a.examples = fp.at("examples").get<std::string>();
    if (a.corpus.empty() && a.text.empty()) a.corpus = fp.value("corpus", std::string());
    a.instruction = fp.at("instruction").get<std::string>();
    const auto& c = fp.at("cost_model");
    a.costs.insert = c.at("insert").get<std::string>();
    a.costs.del = c.at("delete").get<std::string>();
    a.costs.match = c.at("match").get<std::string>();
    a.costs.case_only = c.at("case_only").get<std::string>();
    a.costs.substitute_base = c.at("substitute_base").get<std::string>();
    a.costs.transpose = c.at("transpose").get<std::string>();
}

int run_mode(const ExplainArgs& a, const Workload& w, pigec::Mode mode, pigec::Backend& backend, bool live,
             const fs::path& out_path, const fs::path& transcript_dir, const std::string& instruction) {
    const auto costs = a.costs.model();
    const std::size_t n = w.inputs.size();
    std::vector<pigec::PiResult> results(n);

    pigec::PromptConfig base;
    base.instruction = instruction;
    base.mode = mode;
    base.cost_model = costs;
    const auto placement = pigec::default_placement(mode);
    if (!a.resample) base.few_shot = pigec::sample_few_shot(w.pool, a.k, a.seed, placement);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            const auto& input = w.inputs[i];
            pigec::PromptConfig config = base;
            if (a.resample) config.few_shot = pigec::sample_few_shot(w.pool, a.k, pigec::instance_seed(a.seed, i), placement);
            pigec::SessionOptions options;
            options.max_tokens = a.max_tokens;
            options.clock = live ? pigec::wall_clock() : pigec::logical_clock();
            pigec::PiResult r;
            try {
                r = pigec::explain(backend, config, input.source, options);
            } catch (const std::exception& e) {
                r.mode = mode;
                r.source = input.source;
                r.error = e.what();
            }
            r.id = input.id;
            results[i] = std::move(r);
        }
    };
    const int jobs = std::max(1, a.jobs);
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::string out;
    int failures = 0;
    fs::create_directories(transcript_dir);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = results[i];
        if (!r.error.empty()) {
            ++failures;
            std::cerr << "pigec: [" << pigec::to_string(mode) << "] example '" << r.id << "' failed: " << r.error
                      << '\n';
        }
        out += pigec::result_to_json(r).dump() + "\n";
        json tj = pigec::transcript_to_json(r.transcript);
        tj["id"] = r.id;
        tj["mode"] = pigec::to_string(mode);
        write_file(transcript_dir / transcript_file_name(i, r.id), tj.dump(2) + "\n");
    }
    write_file(out_path, out);
    write_file(fs::path(out_path.string() + ".fingerprint.json"),
               fingerprint_json(a, costs, backend.model_name(), instruction, pigec::to_string(mode)).dump(2) + "\n");
    return failures;
}

int cmd_explain(ExplainArgs a) {
    if (!a.replay.empty()) apply_fingerprint(a, json::parse(read_file(a.replay)));
    if (a.corpus.empty() && a.text.empty()) throw CLI::ValidationError("explain", "need --corpus or --text");

    std::vector<std::string> modes;
    if (a.mode == "all") modes = {"pi", "post", "pre"};
    else {
        pigec::mode_from_string(a.mode);
        modes = {a.mode};
    }
    if (a.single_call && std::find(modes.begin(), modes.end(), "pi") != modes.end())
        throw CLI::ValidationError("--single-call", "prompt insertion makes one call per edit; use --mode post or pre");

    const auto costs = a.costs.model();
    pigec::LoadOptions load{costs, !a.no_validate};
    Workload w;
    if (!a.corpus.empty()) w.inputs = pigec::load_inputs(a.corpus);
    else w.inputs.push_back(pigec::XgecExample{a.text_id, a.text, "", {}, {}});
    if (!a.examples.empty()) w.pool = pigec::load_corpus(a.examples, load);
    else if (a.k_given && a.k > 0) throw CLI::ValidationError("--k", "few-shot examples need --examples");
    else a.k = 0;
    if (a.k > w.pool.size())
        throw pigec::NotEnoughExamples("--k " + std::to_string(a.k) + " exceeds the " +
                                       std::to_string(w.pool.size()) + " available examples");

    std::string instruction(pigec::kDefaultInstruction);
    if (!a.instruction_file.empty()) instruction = std::string(pigec::trim(read_file(a.instruction_file)));
    else if (a.instruction) instruction = *a.instruction;

    std::unique_ptr<pigec::Backend> backend;
    bool live = false;
    if (a.backend == "live") {
        auto config = pigec::HttpBackendConfig::from_env();
        config.max_concurrency = std::max(1, a.jobs);
        if (a.wire == "completion") config.wire = pigec::WireFormat::Completion;
        else if (a.wire != "chat") throw CLI::ValidationError("--wire", "expected chat or completion");
        backend = std::make_unique<pigec::HttpBackend>(config);
        live = true;
    } else if (a.backend.rfind("mock:", 0) == 0) {
        backend = std::make_unique<pigec::ScriptedMock>(pigec::ScriptedMock::load(a.backend.substr(5)));
    } else {
        throw CLI::ValidationError("--backend", "expected 'live' or 'mock:<script.json>'");
    }

    const fs::path out(a.out);
    int failures = 0;
    for (const auto& m : modes) {
        fs::path out_path = out;
        fs::path tdir = a.transcripts.empty() ? fs::path(out.string() + ".transcripts") : fs::path(a.transcripts);
        if (modes.size() > 1) {
            out_path = out.parent_path() / (out.stem().string() + "." + m + out.extension().string());
            tdir = fs::path(tdir.string() + "." + m);
        }
        failures += run_mode(a, w, pigec::mode_from_string(m), *backend, live, out_path, tdir, instruction);
    }
    return failures ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate / annotate

std::vector<pigec::PiResult> load_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw pigec::IoError("cannot open " + path);
    return pigec::read_results(in);
}

int cmd_evaluate(const std::vector<std::string>& result_paths, const std::string& refs_path,
                 const std::string& report_path, bool no_validate, const CostFlags& flags) {
    const auto costs = flags.model();
    const auto refs = pigec::load_corpus(refs_path, {costs, !no_validate});
    pigec::EvalReport report;
    json fingerprints = json::object();
    for (const auto& path : result_paths) {
        const auto results = load_results(path);
        if (results.size() != refs.size())
            throw pigec::LengthMismatch(path + " has " + std::to_string(results.size()) + " results but " +
                                        std::to_string(refs.size()) + " references");
        for (std::size_t i = 0; i < results.size(); ++i)
            if (results[i].id != refs[i].id)
                throw pigec::LengthMismatch("id mismatch at line " + std::to_string(i + 1) + ": '" + results[i].id +
                                            "' vs '" + refs[i].id + "'");
        const std::string name = results.empty() ? fs::path(path).stem().string()
                                                 : std::string(pigec::to_string(results.front().mode));
        report.systems.push_back(pigec::evaluate_system(results, refs, name, costs));
        const fs::path fp(path + ".fingerprint.json");
        fingerprints[name] = fs::exists(fp) ? json::parse(read_file(fp)) : json::object();
    }
    report.fingerprint = {{"references", refs_path}, {"cost_model", cost_model_json(costs)}, {"runs", fingerprints}};
    pigec::print_report_table(report, std::cout);
    if (!report_path.empty()) pigec::save_report(report, report_path);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Edit extraction and prompt-insertion explanations for grammatical error correction"};
    app.require_subcommand(1);

    ExtractArgs ex;
    auto* extract = app.add_subcommand("extract-edits", "Print one JSON array of edits per sentence pair");
    auto* src_opt = extract->add_option("--src", ex.src, "Source sentences, one per line");
    auto* tgt_opt = extract->add_option("--tgt", ex.tgt, "Corrected sentences, one per line");
    auto* m2_opt = extract->add_option("--m2", ex.m2, "M2 file instead of --src/--tgt");
    extract->add_option("--annotator", ex.annotator, "Annotator to apply from the M2 file")->capture_default_str();
    src_opt->needs(tgt_opt);
    tgt_opt->needs(src_opt);
    m2_opt->excludes(src_opt)->excludes(tgt_opt);
    ex.costs.add_to(*extract);

    std::string apply_src, apply_edits_path;
    auto* apply = app.add_subcommand("apply", "Apply edit arrays (stdin by default) to source sentences");
    apply->add_option("--src", apply_src, "Source sentences, one per line")->required();
    apply->add_option("--edits", apply_edits_path, "Edits JSONL from extract-edits ('-' for stdin)");

    ExplainArgs xa;
    auto* explain = app.add_subcommand("explain", "Generate corrections and explanations");
    auto* corpus_opt = explain->add_option("--corpus", xa.corpus, "Input JSONL, one {\"id\", \"source\"} object per line");
    auto* text_opt = explain->add_option("--text", xa.text, "Single input text");
    corpus_opt->excludes(text_opt);
    explain->add_option("--id", xa.text_id, "Id used with --text")->capture_default_str();
    explain->add_option("--mode", xa.mode, "pi, post, pre or all")
        ->check(CLI::IsMember({"pi", "post", "pre", "all"}))
        ->capture_default_str();
    auto* k_opt = explain->add_option("--k", xa.k, "Few-shot examples per prompt")->capture_default_str();
    explain->add_option("--seed", xa.seed, "Few-shot sampling seed")->capture_default_str();
    explain->add_flag("--resample", xa.resample, "Draw fresh few-shot examples for every input");
    explain->add_option("--examples", xa.examples, "Few-shot pool (XGEC JSONL)");
    explain->add_option("--backend", xa.backend, "live or mock:<script.json>")->capture_default_str();
    explain->add_option("--wire", xa.wire, "Live wire format: chat or completion")->capture_default_str();
    explain->add_option("--jobs", xa.jobs, "Inputs processed in parallel")->capture_default_str();
    explain->add_flag("--no-validate", xa.no_validate, "Skip recomputing stored edits on load");
    explain->add_flag("--single-call", xa.single_call, "Assert one backend call per input (post/pre only)");
    explain->add_option("--out", xa.out, "Results JSONL")->capture_default_str();
    explain->add_option("--transcripts", xa.transcripts, "Transcript directory (default <out>.transcripts)");
    explain->add_option("--instruction-file", xa.instruction_file, "Replace the default instruction");
    explain->add_option("--max-tokens", xa.max_tokens, "Per-call token limit")->capture_default_str();
    explain->add_option("--replay", xa.replay, "Reuse settings from a <out>.fingerprint.json");
    xa.costs.add_to(*explain);

    std::vector<std::string> eval_results;
    std::string eval_refs, eval_report;
    bool eval_no_validate = false;
    CostFlags eval_costs;
    auto* evaluate = app.add_subcommand("evaluate", "Score results against reference explanations");
    evaluate->add_option("--results", eval_results, "Results JSONL (repeatable, one per system)")->required();
    evaluate->add_option("--references", eval_refs, "Reference XGEC JSONL")->required();
    evaluate->add_option("--report", eval_report, "Write the JSON report here");
    evaluate->add_flag("--no-validate", eval_no_validate, "Skip recomputing stored edits on load");
    eval_costs.add_to(*evaluate);

    std::string ann_results, ann_out;
    auto* annotate = app.add_subcommand("annotate", "Export a CSV sheet for human validity/coverage scoring");
    annotate->add_option("--results", ann_results, "Results JSONL")->required();
    annotate->add_option("--out", ann_out, "CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*extract) {
            if (ex.m2.empty() && ex.src.empty()) throw CLI::ValidationError("extract-edits", "need --src/--tgt or --m2");
            return cmd_extract_edits(ex);
        }
        if (*apply) return cmd_apply(apply_src, apply_edits_path);
        if (*explain) {
            xa.k_given = k_opt->count() > 0;
            if (xa.corpus.empty() && xa.text.empty() && xa.replay.empty())
                throw CLI::ValidationError("explain", "need --corpus or --text");
            return cmd_explain(xa);
        }
        if (*evaluate) return cmd_evaluate(eval_results, eval_refs, eval_report, eval_no_validate, eval_costs);
        if (*annotate) {
            pigec::export_annotation_sheet(load_results(ann_results), ann_out);
            return kExitOk;
        }
    } catch (const CLI::Error& e) {
        std::cerr << "pigec: " << e.what() << '\n';
        return kExitUsage;
    } catch (const pigec::Error& e) {
        std::cerr << "pigec: " << e.what() << '\n';
        return kExitUsage;
    } catch (const json::exception& e) {
        std::cerr << "pigec: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "pigec: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
