#pragma once

#include <charconv>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pigec/align.hpp"
#include "pigec/corpus.hpp"
#include "pigec/edits.hpp"
#include "pigec/errors.hpp"
#include "pigec/llm.hpp"
#include "pigec/text.hpp"

namespace pigec {

inline constexpr std::string_view kDefaultInstruction =
    "Correct the input text grammatically and explain the reason for each correction. "
    "If the input text is grammatically correct, only the input text should be generated as is.";

enum class Mode {
    PostWithPI,     // correct, then explain each extracted edit via inserted prompts
    PostWithoutPI,  // corrected text and explanations in one call
    PreWithoutPI,   // explanations first, then the corrected text, in one call
};

inline std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::PostWithPI: return "pi";
        case Mode::PostWithoutPI: return "post";
        case Mode::PreWithoutPI: return "pre";
    }
    return "?";
}

inline Mode mode_from_string(std::string_view s) {
    if (s == "pi") return Mode::PostWithPI;
    if (s == "post") return Mode::PostWithoutPI;
    if (s == "pre") return Mode::PreWithoutPI;
    throw FormatError("unknown mode '" + std::string(s) + "'");
}

/// Few-shot layout that goes with each generation mode.
inline Placement default_placement(Mode m) {
    return m == Mode::PreWithoutPI ? Placement::PreCorrection : Placement::PostCorrection;
}

struct PromptConfig {
    std::string instruction{kDefaultInstruction};
    FewShotSet few_shot{};
    Mode mode = Mode::PostWithPI;
    CostModel cost_model{};

    void validate() const {
        if (instruction.empty()) throw FormatError("instruction must not be empty");
        cost_model.validate();
    }
};

struct ExplanationRecord {
    Edit edit;
    std::string explanation;
    // False when the model named an edit that was not among the extracted
    // ones; `edit` is then rebuilt from the printed prefix.
    bool matched = true;

    friend bool operator==(const ExplanationRecord&, const ExplanationRecord&) = default;
};

struct PiResult {
    std::string id;
    Mode mode = Mode::PostWithPI;
    std::string source;
    std::string corrected;
    std::vector<ExplanationRecord> records;
    std::vector<std::string> warnings;  // malformed lines in baseline output
    std::string error;                  // set when generation failed for this input
    Transcript transcript;
};

// ---------------------------------------------------------------------------
// Prompt construction

/// "1. a → b: explanation"
inline std::string explanation_line(const Edit& e, std::string_view explanation) {
    std::string line = format_edit(e);
    line += ' ';
    line += explanation;
    return line;
}

inline std::string render_explanations(const XgecExample& ex) {
    std::string out = "Explanations:\n";
    for (std::size_t k = 0; k < ex.edits.size(); ++k) {
        out += explanation_line(ex.edits[k], k < ex.explanations.size() ? ex.explanations[k] : std::string());
        out += '\n';
    }
    return out;
}

inline std::string render_example(const XgecExample& ex, Placement placement) {
    std::string out = "Input: " + ex.source + "\n";
    switch (placement) {
        case Placement::None:
            out += "Output: " + ex.corrected + "\n";
            break;
        case Placement::PostCorrection:
            out += "Output: " + ex.corrected + "\n";
            out += render_explanations(ex);
            break;
        case Placement::PreCorrection:
            out += render_explanations(ex);
            out += "Output: " + ex.corrected + "\n";
            break;
    }
    out += '\n';
    return out;
}

/// Instruction, blank line, few-shot blocks, then the open block for `source`.
inline std::string build_prompt(const PromptConfig& config, std::string_view source) {
    config.validate();
    std::string out = config.instruction;
    out += "\n\n";
    for (const auto& ex : config.few_shot.examples) out += render_example(ex, config.few_shot.placement);
    out += "Input: ";
    out += source;
    out += config.mode == Mode::PreWithoutPI ? "\nExplanations:" : "\nOutput:";
    return out;
}

// ---------------------------------------------------------------------------
// Parsing numbered explanation lines

struct ParsedExplanation {
    std::size_t number = 0;
    std::string src_text;
    std::string tgt_text;
    std::string explanation;
};

/// Parse "N. a → b: explanation". The separator is the first " → " and the
/// side ends at the first ':' that follows it and is followed by a space or
/// the end of line.
inline std::optional<ParsedExplanation> parse_explanation_line(std::string_view line) {
    line = trim(line);
    std::size_t digits = 0;
    while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
    if (digits == 0 || digits + 2 > line.size() || line[digits] != '.' || line[digits + 1] != ' ') return std::nullopt;

    ParsedExplanation p;
    std::from_chars(line.data(), line.data() + digits, p.number);
    std::string_view rest = line.substr(digits + 2);
    const auto arrow = rest.find(kEditArrow);
    if (arrow == std::string_view::npos) return std::nullopt;
    p.src_text = std::string(trim(rest.substr(0, arrow)));
    std::string_view after = rest.substr(arrow + kEditArrow.size());

    std::size_t colon = std::string_view::npos;
    for (std::size_t i = 0; i < after.size(); ++i) {
        if (after[i] == ':' && (i + 1 == after.size() || after[i + 1] == ' ')) {
            colon = i;
            break;
        }
    }
    if (colon == std::string_view::npos) return std::nullopt;
    p.tgt_text = std::string(trim(after.substr(0, colon)));
    p.explanation = std::string(trim(after.substr(colon + 1)));
    if (p.src_text.empty() || p.tgt_text.empty()) return std::nullopt;
    return p;
}

namespace pi_detail {

inline std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto nl = s.find('\n', pos);
        if (nl == std::string_view::npos) nl = s.size();
        out.push_back(s.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return out;
}

// Match each parsed line against the extracted edits; unknown pairs become
// unmatched records with a synthetic edit.
inline std::vector<ExplanationRecord> attach(const std::vector<ParsedExplanation>& parsed,
                                             const std::vector<Edit>& edits) {
    std::vector<bool> used(edits.size(), false);
    std::vector<ExplanationRecord> records;
    for (const auto& p : parsed) {
        bool found = false;
        for (std::size_t k = 0; k < edits.size(); ++k) {
            if (!used[k] && edits[k].src_text == p.src_text && edits[k].tgt_text == p.tgt_text) {
                used[k] = true;
                records.push_back({edits[k], p.explanation, true});
                found = true;
                break;
            }
        }
        if (!found) {
            Edit synthetic;
            synthetic.index = p.number;
            synthetic.src_text = p.src_text;
            synthetic.tgt_text = p.tgt_text;
            records.push_back({std::move(synthetic), p.explanation, false});
        }
    }
    return records;
}

inline bool is_header(std::string_view line, std::string_view header) { return trim(line) == header; }

}  // namespace pi_detail

// ---------------------------------------------------------------------------
// Generation

/// Prompt Insertion: correct first, then feed each extracted edit back as a
/// numbered prompt and let the model complete one explanation line for it.
inline PiResult pi_explain(Backend& backend, const PromptConfig& config, std::string_view source,
                           SessionOptions options = {}) {
    if (config.mode != Mode::PostWithPI) throw FormatError("pi_explain requires mode PostWithPI");
    Session session(backend, std::move(options));
    PiResult result;
    result.mode = config.mode;
    result.source = std::string(source);

    std::string prompt = build_prompt(config, source);
    const std::string reply = session.complete(prompt, {"\n"});
    result.corrected = std::string(trim(reply));
    if (result.corrected.empty()) {
        result.transcript = session.take_transcript();
        throw EmptyCorrection("model returned an empty correction");
    }

    const auto edits = extract_edits(result.source, result.corrected, config.cost_model);
    if (!edits.empty()) {
        prompt += reply;
        prompt += "\nExplanations:\n";
        for (const auto& e : edits) {
            prompt += format_edit(e);
            prompt += ' ';
            const std::string explanation = session.complete(prompt, {"\n"});
            result.records.push_back({e, std::string(trim(explanation)), true});
            prompt += explanation;
            prompt += '\n';
        }
    }
    result.transcript = session.take_transcript();
    return result;
}

/// Baseline: one call producing the corrected text followed by an
/// "Explanations:" block.
inline PiResult post_explain_no_pi(Backend& backend, const PromptConfig& config, std::string_view source,
                                   SessionOptions options = {}) {
    if (config.mode != Mode::PostWithoutPI) throw FormatError("post_explain_no_pi requires mode PostWithoutPI");
    Session session(backend, std::move(options));
    PiResult result;
    result.mode = config.mode;
    result.source = std::string(source);

    const std::string reply = session.complete(build_prompt(config, source), {"\n\n"});
    result.transcript = session.take_transcript();

    const auto lines = pi_detail::split_lines(reply);
    std::size_t i = 0;
    while (i < lines.size() && trim(lines[i]).empty()) ++i;
    if (i == lines.size() || pi_detail::is_header(lines[i], "Explanations:"))
        throw EmptyCorrection("model returned an empty correction");
    result.corrected = std::string(trim(lines[i++]));

    std::vector<ParsedExplanation> parsed;
    bool in_block = false;
    for (; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty()) continue;
        if (!in_block && line == "Explanations:") {
            in_block = true;
            continue;
        }
        auto p = in_block ? parse_explanation_line(line) : std::nullopt;
        if (p) parsed.push_back(std::move(*p));
        else result.warnings.push_back("unparsed line: " + std::string(line));
    }
    result.records = pi_detail::attach(parsed, extract_edits(result.source, result.corrected, config.cost_model));
    return result;
}

/// Baseline: one call producing numbered explanations first and the
/// corrected text on a closing "Output:" line. Prompt insertion cannot
/// apply here because no correction exists yet to extract edits from.
inline PiResult pre_explain_no_pi(Backend& backend, const PromptConfig& config, std::string_view source,
                                  SessionOptions options = {}) {
    if (config.mode != Mode::PreWithoutPI) throw FormatError("pre_explain_no_pi requires mode PreWithoutPI");
    Session session(backend, std::move(options));
    PiResult result;
    result.mode = config.mode;
    result.source = std::string(source);

    const std::string reply = session.complete(build_prompt(config, source), {"\n\n"});
    result.transcript = session.take_transcript();

    std::vector<ParsedExplanation> parsed;
    std::optional<std::string> corrected;
    for (auto raw : pi_detail::split_lines(reply)) {
        const auto line = trim(raw);
        if (line.empty()) continue;
        if (corrected) {
            result.warnings.push_back("text after Output line: " + std::string(line));
            continue;
        }
        if (line.rfind("Output:", 0) == 0) {
            corrected = std::string(trim(line.substr(7)));
            continue;
        }
        if (auto p = parse_explanation_line(line)) parsed.push_back(std::move(*p));
        else result.warnings.push_back("unparsed line: " + std::string(line));
    }
    if (!corrected || corrected->empty()) throw EmptyCorrection("model returned no Output line");
    result.corrected = std::move(*corrected);
    result.records = pi_detail::attach(parsed, extract_edits(result.source, result.corrected, config.cost_model));
    return result;
}

/// Dispatch on config.mode.
inline PiResult explain(Backend& backend, const PromptConfig& config, std::string_view source,
                        SessionOptions options = {}) {
    switch (config.mode) {
        case Mode::PostWithPI: return pi_explain(backend, config, source, std::move(options));
        case Mode::PostWithoutPI: return post_explain_no_pi(backend, config, source, std::move(options));
        case Mode::PreWithoutPI: return pre_explain_no_pi(backend, config, source, std::move(options));
    }
    throw FormatError("unknown mode");
}

// ---------------------------------------------------------------------------
// Result persistence

inline nlohmann::json result_to_json(const PiResult& r) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& rec : r.records) {
        auto e = edit_to_json(rec.edit);
        e["index"] = rec.edit.index;
        records.push_back({{"edit", std::move(e)}, {"explanation", rec.explanation}, {"matched", rec.matched}});
    }
    return {{"id", r.id},         {"mode", to_string(r.mode)}, {"source", r.source},
            {"corrected", r.corrected}, {"records", std::move(records)}, {"warnings", r.warnings},
            {"error", r.error}};
}

inline PiResult result_from_json(const nlohmann::json& j) {
    PiResult r;
    r.id = j.at("id").get<std::string>();
    r.mode = mode_from_string(j.at("mode").get<std::string>());
    r.source = j.at("source").get<std::string>();
    r.corrected = j.at("corrected").get<std::string>();
    for (const auto& rec : j.at("records")) {
        const auto& e = rec.at("edit");
        r.records.push_back({edit_from_json(e, e.at("index").get<std::size_t>()),
                             rec.at("explanation").get<std::string>(), rec.value("matched", true)});
    }
    if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("error")) r.error = j.at("error").get<std::string>();
    return r;
}

inline std::vector<PiResult> read_results(std::istream& in) {
    std::vector<PiResult> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(result_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(e.what(), lineno);
        } catch (const FormatError& e) {
            throw SchemaError(e.what(), lineno);
        }
    }
    return out;
}

}  // namespace pigec
