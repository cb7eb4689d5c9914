#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pigec/edits.hpp"
#include "pigec/errors.hpp"

namespace pigec {

/// Incorrect text, its correction, and one explanation per edit.
struct XgecExample {
    std::string id;
    std::string source;
    std::string corrected;
    std::vector<Edit> edits;
    std::vector<std::string> explanations;

    friend bool operator==(const XgecExample&, const XgecExample&) = default;
};

/// Where explanations sit relative to the corrected text in a few-shot block.
enum class Placement { None, PreCorrection, PostCorrection };

struct FewShotSet {
    std::vector<XgecExample> examples;
    std::uint64_t seed = 0;
    Placement placement = Placement::PostCorrection;
};

/// Builds an example whose edits are recomputed from the two texts.
inline XgecExample make_example(std::string id, std::string source, std::string corrected,
                                std::vector<std::string> explanations, const CostModel& costs = {}) {
    XgecExample ex{std::move(id), std::move(source), std::move(corrected), {}, std::move(explanations)};
    ex.edits = extract_edits(ex.source, ex.corrected, costs);
    return ex;
}

// ---------------------------------------------------------------------------
// JSON-lines persistence

inline nlohmann::json edit_to_json(const Edit& e) {
    return {{"src_start", e.src_start}, {"src_end", e.src_end}, {"src_text", e.src_text}, {"tgt_text", e.tgt_text}};
}

inline Edit edit_from_json(const nlohmann::json& j, std::size_t index) {
    Edit e;
    e.index = index;
    e.src_start = j.at("src_start").get<std::size_t>();
    e.src_end = j.at("src_end").get<std::size_t>();
    e.src_text = j.at("src_text").get<std::string>();
    e.tgt_text = j.at("tgt_text").get<std::string>();
    return e;
}

inline nlohmann::json example_to_json(const XgecExample& ex) {
    nlohmann::json edits = nlohmann::json::array();
    for (const auto& e : ex.edits) edits.push_back(edit_to_json(e));
    return {{"id", ex.id},
            {"source", ex.source},
            {"corrected", ex.corrected},
            {"edits", std::move(edits)},
            {"explanations", ex.explanations}};
}

struct LoadOptions {
    CostModel costs{};
    bool validate = true;  // recompute edits and compare
};

inline std::vector<XgecExample> read_corpus(std::istream& in, const LoadOptions& options = {}) {
    std::vector<XgecExample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        XgecExample ex;
        try {
            const auto j = nlohmann::json::parse(line);
            ex.id = j.at("id").get<std::string>();
            ex.source = j.at("source").get<std::string>();
            ex.corrected = j.at("corrected").get<std::string>();
            const auto& edits = j.at("edits");
            if (!edits.is_array()) throw SchemaError("'edits' must be an array", lineno);
            for (std::size_t k = 0; k < edits.size(); ++k) ex.edits.push_back(edit_from_json(edits[k], k + 1));
            ex.explanations = j.at("explanations").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& err) {
            throw SchemaError(err.what(), lineno);
        }
        if (ex.explanations.size() != ex.edits.size())
            throw SchemaError("example '" + ex.id + "' has " + std::to_string(ex.edits.size()) + " edits but " +
                                  std::to_string(ex.explanations.size()) + " explanations",
                              lineno);
        if (options.validate && extract_edits(ex.source, ex.corrected, options.costs) != ex.edits)
            throw EditMismatchError("stored edits of '" + ex.id + "' differ from recomputed edits", lineno);
        out.push_back(std::move(ex));
    }
    return out;
}

inline std::vector<XgecExample> load_corpus(const std::filesystem::path& path, const LoadOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus " + path.string());
    return read_corpus(in, options);
}

/// Inputs for generation: every line needs "id" and "source"; any other
/// fields are ignored, so a full corpus file works too.
inline std::vector<XgecExample> read_inputs(std::istream& in) {
    std::vector<XgecExample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        XgecExample ex;
        try {
            const auto j = nlohmann::json::parse(line);
            ex.id = j.at("id").get<std::string>();
            ex.source = j.at("source").get<std::string>();
        } catch (const nlohmann::json::exception& err) {
            throw SchemaError(err.what(), lineno);
        }
        out.push_back(std::move(ex));
    }
    return out;
}

inline std::vector<XgecExample> load_inputs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open inputs " + path.string());
    return read_inputs(in);
}

inline std::string write_corpus(const std::vector<XgecExample>& examples) {
    std::string out;
    for (const auto& ex : examples) {
        out += example_to_json(ex).dump();
        out += '\n';
    }
    return out;
}

inline void save_corpus(const std::vector<XgecExample>& examples, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write corpus " + path.string());
    out << write_corpus(examples);
    if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Few-shot sampling

/// Uniform integer in [0, bound) from a 64-bit engine, by rejection.
/// Spelled out so draws are identical on every standard library.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

/// Draw k examples without replacement; deterministic given the seed.
inline FewShotSet sample_few_shot(const std::vector<XgecExample>& corpus, std::size_t k, std::uint64_t seed,
                                  Placement placement = Placement::PostCorrection) {
    if (k > corpus.size())
        throw NotEnoughExamples("requested " + std::to_string(k) + " few-shot examples from a corpus of " +
                                std::to_string(corpus.size()));
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    FewShotSet set;
    set.seed = seed;
    set.placement = placement;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, order.size() - i));
        std::swap(order[i], order[j]);
        set.examples.push_back(corpus[order[i]]);
    }
    return set;
}

/// Seed for the few-shot draw of the n-th test instance.
inline std::uint64_t instance_seed(std::uint64_t base_seed, std::uint64_t ordinal) { return base_seed ^ ordinal; }

}  // namespace pigec
