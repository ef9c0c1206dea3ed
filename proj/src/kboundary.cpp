#include "libra/kboundary.hpp"

#include <algorithm>

#include "libra/corpus.hpp"
#include "libra/errors.hpp"

namespace libra::kboundary {

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

std::set<std::string> sentence_words(const triplets::Triplet& t) {
    std::set<std::string> words;
    for (const auto* tokens : {&t.split.u_left, &t.split.omega, &t.anti_term, &t.unrelated_term, &t.split.u_right})
        for (const auto& tok : *tokens)
            if (is_alphabetic(tok)) words.insert(utf8::lower(tok));
    return words;
}

}  // namespace

Dictionary::Dictionary(std::vector<std::string> words) {
    for (auto& w : words) {
        auto n = utf8::lower(trim(w));
        if (!n.empty()) words_.insert(std::move(n));
    }
}

Dictionary Dictionary::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ValidationError("dictionary not found: " + path.string());
    Dictionary d(read_word_list(path));
    if (d.size() == 0) throw ValidationError("dictionary is empty: " + path.string());
    return d;
}

bool Dictionary::covers(std::string_view word) const {
    for (const auto& stem : variant_stems(utf8::lower(word)))
        if (contains(stem)) return true;
    return false;
}

std::vector<std::string> variant_stems(std::string_view word) {
    std::vector<std::string> out{std::string(word)};
    auto add = [&](std::string_view stem) {
        if (stem.empty()) return;
        out.emplace_back(stem);
    };
    auto strip = [&](std::string_view suffix, bool undouble) {
        if (!ends_with(word, suffix)) return;
        const auto stem = word.substr(0, word.size() - suffix.size());
        add(stem);
        if (undouble && stem.size() >= 2 && stem.back() == stem[stem.size() - 2] && !is_vowel(stem.back()) &&
            utf8::is_letter(static_cast<unsigned char>(stem.back())))
            add(stem.substr(0, stem.size() - 1));
    };
    strip("'s", false);
    strip("s", false);
    strip("es", false);
    strip("ed", true);
    strip("ing", true);
    // silent-e and y->i forms: arrived -> arrive, families -> family
    if (ends_with(word, "ed") || ends_with(word, "ing")) {
        const auto stem = word.substr(0, word.size() - (ends_with(word, "ed") ? 2 : 3));
        if (!stem.empty()) add(std::string(stem) + "e");
    }
    if (ends_with(word, "ies") && word.size() > 3) add(std::string(word.substr(0, word.size() - 3)) + "y");
    if (ends_with(word, "ied") && word.size() > 3) add(std::string(word.substr(0, word.size() - 3)) + "y");
    return out;
}

Glossary load_glossary(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ValidationError("glossary not found: " + path.string());
    const auto j = read_json_file(path);
    if (!j.is_object()) throw ValidationError("glossary must be a JSON object of word -> definition");
    Glossary g;
    for (const auto& [word, def] : j.items()) {
        if (!def.is_string() || trim(def.get<std::string>()).empty())
            throw ValidationError("glossary entry '" + word + "' must be a non-empty string");
        g[utf8::lower(trim(word))] = trim(def.get<std::string>());
    }
    return g;
}

bool is_alphabetic(std::string_view token) {
    const auto cps = utf8::decode(token);
    if (cps.empty() || !utf8::is_letter(cps.front()) || !utf8::is_letter(cps.back())) return false;
    for (char32_t c : cps)
        if (!utf8::is_letter(c) && c != U'\'' && c != U'’') return false;
    return true;
}

std::vector<LocalWord> extract_local_vocab(const triplets::Dataset& dataset, const Dictionary& dictionary,
                                           const Glossary& glossary) {
    std::map<std::string, LocalWord> vocab;
    for (const auto& t : dataset.triplets()) {
        if (t.status == triplets::Status::rejected) continue;
        for (const auto& tokens : {t.stereo_tokens(), t.anti_tokens(), t.unrelated_tokens()}) {
            std::set<std::string> here;
            for (const auto& tok : tokens)
                if (is_alphabetic(tok)) here.insert(utf8::lower(tok));
            if (here.empty()) continue;
            const auto text = corpus::detokenize(tokens);
            for (const auto& w : here) {
                if (dictionary.covers(w)) continue;
                auto& entry = vocab[w];
                entry.word = w;
                if (entry.samples.size() < kMaxSamples &&
                    std::find(entry.samples.begin(), entry.samples.end(), text) == entry.samples.end())
                    entry.samples.push_back(text);
            }
        }
    }
    std::vector<LocalWord> out;
    for (auto& [w, entry] : vocab) {
        if (const auto it = glossary.find(w); it != glossary.end()) entry.official_definition = it->second;
        out.push_back(std::move(entry));
    }
    return out;
}

std::string probe_definition(const LocalWord& word, providers::GenerationProvider& generator,
                             const prompts::PromptTemplate& tmpl) {
    if (word.samples.empty()) throw ValidationError("cannot probe '" + word.word + "' without a sample sentence");
    const auto prompt = tmpl.fill({{"sentence", prompts::flatten(word.samples.front())}, {"word", word.word}});
    return trim(generator.generate({prompt, 64, 0.0}));
}

std::optional<bool> parse_judgement(std::string_view reply) {
    std::string head;
    for (char32_t c : utf8::decode(trim(reply))) {
        if (!utf8::is_letter(c)) break;
        utf8::append(head, utf8::to_upper(c));
    }
    if (head == "YES") return true;
    if (head == "NO") return false;
    return std::nullopt;
}

Judgement judge_match(std::string_view d1, std::string_view d2, providers::GenerationProvider& judge,
                      const prompts::PromptTemplate& tmpl) {
    Judgement out;
    if (trim(d2).empty()) throw ValidationError("official definition is empty");
    if (trim(d1).empty()) {
        out.transcript = "(empty model definition; judge not called)";
        return out;
    }
    const auto prompt =
        tmpl.fill({{"definition_a", prompts::flatten(d1)}, {"definition_b", prompts::flatten(d2)}});
    out.judge_called = true;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto reply = judge.generate({prompt, 8, 0.0});
        out.transcript += (attempt ? "\n" : "") + std::string("judge: ") + reply;
        if (const auto v = parse_judgement(reply)) {
            out.matched = *v;
            return out;
        }
    }
    throw ProviderError("unparseable judge reply: " + out.transcript);
}

std::string_view to_string(ProbeStatus s) {
    switch (s) {
        case ProbeStatus::probed: return "probed";
        case ProbeStatus::unprobed: return "unprobed";
        case ProbeStatus::unglossed: return "unglossed";
    }
    return "";
}

Json to_json(const ProbeResult& r) {
    Json j{{"word", r.word}, {"status", to_string(r.status)}};
    j["official_definition"] = r.official_definition ? Json(*r.official_definition) : Json(nullptr);
    j["model_definition"] = r.model_definition;
    j["matched"] = r.status == ProbeStatus::probed ? Json(r.matched) : Json(nullptr);
    j["transcript"] = r.transcript;
    j["samples"] = r.samples;
    return j;
}

std::vector<ProbeResult> probe_words(const std::vector<LocalWord>& words, providers::GenerationProvider& prober,
                                     providers::GenerationProvider& judge, const ProbeParams& params,
                                     const prompts::PromptTemplate& p1, const prompts::PromptTemplate& p2) {
    std::vector<ProbeResult> out(words.size());
    parallel_for(words.size(), params.max_in_flight, [&](std::size_t i) {
        const auto& w = words[i];
        auto& r = out[i];
        r.word = w.word;
        r.official_definition = w.official_definition;
        r.samples = w.samples;
        if (!w.official_definition) return;
        try {
            r.model_definition = probe_definition(w, prober, p1);
            r.transcript = "model: " + r.model_definition;
            const auto j = judge_match(r.model_definition, *w.official_definition, judge, p2);
            r.matched = j.matched;
            r.transcript += "\n" + j.transcript;
            r.status = ProbeStatus::probed;
        } catch (const ProviderError& e) {
            r.status = ProbeStatus::unprobed;
            r.transcript += (r.transcript.empty() ? "" : "\n") + std::string("error: ") + e.what();
        }
    });
    return out;
}

double compute_bbs(const std::vector<ProbeResult>& results) {
    std::size_t glossed = 0, probed = 0, matched = 0;
    for (const auto& r : results) {
        if (r.status == ProbeStatus::unglossed) continue;
        ++glossed;
        if (r.status != ProbeStatus::probed) continue;
        ++probed;
        if (r.matched) ++matched;
    }
    if (glossed == 0) return 1.0;
    if (probed == 0) throw ProviderError("none of the " + std::to_string(glossed) + " glossed local words could be probed");
    return static_cast<double>(matched) / static_cast<double>(probed);
}

std::vector<std::string> failed_words(const std::vector<ProbeResult>& results) {
    std::vector<std::string> out;
    for (const auto& r : results)
        if (r.status == ProbeStatus::probed && !r.matched) out.push_back(r.word);
    std::sort(out.begin(), out.end());
    return out;
}

std::map<std::string, std::size_t> mark_invalid(triplets::Dataset& dataset, const std::vector<std::string>& failed) {
    std::map<std::string, std::size_t> counts;
    if (failed.empty()) return counts;
    std::set<std::string> targets;
    for (const auto& w : failed) {
        targets.insert(utf8::lower(w));
        counts[utf8::lower(w)] = 0;
    }
    for (auto& t : dataset.mutable_triplets()) {
        bool hit = false;
        for (const auto& w : sentence_words(t)) {
            if (!targets.contains(w)) continue;
            ++counts[w];
            hit = true;
        }
        if (hit) t.kb_valid = false;
    }
    return counts;
}

void reset_validity(triplets::Dataset& dataset) {
    for (auto& t : dataset.mutable_triplets()) t.kb_valid = true;
}

Json kb_report(const std::vector<ProbeResult>& results, double bbs, const std::map<std::string, std::size_t>& invalidated) {
    std::size_t glossed = 0, probed = 0, matched = 0;
    Json unglossed = Json::array(), unprobed = Json::array(), words = Json::array();
    for (const auto& r : results) {
        words.push_back(to_json(r));
        if (r.status == ProbeStatus::unglossed) {
            unglossed.push_back(r.word);
            continue;
        }
        ++glossed;
        if (r.status == ProbeStatus::unprobed) unprobed.push_back(r.word);
        if (r.status == ProbeStatus::probed) {
            ++probed;
            if (r.matched) ++matched;
        }
    }
    Json inv = Json::object();
    for (const auto& [w, n] : invalidated) inv[w] = n;
    return Json{{"bbs", bbs},
                {"vocabulary_size", results.size()},
                {"glossed", glossed},
                {"probed", probed},
                {"matched", matched},
                {"unglossed", unglossed},
                {"unprobed", unprobed},
                {"invalidated", inv},
                {"words", words}};
}

}  // namespace libra::kboundary
