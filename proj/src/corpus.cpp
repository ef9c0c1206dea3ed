#include "libra/corpus.hpp"

#include <algorithm>

#include "libra/errors.hpp"

namespace libra::corpus {

namespace {

constexpr std::string_view kBuiltinAbbreviations[] = {
    "dr. never",   "mr. never",    "mrs. never",  "ms. never",  "prof. never", "st. never",
    "mt. never",   "sr. never",    "jr. never",   "rev. never", "hon. never",  "gen. never",
    "col. never",  "capt. never",  "sgt. never",  "lt. never",  "gov. never",  "sen. never",
    "rep. never",  "no. never",    "vs. never",   "v. never",   "e.g. never",  "i.e. never",
    "cf. never",   "approx. never", "fig. never", "ave. never", "rd. never",
    "a.m.",        "p.m.",         "etc.",        "inc.",       "ltd.",        "co.",
    "corp.",       "jan.",         "feb.",        "mar.",       "apr.",        "jun.",
    "jul.",        "aug.",         "sep.",        "sept.",      "oct.",        "nov.",
    "dec.",        "u.s.",         "u.k.",        "n.z.",       "nz.",         "dept.",
    "est.",        "min.",         "max.",        "govt.",
};

bool is_terminal(char32_t cp) { return cp == '.' || cp == '!' || cp == '?' || cp == 0x2026; }

bool is_closing(char32_t cp) {
    return cp == '"' || cp == '\'' || cp == ')' || cp == ']' || cp == 0x201D || cp == 0x2019 || cp == 0xBB;
}

bool is_word_char(char32_t cp) { return utf8::is_letter(cp) || utf8::is_digit(cp); }

bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019; }

struct CodePoint {
    char32_t cp;
    std::size_t begin;
    std::size_t end;
};

std::vector<CodePoint> decode_with_offsets(std::string_view text) {
    std::vector<CodePoint> out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto b0 = static_cast<unsigned char>(text[pos]);
        std::size_t len = b0 < 0x80 ? 1 : (b0 & 0xE0) == 0xC0 ? 2 : (b0 & 0xF0) == 0xE0 ? 3 : (b0 & 0xF8) == 0xF0 ? 4 : 0;
        bool valid = len > 0 && pos + len <= text.size();
        for (std::size_t k = 1; valid && k < len; ++k)
            valid = (static_cast<unsigned char>(text[pos + k]) & 0xC0) == 0x80;
        if (!valid) {
            out.push_back({0xFFFD, pos, pos + 1});
            ++pos;
            continue;
        }
        out.push_back({utf8::decode(text.substr(pos, len)).front(), pos, pos + len});
        pos += len;
    }
    return out;
}

}  // namespace

std::string_view to_string(Source source) { return source == Source::oral ? "oral" : "text"; }

Source source_from_string(std::string_view name) {
    if (name == "text") return Source::text;
    if (name == "oral") return Source::oral;
    throw ValidationError("unknown source '" + std::string(name) + "' (expected text|oral)");
}

Json to_json(const Article& a) {
    return Json{{"id", a.id}, {"source", to_string(a.source)}, {"title", a.title}, {"body", a.body}, {"tags", a.tags}};
}

Article article_from_json(const Json& j) {
    if (!j.is_object()) throw ValidationError("record is not a JSON object");
    for (const char* key : {"id", "title", "body"}) {
        if (!j.contains(key) || !j.at(key).is_string())
            throw ValidationError(std::string("field '") + key + "' missing or not a string");
    }
    Article a;
    a.id = j.at("id").get<std::string>();
    if (a.id.empty()) throw ValidationError("field 'id' is empty");
    a.source = source_from_string(j.value("source", std::string("text")));
    a.title = j.at("title").get<std::string>();
    a.body = j.at("body").get<std::string>();
    if (j.contains("tags")) {
        if (!j.at("tags").is_array()) throw ValidationError("field 'tags' is not an array");
        for (const auto& t : j.at("tags")) {
            if (!t.is_string()) throw ValidationError("field 'tags' has a non-string entry");
            a.tags.push_back(t.get<std::string>());
        }
    }
    return a;
}

// ---------------------------------------------------------------------------
// Tokenizer

std::vector<Token> tokenize_with_offsets(std::string_view text) {
    const auto cps = decode_with_offsets(text);
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < cps.size()) {
        const char32_t cp = cps[i].cp;
        if (utf8::is_space(cp)) {
            ++i;
            continue;
        }
        const std::size_t begin = cps[i].begin;
        if (cp == '[' && text.substr(begin, kNamePlaceholder.size()) == kNamePlaceholder) {
            tokens.push_back({std::string(kNamePlaceholder), begin, begin + kNamePlaceholder.size()});
            while (i < cps.size() && cps[i].begin < begin + kNamePlaceholder.size()) ++i;
            continue;
        }
        if (is_word_char(cp)) {
            std::size_t j = i + 1;
            while (j < cps.size()) {
                if (is_word_char(cps[j].cp)) {
                    ++j;
                } else if (is_apostrophe(cps[j].cp) && j + 1 < cps.size() && is_word_char(cps[j + 1].cp)) {
                    j += 2;
                } else {
                    break;
                }
            }
            const std::size_t end = cps[j - 1].end;
            tokens.push_back({std::string(text.substr(begin, end - begin)), begin, end});
            i = j;
            continue;
        }
        tokens.push_back({std::string(text.substr(begin, cps[i].end - begin)), begin, cps[i].end});
        ++i;
    }
    return tokens;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : tokenize_with_offsets(text)) out.push_back(std::move(t.text));
    return out;
}

Detokenized detokenize_with_offsets(const std::vector<std::string>& tokens) {
    static const std::set<std::string, std::less<>> no_space_before = {
        ".", ",", "!", "?", ";", ":", ")", "]", "}", "%", "\xE2\x80\xA6", "\xE2\x80\x9D"};
    static const std::set<std::string, std::less<>> no_space_after = {"(", "[", "{", "\xE2\x80\x9C", "$"};
    Detokenized out;
    bool suppress = true;
    for (const auto& t : tokens) {
        if (!suppress && !no_space_before.contains(t)) out.text += ' ';
        out.spans.emplace_back(out.text.size(), out.text.size() + t.size());
        out.text += t;
        suppress = no_space_after.contains(t);
    }
    return out;
}

std::string detokenize(const std::vector<std::string>& tokens) { return detokenize_with_offsets(tokens).text; }

bool is_word_token(std::string_view token) {
    const auto cps = utf8::decode(token);
    return !cps.empty() && is_word_char(cps.front());
}

Json to_json(const Sentence& s) {
    return Json{{"article_id", s.article_id},
                {"index", s.index},
                {"text", s.text},
                {"tokens", s.tokens},
                {"redacted", s.redacted}};
}

Sentence sentence_from_json(const Json& j) {
    Sentence s;
    s.article_id = j.at("article_id").get<std::string>();
    s.index = j.at("index").get<std::size_t>();
    s.text = j.at("text").get<std::string>();
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    s.redacted = j.value("redacted", false);
    return s;
}

// ---------------------------------------------------------------------------
// Filters

namespace {

FilterKind filter_kind_from_string(std::string_view name) {
    if (name == "title_pattern") return FilterKind::title_pattern;
    if (name == "body_pattern") return FilterKind::body_pattern;
    if (name == "tag") return FilterKind::tag;
    throw ValidationError("unknown filter kind '" + std::string(name) + "'");
}

std::string_view filter_kind_name(FilterKind kind) {
    switch (kind) {
        case FilterKind::title_pattern: return "title_pattern";
        case FilterKind::body_pattern: return "body_pattern";
        case FilterKind::tag: return "tag";
    }
    return "";
}

}  // namespace

FilterRule::FilterRule(FilterKind kind, std::string pattern) : kind_(kind), pattern_(std::move(pattern)) {
    if (pattern_.empty()) throw ValidationError("filter pattern is empty");
    if (kind_ != FilterKind::tag) {
        try {
            regex_ = std::regex(pattern_, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            throw ValidationError("invalid filter pattern '" + pattern_ + "': " + e.what());
        }
    }
}

bool FilterRule::matches(const Article& article) const {
    switch (kind_) {
        case FilterKind::title_pattern: return std::regex_search(article.title, regex_);
        case FilterKind::body_pattern: return std::regex_search(article.body, regex_);
        case FilterKind::tag: {
            const auto want = utf8::lower(pattern_);
            return std::any_of(article.tags.begin(), article.tags.end(),
                               [&](const std::string& t) { return utf8::lower(t) == want; });
        }
    }
    return false;
}

FilterRule FilterRule::from_json(const Json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.contains("pattern"))
        throw ValidationError("filter rule needs 'kind' and 'pattern'");
    return FilterRule(filter_kind_from_string(j.at("kind").get<std::string>()), j.at("pattern").get<std::string>());
}

Json FilterRule::to_json() const { return Json{{"kind", filter_kind_name(kind_)}, {"pattern", pattern_}}; }

// ---------------------------------------------------------------------------
// Store

void ArticleStore::add(Article article) {
    if (trim(article.body).empty()) throw ValidationError("article '" + article.id + "' has an empty body");
    if (index_.contains(article.id)) throw ValidationError("duplicate article id '" + article.id + "'");
    index_.emplace(article.id, articles_.size());
    articles_.push_back(std::move(article));
}

const Article* ArticleStore::find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &articles_[it->second];
}

void ArticleStore::save(const std::filesystem::path& dir, const Json& manifest_extra) const {
    std::vector<Json> records;
    records.reserve(articles_.size());
    for (const auto& a : articles_) records.push_back(to_json(a));
    const auto content = to_jsonl(records);
    write_file_atomic(dir / "articles.jsonl", content);
    Json manifest{{"articles", articles_.size()}, {"articles_sha256", sha256_hex(content)}};
    for (const auto& [k, v] : manifest_extra.items()) manifest[k] = v;
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

ArticleStore ArticleStore::load(const std::filesystem::path& dir) {
    const auto path = dir / "articles.jsonl";
    if (!std::filesystem::exists(path)) throw UpstreamMissingError(path.string(), "ingest");
    ArticleStore store;
    const auto issues = read_jsonl(path, [&](std::size_t, const Json& j) { store.add(article_from_json(j)); });
    if (!issues.empty())
        throw ValidationError(path.string() + ":" + std::to_string(issues.front().line) + ": " + issues.front().message);
    return store;
}

InputFormat input_format_from_string(std::string_view name) {
    if (name == "jsonl") return InputFormat::jsonl;
    if (name == "dir_of_text") return InputFormat::dir_of_text;
    throw ValidationError("unknown corpus format '" + std::string(name) + "' (expected jsonl|dir_of_text)");
}

namespace {

/// Returns the index of the first matching rule, if any.
std::optional<std::size_t> first_match(const std::vector<FilterRule>& filters, const Article& a) {
    for (std::size_t i = 0; i < filters.size(); ++i)
        if (filters[i].matches(a)) return i;
    return std::nullopt;
}

void admit(IngestResult& result, const std::vector<FilterRule>& filters, Article article) {
    if (const auto rule = first_match(filters, article)) {
        ++result.report.dropped;
        const auto& f = filters[*rule];
        ++result.report.dropped_by_rule[f.to_json().dump()];
        return;
    }
    if (result.store.find(article.id)) throw ValidationError("duplicate article id '" + article.id + "'");
    result.store.add(std::move(article));
    ++result.report.kept;
}

}  // namespace

IngestResult ingest_articles(const std::filesystem::path& path, InputFormat format,
                             const std::vector<FilterRule>& filters) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) throw ValidationError("corpus path does not exist: " + path.string());
    IngestResult result;
    if (format == InputFormat::jsonl) {
        if (!fs::is_regular_file(path)) throw ValidationError("jsonl corpus must be a file: " + path.string());
        std::size_t line_no = 0;
        for (const auto& line : read_lines(path)) {
            ++line_no;
            if (trim(line).empty()) continue;
            Article article;
            try {
                const auto j = Json::parse(line);
                article = article_from_json(j);
                if (trim(article.body).empty()) throw ValidationError("field 'body' is empty");
            } catch (const Json::exception& e) {
                result.report.malformed.push_back({line_no, e.what()});
                continue;
            } catch (const ValidationError& e) {
                result.report.malformed.push_back({line_no, e.what()});
                continue;
            }
            admit(result, filters, std::move(article));
        }
        return result;
    }

    if (!fs::is_directory(path)) throw ValidationError("dir_of_text corpus must be a directory: " + path.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(path))
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        const auto rel = fs::relative(file, path);
        Article article;
        auto id = rel;
        id.replace_extension();
        article.id = id.generic_string();
        for (const auto& part : rel.parent_path())
            if (part == "oral") article.source = Source::oral;
        const auto lines = read_lines(file);
        std::size_t i = 0;
        while (i < lines.size() && trim(lines[i]).empty()) ++i;
        if (i < lines.size()) article.title = trim(lines[i++]);
        std::vector<std::string> rest(lines.begin() + static_cast<std::ptrdiff_t>(i), lines.end());
        article.body = trim(join(rest, "\n"));
        if (article.body.empty()) {
            result.report.malformed.push_back({0, rel.generic_string() + ": empty body"});
            continue;
        }
        admit(result, filters, std::move(article));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Sentence splitting

SentenceSplitter::SentenceSplitter() {
    for (auto line : kBuiltinAbbreviations) add_abbreviation(line);
}

SentenceSplitter::SentenceSplitter(const std::filesystem::path& abbreviation_file) {
    for (const auto& line : read_word_list(abbreviation_file)) add_abbreviation(line);
}

void SentenceSplitter::add_abbreviation(std::string_view line) {
    const auto parts = libra::split(trim(line), ' ');
    if (parts.empty() || parts[0].empty()) return;
    const auto abbr = utf8::lower(parts[0]);
    const bool never = std::any_of(parts.begin() + 1, parts.end(), [](const std::string& p) { return p == "never"; });
    (never ? never_final_ : ambiguous_).insert(abbr);
}

std::vector<std::pair<std::size_t, std::size_t>> SentenceSplitter::segment(std::string_view body,
                                                                           Source source) const {
    const auto cps = decode_with_offsets(body);
    std::vector<std::size_t> cuts;  // byte positions where a new sentence may start

    auto word_before = [&](std::size_t dot) {
        // Whitespace-delimited word ending at code point `dot` (inclusive), minus leading brackets/quotes.
        std::size_t start = dot;
        while (start > 0 && !utf8::is_space(cps[start - 1].cp)) --start;
        while (start < dot && !is_word_char(cps[start].cp)) ++start;
        return body.substr(cps[start].begin, cps[dot].end - cps[start].begin);
    };

    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t cp = cps[i].cp;
        if (cp == '\n') {
            std::size_t j = i + 1;
            bool blank = false;
            while (j < cps.size() && utf8::is_space(cps[j].cp)) {
                if (cps[j].cp == '\n') blank = true;
                ++j;
            }
            if (blank || source == Source::oral) cuts.push_back(cps[i].begin);
            continue;
        }
        if (!is_terminal(cp)) continue;
        std::size_t j = i;
        while (j + 1 < cps.size() && is_terminal(cps[j + 1].cp)) ++j;
        const std::size_t last_terminal = j;
        while (j + 1 < cps.size() && is_closing(cps[j + 1].cp)) ++j;
        if (j + 1 < cps.size() && !utf8::is_space(cps[j + 1].cp)) {
            i = j;
            continue;
        }
        std::size_t next = j + 1;
        while (next < cps.size() && utf8::is_space(cps[next].cp)) ++next;
        const bool at_end = next >= cps.size();
        if (cp == '.' && last_terminal == i && !at_end) {
            const auto raw_word = word_before(i);
            const auto word = utf8::lower(raw_word);
            const char32_t next_cp = cps[next].cp;
            const bool next_lower = utf8::is_letter(next_cp) && utf8::to_lower(next_cp) == next_cp &&
                                    utf8::to_upper(next_cp) != next_cp;
            const auto word_cps = utf8::decode(word);
            const bool initial = word_cps.size() == 2 && utf8::is_letter(word_cps[0]) && utf8::starts_upper(raw_word);
            if (never_final_.contains(word) || initial || next_lower ||
                (ambiguous_.contains(word) && !utf8::starts_upper(body.substr(cps[next].begin)))) {
                i = j;
                continue;
            }
        }
        cuts.push_back(cps[j].end);
        i = j;
    }

    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    std::size_t start = 0;
    cuts.push_back(body.size());
    for (std::size_t cut : cuts) {
        if (cut < start) continue;
        auto piece = body.substr(start, cut - start);
        const auto first = piece.find_first_not_of(" \t\r\n\v\f");
        if (first != std::string_view::npos) {
            const auto last = piece.find_last_not_of(" \t\r\n\v\f");
            ranges.emplace_back(start + first, start + last + 1);
        }
        start = cut;
    }
    return ranges;
}

std::vector<Sentence> SentenceSplitter::split(const Article& article) const {
    std::vector<Sentence> out;
    for (const auto& [b, e] : segment(article.body, article.source)) {
        Sentence s;
        s.article_id = article.id;
        s.index = out.size();
        s.text = article.body.substr(b, e - b);
        s.tokens = tokenize(s.text);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sentence> split_sentences(const Article& article) {
    static const SentenceSplitter splitter;
    return splitter.split(article);
}

// ---------------------------------------------------------------------------
// Redaction

Gazetteer::Gazetteer(const std::vector<std::string>& names) {
    for (const auto& name : names) {
        auto tokens = tokenize(name);
        if (tokens.empty()) throw ValidationError("gazetteer entry is empty");
        names_.push_back(std::move(tokens));
    }
    std::stable_sort(names_.begin(), names_.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
}

Sentence Gazetteer::redact(const Sentence& sentence) const {
    if (names_.empty()) return sentence;
    const auto tokens = tokenize_with_offsets(sentence.text);
    std::vector<bool> hit(tokens.size(), false);
    bool any = false;
    for (std::size_t i = 0; i < tokens.size();) {
        std::size_t matched = 0;
        for (const auto& name : names_) {
            if (i + name.size() > tokens.size()) continue;
            bool ok = true;
            for (std::size_t k = 0; k < name.size() && ok; ++k) ok = tokens[i + k].text == name[k];
            if (ok) {
                matched = name.size();
                break;
            }
        }
        if (matched == 0) {
            ++i;
            continue;
        }
        for (std::size_t k = 0; k < matched; ++k) hit[i + k] = true;
        any = true;
        i += matched;
    }
    if (!any) return sentence;

    Sentence out = sentence;
    out.text.clear();
    std::size_t pos = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!hit[i]) continue;
        out.text.append(sentence.text, pos, tokens[i].begin - pos);
        out.text += kNamePlaceholder;
        pos = tokens[i].end;
    }
    out.text.append(sentence.text, pos, std::string::npos);
    out.tokens = tokenize(out.text);
    out.redacted = true;
    return out;
}

Sentence redact_entities(const Sentence& sentence, const std::vector<std::string>& gazetteer) {
    return Gazetteer(gazetteer).redact(sentence);
}

}  // namespace libra::corpus
