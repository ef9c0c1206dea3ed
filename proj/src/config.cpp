#include "libra/config.hpp"

#ifndef LIBRA_DATA_DIR
#define LIBRA_DATA_DIR "data"
#endif

#include <set>

#include "libra/errors.hpp"

namespace libra::config {

namespace {

constexpr std::string_view kDefaults = R"json({
  "seed": 7,
  "output_dir": "out",
  "mode": "mlm",
  "corpus": {
    "path": null,
    "format": "jsonl",
    "filters": [],
    "abbreviations": "@data/abbreviations.txt",
    "gazetteer": null
  },
  "keywords": {
    "seeds": "@data/seeds.json",
    "blocklist": null,
    "stopwords": "@data/stopwords.txt",
    "expansion": {"enabled": true, "k": 10, "min_sim": 0.6, "batch_size": 64, "min_count": 2},
    "association": {"enabled": true, "min_support": 5, "min_conf": 0.3}
  },
  "clustering": {
    "dims": 16,
    "normalize": true,
    "eps": 0.5,
    "min_pts": 5,
    "max_noise_rounds": 10,
    "chunk_tokens": 512,
    "batch_size": 16,
    "external_labels": null,
    "summarize_prompt": "@data/prompts/summarize.txt",
    "allocate_prompt": "@data/prompts/allocate.txt"
  },
  "triplets": {
    "antonyms": "@data/antonyms.json",
    "unrelated_pool": "@data/unrelated_pool.txt"
  },
  "kboundary": {
    "dictionary": "@data/dictionary.txt",
    "glossary": "@data/glossary.json",
    "p1": "@data/prompts/p1.txt",
    "p2": "@data/prompts/p2.txt",
    "max_in_flight": 4
  },
  "scoring": {"include_pending": false, "max_in_flight": 4},
  "metrics": {"bins": 64, "epsilon": 1e-9, "alpha": null, "bandwidth": null},
  "providers": {
    "logprob": {"kind": "stub", "stub": "unigram", "base_url": null, "model_id": null, "timeout_ms": 30000,
                "max_in_flight": 4, "retries": 3, "backoff_ms": 200, "bearer_token_env": null, "cache": null,
                "seed": null, "reply": null, "dim": 64},
    "embedding": {"kind": "stub", "stub": "hash_embedder", "base_url": null, "model_id": null, "timeout_ms": 30000,
                  "max_in_flight": 4, "retries": 3, "backoff_ms": 200, "bearer_token_env": null, "cache": null,
                  "seed": null, "reply": null, "dim": 64},
    "generation": {"kind": "stub", "stub": "lexicon", "base_url": null, "model_id": null, "timeout_ms": 30000,
                   "max_in_flight": 4, "retries": 3, "backoff_ms": 200, "bearer_token_env": null, "cache": null,
                   "seed": null, "reply": null, "dim": 64},
    "prober": {"kind": "stub", "stub": "lexicon", "base_url": null, "model_id": null, "timeout_ms": 30000,
               "max_in_flight": 4, "retries": 3, "backoff_ms": 200, "bearer_token_env": null, "cache": null,
               "seed": null, "reply": null, "dim": 64},
    "judge": {"kind": "stub", "stub": "equality_judge", "base_url": null, "model_id": null, "timeout_ms": 30000,
              "max_in_flight": 4, "retries": 3, "backoff_ms": 200, "bearer_token_env": null, "cache": null,
              "seed": null, "reply": null, "dim": 64}
  },
  "review": {"host": "127.0.0.1", "port": 8080, "static_dir": null}
})json";

const std::set<std::string> kStubs = {"unigram",  "random_lm", "ideal_lm", "local_ideal_lm", "stereotyped_lm",
                                      "hash_embedder", "echo", "lexicon", "equality_judge", "fixed"};

std::string type_name(const Json& j) {
    if (j.is_null()) return "null";
    if (j.is_boolean()) return "boolean";
    if (j.is_number_integer() || j.is_number_unsigned()) return "integer";
    if (j.is_number()) return "number";
    if (j.is_string()) return "string";
    if (j.is_array()) return "array";
    return "object";
}

bool type_ok(const Json& value, const Json& def, const std::string& key) {
    if (def.is_null()) {
        if (value.is_null()) return true;
        const auto it = nullable_types().find(key);
        const std::string want = it == nullable_types().end() ? "string" : it->second;
        if (want == "number") return value.is_number();
        if (want == "array") return value.is_array();
        return value.is_string();
    }
    if (def.is_number_integer() || def.is_number_unsigned()) return value.is_number_integer() || value.is_number_unsigned();
    if (def.is_number_float()) return value.is_number();
    return type_name(value) == type_name(def);
}

void walk(const Json& user, const Json& def, const std::string& prefix, std::vector<std::string>& errors) {
    for (const auto& [key, value] : user.items()) {
        const auto dotted = prefix.empty() ? key : prefix + "." + key;
        if (!def.contains(key)) {
            errors.push_back("unknown key '" + dotted + "'");
            continue;
        }
        const auto& d = def.at(key);
        if (d.is_object()) {
            if (!value.is_object()) errors.push_back("'" + dotted + "' must be an object");
            else walk(value, d, dotted, errors);
            continue;
        }
        if (!type_ok(value, d, dotted)) {
            const auto it = nullable_types().find(dotted);
            const std::string want = d.is_null() ? (it == nullable_types().end() ? "string" : it->second) + " or null"
                                                 : type_name(d);
            errors.push_back("'" + dotted + "' must be " + want + ", got " + type_name(value));
        }
    }
}

void overlay(Json& base, const Json& user) {
    for (const auto& [key, value] : user.items()) {
        if (value.is_object() && base.contains(key) && base[key].is_object()) overlay(base[key], value);
        else base[key] = value;
    }
}

const Json* lookup(const Json& root, std::string_view dotted) {
    const Json* cur = &root;
    for (const auto& part : split(dotted, '.')) {
        if (!cur->is_object() || !cur->contains(part)) return nullptr;
        cur = &(*cur)[part];
    }
    return cur;
}

void check_ranges(const Json& c, std::vector<std::string>& errors) {
    auto num = [&](std::string_view key) { return lookup(c, key)->get<double>(); };
    auto require = [&](bool ok, const std::string& message) {
        if (!ok) errors.push_back(message);
    };
    if (c.at("seed").get<double>() < 0) errors.push_back("'seed' must be >= 0");
    const auto mode = c.at("mode").get<std::string>();
    require(mode == "mlm" || mode == "clm", "'mode' must be mlm or clm");
    const auto format = c.at("corpus").at("format").get<std::string>();
    require(format == "jsonl" || format == "dir_of_text", "'corpus.format' must be jsonl or dir_of_text");
    require(num("keywords.expansion.k") >= 1, "'keywords.expansion.k' must be >= 1");
    require(num("keywords.expansion.min_sim") >= -1 && num("keywords.expansion.min_sim") <= 1,
            "'keywords.expansion.min_sim' must lie in [-1, 1]");
    require(num("keywords.expansion.batch_size") >= 1, "'keywords.expansion.batch_size' must be >= 1");
    require(num("keywords.association.min_support") >= 1, "'keywords.association.min_support' must be >= 1");
    require(num("keywords.association.min_conf") > 0 && num("keywords.association.min_conf") <= 1,
            "'keywords.association.min_conf' must lie in (0, 1]");
    require(num("clustering.dims") >= 2, "'clustering.dims' must be >= 2");
    require(num("clustering.eps") > 0, "'clustering.eps' must be > 0");
    require(num("clustering.min_pts") >= 2, "'clustering.min_pts' must be >= 2");
    require(num("clustering.chunk_tokens") >= 128, "'clustering.chunk_tokens' must be >= 128");
    require(num("clustering.batch_size") >= 1, "'clustering.batch_size' must be >= 1");
    require(num("kboundary.max_in_flight") >= 1, "'kboundary.max_in_flight' must be >= 1");
    require(num("scoring.max_in_flight") >= 1, "'scoring.max_in_flight' must be >= 1");
    require(num("metrics.bins") >= 1, "'metrics.bins' must be >= 1");
    require(num("metrics.epsilon") >= 0, "'metrics.epsilon' must be >= 0");
    if (const auto& a = c.at("metrics").at("alpha"); !a.is_null())
        require(a.get<double>() >= 0 && a.get<double>() <= 1, "'metrics.alpha' must lie in [0, 1]");
    if (const auto& b = c.at("metrics").at("bandwidth"); !b.is_null())
        require(b.get<double>() > 0, "'metrics.bandwidth' must be > 0");
    require(num("review.port") >= 0 && num("review.port") <= 65535, "'review.port' must lie in [0, 65535]");
    for (const auto& [role, p] : c.at("providers").items()) {
        const auto prefix = "'providers." + role + ".";
        const auto kind = p.at("kind").get<std::string>();
        if (kind != "stub" && kind != "http" && kind != "offline" && kind != "record") {
            errors.push_back(prefix + "kind' must be stub, http, offline or record");
            continue;
        }
        if (kind == "stub") {
            if (p.at("stub").is_null() || !kStubs.contains(p.at("stub").get<std::string>()))
                errors.push_back(prefix + "stub' must name a built-in stub");
        }
        if ((kind == "http" || kind == "record") && p.at("model_id").is_null())
            errors.push_back(prefix + "model_id' is required for kind " + kind);
        if ((kind == "http" || kind == "record") && p.at("base_url").is_null())
            errors.push_back(prefix + "base_url' is required for kind " + kind);
        if ((kind == "offline" || kind == "record") && p.at("cache").is_null())
            errors.push_back(prefix + "cache' is required for kind " + kind);
        require(p.at("max_in_flight").get<double>() >= 1, prefix + "max_in_flight' must be >= 1");
        require(p.at("retries").get<double>() >= 0, prefix + "retries' must be >= 0");
        require(p.at("timeout_ms").get<double>() > 0, prefix + "timeout_ms' must be > 0");
        require(p.at("backoff_ms").get<double>() >= 0, prefix + "backoff_ms' must be >= 0");
        require(p.at("dim").get<double>() >= 1, prefix + "dim' must be >= 1");
    }
}

}  // namespace

const Json& defaults() {
    static const Json d = Json::parse(kDefaults);
    return d;
}

const std::map<std::string, std::string>& nullable_types() {
    static const std::map<std::string, std::string> types = [] {
        std::map<std::string, std::string> t = {{"metrics.alpha", "number"}, {"metrics.bandwidth", "number"}};
        for (const auto& role : {"logprob", "embedding", "generation", "prober", "judge"})
            t[std::string("providers.") + role + ".seed"] = "number";
        return t;
    }();
    return types;
}

std::vector<std::string> validate(const Json& user) {
    std::vector<std::string> errors;
    if (!user.is_object()) return {"config must be a JSON object"};
    walk(user, defaults(), "", errors);
    if (!errors.empty()) return errors;
    Json merged = defaults();
    overlay(merged, user);
    check_ranges(merged, errors);
    return errors;
}

Json merge(const Json& user) {
    const auto errors = validate(user);
    if (!errors.empty()) {
        std::string msg = "invalid config (" + std::to_string(errors.size()) + " problem" + (errors.size() > 1 ? "s" : "") + "):";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ValidationError(msg);
    }
    Json merged = defaults();
    overlay(merged, user);
    return merged;
}

void apply_override(Json& user, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ValidationError("override must look like key.path=value");
    const auto key = std::string(assignment.substr(0, eq));
    const auto raw = std::string(assignment.substr(eq + 1));
    Json value;
    try {
        value = Json::parse(raw);
    } catch (const Json::exception&) {
        value = raw;
    }
    Json* cur = &user;
    const auto parts = split(key, '.');
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!cur->contains(parts[i]) || !(*cur)[parts[i]].is_object()) (*cur)[parts[i]] = Json::object();
        cur = &(*cur)[parts[i]];
    }
    (*cur)[parts.back()] = value;
}

const Json& RunConfig::at(std::string_view dotted) const {
    const auto* v = lookup(values, dotted);
    if (!v) throw InternalError("unknown config key " + std::string(dotted));
    return *v;
}

std::optional<std::filesystem::path> RunConfig::path(std::string_view dotted) const {
    const auto& v = at(dotted);
    if (v.is_null()) return std::nullopt;
    const auto s = v.get<std::string>();
    if (s.rfind("@data/", 0) == 0) return data_dir() / s.substr(6);
    std::filesystem::path p(s);
    return p.is_absolute() ? p : base_dir / p;
}

std::filesystem::path RunConfig::output_dir() const { return *path("output_dir"); }

std::uint64_t RunConfig::seed() const { return at("seed").get<std::uint64_t>(); }

std::string RunConfig::hash() const { return sha256_hex(values.dump()); }

RunConfig load(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides) {
    Json user = Json::object();
    RunConfig rc;
    rc.base_dir = std::filesystem::current_path();
    if (file) {
        if (!std::filesystem::exists(*file)) throw ValidationError("config file not found: " + file->string());
        try {
            user = read_json_file(*file);
        } catch (const Json::exception& e) {
            throw ValidationError("config file " + file->string() + " is not valid JSON: " + e.what());
        }
        rc.base_dir = std::filesystem::absolute(*file).parent_path();
    }
    for (const auto& o : overrides) apply_override(user, o);
    rc.values = merge(user);
    return rc;
}

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("LIBRA_DATA_DIR"); env && *env) return env;
    return LIBRA_DATA_DIR;
}

}  // namespace libra::config
