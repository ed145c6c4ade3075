#include "oppred/corpus/corpus_io.hpp"

#include <fstream>

#include <json.hpp>

#include "oppred/mir/asm_text.hpp"

namespace oppred::corpus {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json sample_record(const rawdata::Sample& s) {
    json j;
    j["doc"] = s.document.joined();
    j["label"] = rawdata::label_name(s.label);
    j["program"] = s.document.meta.program;
    j["function"] = s.document.meta.predicate.function;
    j["block"] = s.document.meta.predicate.block;
    j["ordinal"] = s.document.meta.predicate.ordinal;
    j["path"] = s.document.meta.path_index;
    j["set"] = rawdata::set_name(s.document.meta.set);
    j["recipe"] = s.recipe;
    return j;
}

rawdata::Sample sample_from_record(const json& j) {
    rawdata::Sample s;
    std::string doc = j.at("doc").get<std::string>();
    std::string line;
    std::istringstream ss(doc);
    while (std::getline(ss, line)) s.document.lines.push_back(line);
    rawdata::parse_label(j.at("label").get<std::string>(), s.label);
    s.document.meta.program = j.at("program").get<std::string>();
    s.document.meta.predicate.function = j.at("function").get<std::string>();
    s.document.meta.predicate.block = j.at("block").get<std::string>();
    s.document.meta.predicate.ordinal = j.at("ordinal").get<int>();
    s.document.meta.function = s.document.meta.predicate.function;
    s.document.meta.path_index = j.at("path").get<int>();
    rawdata::SetKind set;
    rawdata::parse_set_kind(j.at("set").get<std::string>(), set);
    s.document.meta.set = set;
    s.recipe = j.at("recipe").get<std::string>();
    return s;
}

} // namespace

void write_corpus(const fs::path& dir, const GeneratedCorpus& corpus, const GenConfig& cfg) {
    fs::create_directories(dir / "programs");

    {
        std::ofstream out(dir / "corpus.jsonl");
        for (const auto& s : corpus.samples) out << sample_record(s).dump() << "\n";
    }

    json manifest;
    manifest["format"] = "oppred-corpus v1";
    manifest["seed"] = cfg.seed;
    manifest["size"] = cfg.size;
    manifest["recipes"] = cfg.recipes;
    manifest["alpha_loop"] = cfg.budget.alpha_loop;
    manifest["alpha_paths"] = cfg.budget.alpha_paths;
    manifest["config_hash"] = cfg.hash();
    manifest["env"] = corpus.env;
    manifest["stats"] = {
        {"programs_used", corpus.stats.programs_used},
        {"programs_failed", corpus.stats.programs_failed},
        {"truncated_path_sets", corpus.stats.truncated_path_sets},
        {"labels", corpus.stats.label_counts},
    };
    json programs = json::array();
    for (const auto& b : corpus.bundles) {
        json pj;
        pj["id"] = b.id;
        pj["seed_index"] = b.seed_index;
        pj["recipe"] = b.recipe;
        pj["file"] = "programs/" + b.id + ".asm";
        pj["orig_file"] = "programs/" + b.id + ".orig.asm";
        json preds = json::array();
        for (const auto& [pid, entry] : b.log) {
            json e;
            e["function"] = pid.function;
            e["block"] = pid.block;
            e["ordinal"] = pid.ordinal;
            e["label"] = rawdata::label_name(entry.label);
            if (entry.kind) e["kind"] = obf::kind_name(*entry.kind);
            if (!entry.template_id.empty()) e["template"] = entry.template_id;
            preds.push_back(e);
        }
        pj["predicates"] = preds;
        programs.push_back(pj);

        std::ofstream obf_out(dir / "programs" / (b.id + ".asm"));
        obf_out << mir::emit_asm(b.obfuscated);
        std::ofstream orig_out(dir / "programs" / (b.id + ".orig.asm"));
        orig_out << mir::emit_asm(b.original);
    }
    manifest["programs"] = programs;

    std::ofstream mf(dir / "manifest.json");
    mf << manifest.dump(2) << "\n";
}

LoadedCorpus load_corpus(const fs::path& dir) {
    LoadedCorpus out;
    std::ifstream in(dir / "corpus.jsonl");
    if (!in) throw std::runtime_error("cannot open " + (dir / "corpus.jsonl").string());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.samples.push_back(sample_from_record(json::parse(line)));
    }

    std::ifstream mf(dir / "manifest.json");
    if (mf) {
        json manifest = json::parse(mf);
        out.config_hash = manifest.value("config_hash", 0ULL);
        out.seed = manifest.value("seed", 0ULL);
        if (manifest.contains("env")) {
            auto env = manifest["env"].get<std::vector<uint64_t>>();
            for (size_t i = 0; i < env.size() && i < out.env.size(); ++i) out.env[i] = env[i];
        }
        if (manifest.contains("programs"))
            for (const auto& pj : manifest["programs"])
                out.program_ids.push_back(pj.at("id").get<std::string>());
    }
    return out;
}

std::vector<LoadedProgram> load_programs(const fs::path& dir) {
    std::vector<LoadedProgram> out;
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
    json manifest = json::parse(mf);
    for (const auto& pj : manifest.at("programs")) {
        LoadedProgram lp;
        lp.id = pj.at("id").get<std::string>();
        lp.recipe = pj.value("recipe", "");
        auto read_file = [&](const std::string& rel) {
            std::ifstream f(dir / rel);
            std::ostringstream ss;
            ss << f.rdbuf();
            return ss.str();
        };
        lp.obfuscated = mir::parse_asm(read_file(pj.at("file").get<std::string>()));
        lp.original = mir::parse_asm(read_file(pj.at("orig_file").get<std::string>()));
        for (const auto& e : pj.at("predicates")) {
            mir::PredicateId pid;
            pid.function = e.at("function").get<std::string>();
            pid.block = e.at("block").get<std::string>();
            pid.ordinal = e.at("ordinal").get<int>();
            obf::LogEntry entry;
            rawdata::parse_label(e.at("label").get<std::string>(), entry.label);
            if (e.contains("kind")) {
                obf::OpaqueKind k;
                if (obf::parse_kind(e["kind"].get<std::string>(), k)) entry.kind = k;
            }
            entry.template_id = e.value("template", "");
            entry.recipe = lp.recipe;
            lp.log[pid] = entry;
        }
        out.push_back(std::move(lp));
    }
    return out;
}

std::vector<std::string> manifest_program_ids(const fs::path& dir) {
    std::vector<std::string> out;
    std::ifstream mf(dir / "manifest.json");
    if (!mf) return out;
    json manifest = json::parse(mf);
    if (manifest.contains("programs"))
        for (const auto& pj : manifest["programs"]) out.push_back(pj.at("id").get<std::string>());
    return out;
}

uint64_t manifest_config_hash(const fs::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) return 0;
    json manifest = json::parse(mf);
    return manifest.value("config_hash", 0ULL);
}

} // namespace oppred::corpus
