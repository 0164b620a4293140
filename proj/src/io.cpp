#include "carts/io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace carts::io {

using ojson = nlohmann::ordered_json;

namespace {

// Line number of the record being decoded, for error messages.
struct Decoder {
    std::size_t line;

    [[noreturn]] void fail(const std::string& reason) const { throw SchemaError(line, reason); }

    const ojson& field(const ojson& obj, const char* key) const {
        if (!obj.is_object() || !obj.contains(key)) fail(std::string(key) + " required");
        return obj.at(key);
    }

    std::string str(const ojson& obj, const char* key) const {
        const auto& v = field(obj, key);
        if (!v.is_string()) fail(std::string(key) + " must be a string");
        return v.get<std::string>();
    }

    std::string opt_str(const ojson& obj, const char* key) const {
        if (!obj.contains(key) || obj.at(key).is_null()) return {};
        return str(obj, key);
    }

    template <typename T>
    T num(const ojson& obj, const char* key) const {
        const auto& v = field(obj, key);
        if (!v.is_number()) fail(std::string(key) + " must be a number");
        return v.get<T>();
    }

    bool boolean(const ojson& obj, const char* key) const {
        const auto& v = field(obj, key);
        if (!v.is_boolean()) fail(std::string(key) + " must be a boolean");
        return v.get<bool>();
    }

    const ojson& array(const ojson& obj, const char* key) const {
        const auto& v = field(obj, key);
        if (!v.is_array()) fail(std::string(key) + " must be an array");
        return v;
    }

    std::vector<std::string> strings(const ojson& obj, const char* key) const {
        std::vector<std::string> out;
        for (const auto& v : array(obj, key)) {
            if (!v.is_string()) fail(std::string(key) + " must hold strings");
            out.push_back(v.get<std::string>());
        }
        return out;
    }

    CandidateTitle title(const ojson& obj) const {
        try {
            CandidateTitle t(str(obj, "text"), num<int>(obj, "iteration"), num<int>(obj, "chain_id"),
                             provenance_from_string(str(obj, "provenance")), strings(obj, "trace"));
            if (t.char_len() != num<std::size_t>(obj, "char_len") ||
                t.word_count() != num<std::size_t>(obj, "word_count"))
                fail("stored lengths of \"" + t.text() + "\" do not match its text");
            return t;
        } catch (const InvalidValue& e) {
            fail(e.what());
        }
    }

    RelevanceVector bits(const ojson& obj) const {
        const auto& map = field(obj, "bits");
        if (!map.is_object()) fail("bits must be an object");
        std::vector<std::pair<std::string, int>> out;
        for (const auto& [id, bit] : map.items()) {
            if (!bit.is_number_integer()) fail("bit for " + id + " must be an integer");
            out.emplace_back(id, bit.get<int>());
        }
        try {
            RelevanceVector v(std::move(out));
            if (v.coverage() != num<int>(obj, "coverage")) fail("coverage does not equal the sum of bits");
            return v;
        } catch (const InvalidValue& e) {
            fail(e.what());
        }
    }

    FeedbackReport feedback(const ojson& obj) const {
        return FeedbackReport{bits(field(obj, "bits")), strings(obj, "flagged_uncovered"),
                              str(obj, "critique"), boolean(obj, "length_ok")};
    }

    PipelineConfig config(const ojson& obj) const {
        PipelineConfig c;
        c.max_chars = num<std::size_t>(obj, "max_chars");
        c.max_words = num<std::size_t>(obj, "max_words");
        c.keywords_per_item = num<std::size_t>(obj, "keywords_per_item");
        c.chains = num<std::size_t>(obj, "chains");
        const auto& budget = field(obj, "budget");
        const auto mode = str(budget, "mode");
        if (mode == "explicit") {
            c.budget = num<std::size_t>(budget, "rounds");
        } else if (mode == "theory") {
            TheoryBudget t;
            t.alpha = num<double>(budget, "alpha");
            t.beta = num<double>(budget, "beta");
            t.gamma = num<double>(budget, "gamma");
            t.epsilon = num<double>(budget, "epsilon");
            if (!field(budget, "opt_estimate").is_null()) t.opt_estimate = num<int>(budget, "opt_estimate");
            t.c0_estimate = num<int>(budget, "c0_estimate");
            c.budget = t;
        } else {
            fail("unknown budget mode " + mode);
        }
        const auto backend = str(obj, "backend");
        if (backend != "llm" && backend != "mock") fail("unknown backend " + backend);
        c.backend = backend == "llm" ? BackendKind::llm : BackendKind::mock;
        const auto scorer = str(obj, "scorer");
        if (scorer != "llm_judge" && scorer != "keyword_overlap") fail("unknown scorer " + scorer);
        c.scorer = scorer == "llm_judge" ? ScorerKind::llm_judge : ScorerKind::keyword_overlap;
        const auto arbiter = str(obj, "arbiter");
        if (arbiter != "llm" && arbiter != "rule") fail("unknown arbiter " + arbiter);
        c.arbiter = arbiter == "llm" ? ArbiterMode::llm : ArbiterMode::rule;
        c.temperature = num<double>(obj, "temperature");
        c.parse_retries = num<std::size_t>(obj, "parse_retries");
        c.seed = num<std::uint64_t>(obj, "seed");
        return c;
    }
};

ojson encode(const CandidateTitle& t) {
    ojson o;
    o["text"] = t.text();
    o["char_len"] = t.char_len();
    o["word_count"] = t.word_count();
    o["iteration"] = t.iteration();
    o["chain_id"] = t.chain_id();
    o["provenance"] = std::string(to_string(t.provenance()));
    o["trace"] = t.trace();
    return o;
}

ojson encode(const RelevanceVector& v) {
    ojson o;
    o["coverage"] = v.coverage();
    ojson bits = ojson::object();
    for (const auto& [id, bit] : v.bits()) bits[id] = bit;
    o["bits"] = std::move(bits);
    return o;
}

ojson encode(const FeedbackReport& r) {
    ojson o;
    o["bits"] = encode(r.bits);
    o["flagged_uncovered"] = r.flagged_uncovered;
    o["critique"] = r.critique;
    o["length_ok"] = r.length_ok;
    return o;
}

ojson encode(const PipelineConfig& c) {
    ojson o;
    o["max_chars"] = c.max_chars;
    o["max_words"] = c.max_words;
    o["keywords_per_item"] = c.keywords_per_item;
    o["chains"] = c.chains;
    ojson budget;
    if (const auto* rounds = std::get_if<std::size_t>(&c.budget)) {
        budget["mode"] = "explicit";
        budget["rounds"] = *rounds;
    } else {
        const auto& t = std::get<TheoryBudget>(c.budget);
        budget["mode"] = "theory";
        budget["alpha"] = t.alpha;
        budget["beta"] = t.beta;
        budget["gamma"] = t.gamma;
        budget["epsilon"] = t.epsilon;
        budget["opt_estimate"] = t.opt_estimate ? ojson(*t.opt_estimate) : ojson(nullptr);
        budget["c0_estimate"] = t.c0_estimate;
    }
    o["budget"] = std::move(budget);
    o["backend"] = std::string(to_string(c.backend));
    o["scorer"] = std::string(to_string(c.scorer));
    o["arbiter"] = std::string(to_string(c.arbiter));
    o["temperature"] = c.temperature;
    o["parse_retries"] = c.parse_retries;
    o["seed"] = c.seed;
    return o;
}

ojson encode(const RefinementTrace& t) {
    ojson o;
    o["chain_id"] = t.chain_id;
    o["degraded"] = t.degraded;
    o["error"] = t.error;
    o["initial"] = encode(t.initial);
    o["initial_bits"] = encode(t.initial_bits);
    ojson steps = ojson::array();
    for (const auto& s : t.steps) {
        ojson step;
        step["title"] = encode(s.title);
        step["bits"] = encode(s.bits);
        step["violations"] = s.violations;
        step["feedback"] = s.feedback ? encode(*s.feedback) : ojson(nullptr);
        step["accepted"] = s.accepted;
        step["best_coverage"] = s.best_coverage;
        steps.push_back(std::move(step));
    }
    o["steps"] = std::move(steps);
    o["best"] = encode(t.best);
    o["best_bits"] = encode(t.best_bits);
    return o;
}

std::ifstream open_input(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw FileNotFound(path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound(path.string());
    return in;
}

bool blank(std::string_view line) {
    return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

ModuleJob parse_job(std::string_view line, std::size_t line_no) {
    const Decoder d{line_no};
    const auto parsed = ojson::parse(line, nullptr, false);
    if (parsed.is_discarded()) d.fail("not valid JSON");
    if (!parsed.is_object()) d.fail("record must be a JSON object");

    ModuleJob job;
    job.module_id = d.str(parsed, "module_id");
    if (parsed.contains("anchor_id") && !parsed.at("anchor_id").is_null())
        job.anchor_id = d.str(parsed, "anchor_id");
    for (const auto& item : d.array(parsed, "items")) {
        if (!item.is_object()) d.fail("items must hold objects");
        job.items.push_back(Item{d.str(item, "id"), d.str(item, "catalog"), d.str(item, "title"),
                                 d.opt_str(item, "supplement")});
    }
    try {
        validate_job(job);
    } catch (const Error& e) {
        d.fail(e.what());
    }
    return job;
}

std::string job_to_line(const ModuleJob& job) {
    ojson o;
    o["module_id"] = job.module_id;
    if (job.anchor_id) o["anchor_id"] = *job.anchor_id;
    ojson items = ojson::array();
    for (const auto& item : job.items) {
        ojson i;
        i["id"] = item.id;
        i["catalog"] = item.catalog;
        i["title"] = item.title_text;
        if (!item.supplement.empty()) i["supplement"] = item.supplement;
        items.push_back(std::move(i));
    }
    o["items"] = std::move(items);
    return o.dump();
}

std::vector<ModuleJob> load_jobs(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<ModuleJob> jobs;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (blank(line)) continue;
        jobs.push_back(parse_job(line, line_no));
    }
    return jobs;
}

DatasetLoad load_jobs_lenient(const std::filesystem::path& path) {
    auto in = open_input(path);
    DatasetLoad load;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (blank(line)) continue;
        try {
            load.jobs.push_back(parse_job(line, line_no));
        } catch (const SchemaError& e) {
            load.errors.push_back(e);
        }
    }
    return load;
}

std::string result_to_line(const PipelineResult& r) {
    ojson o;
    o["module_id"] = r.module_id;
    o["mode"] = r.mode;
    o["final_title"] = encode(r.final_title);
    o["final_coverage"] = encode(r.final_coverage);
    o["feasible"] = r.feasible;
    o["violations"] = r.violations;
    o["pool_opt"] = r.pool_opt ? ojson(*r.pool_opt) : ojson(nullptr);
    o["opt_scope"] = "run_pool";
    o["pool_size"] = r.pool_size;
    o["iterations"] = r.iterations;
    ojson keywords = ojson::array();
    for (const auto& k : r.keywords) {
        ojson entry;
        entry["item_id"] = k.item_id;
        entry["keywords"] = k.keywords;
        keywords.push_back(std::move(entry));
    }
    o["keywords"] = std::move(keywords);
    ojson candidates = ojson::array();
    for (const auto& c : r.candidates) candidates.push_back(encode(c));
    o["candidates"] = std::move(candidates);
    ojson traces = ojson::array();
    for (const auto& t : r.traces) traces.push_back(encode(t));
    o["traces"] = std::move(traces);
    o["moderator_summary"] = r.moderator_summary;
    o["config"] = encode(r.config);
    o["seed"] = r.config.seed;
    return o.dump();
}

PipelineResult parse_result(std::string_view line, std::size_t line_no) {
    const Decoder d{line_no};
    const auto o = ojson::parse(line, nullptr, false);
    if (o.is_discarded() || !o.is_object()) d.fail("result record must be a JSON object");

    std::vector<KeywordSet> keywords;
    for (const auto& k : d.array(o, "keywords")) keywords.push_back({d.str(k, "item_id"), d.strings(k, "keywords")});
    std::vector<CandidateTitle> candidates;
    for (const auto& c : d.array(o, "candidates")) candidates.push_back(d.title(c));
    std::vector<RefinementTrace> traces;
    for (const auto& t : d.array(o, "traces")) {
        RefinementTrace trace{d.num<int>(t, "chain_id"), d.title(d.field(t, "initial")),
                              d.bits(d.field(t, "initial_bits")), {},
                              d.title(d.field(t, "best")), d.bits(d.field(t, "best_bits")),
                              d.boolean(t, "degraded"), d.str(t, "error")};
        for (const auto& s : d.array(t, "steps")) {
            std::optional<FeedbackReport> fb;
            if (!d.field(s, "feedback").is_null()) fb = d.feedback(s.at("feedback"));
            trace.steps.push_back(RefinementStep{d.title(d.field(s, "title")), d.bits(d.field(s, "bits")),
                                                 d.strings(s, "violations"), std::move(fb),
                                                 d.boolean(s, "accepted"), d.num<int>(s, "best_coverage")});
        }
        traces.push_back(std::move(trace));
    }
    std::optional<int> pool_opt;
    if (!d.field(o, "pool_opt").is_null()) pool_opt = d.num<int>(o, "pool_opt");

    auto config = d.config(d.field(o, "config"));
    if (d.num<std::uint64_t>(o, "seed") != config.seed) d.fail("seed disagrees with config snapshot");

    return PipelineResult{
        d.str(o, "module_id"),
        d.str(o, "mode"),
        d.title(d.field(o, "final_title")),
        d.bits(d.field(o, "final_coverage")),
        d.boolean(o, "feasible"),
        d.strings(o, "violations"),
        std::move(keywords),
        std::move(candidates),
        std::move(traces),
        d.str(o, "moderator_summary"),
        pool_opt,
        d.num<std::size_t>(o, "pool_size"),
        d.num<std::size_t>(o, "iterations"),
        std::move(config),
    };
}

void write_results(std::span<const PipelineResult> results, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const auto& r : results) out << result_to_line(r) << '\n';
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<PipelineResult> read_results(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<PipelineResult> results;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (blank(line)) continue;
        results.push_back(parse_result(line, line_no));
    }
    return results;
}

std::string sim_report_to_line(const lab::SimReport& r) {
    const auto& p = r.params;
    ojson o;
    o["kind"] = r.kind;
    ojson params;
    params["beta"] = p.beta;
    params["gamma"] = p.gamma;
    params["p"] = p.p();
    params["opt"] = p.opt;
    params["c0"] = p.c0;
    params["alpha"] = p.alpha;
    params["epsilon"] = p.epsilon;
    params["trials"] = p.trials;
    params["seed"] = p.seed;
    params["model"] = p.model == lab::IncrementModel::generous ? "generous" : "worst_case";
    o["params"] = std::move(params);
    o["lambda"] = r.lambda;
    if (r.kind == "theorem") {
        o["empirical_success"] = r.empirical_success;
        o["success_se"] = r.success_se;
        o["target_success"] = 1.0 - p.epsilon;
        o["binomial_oracle"] = r.binomial_oracle ? ojson(*r.binomial_oracle) : ojson(nullptr);
    } else {
        o["mean_hitting_time"] = r.mean_hitting_time;
        o["hitting_time_se"] = r.hitting_time_se;
        o["oracle_mean"] = r.oracle_mean;
        o["corollary_bound"] = r.corollary_bound;
        o["cap_exceeded"] = r.cap_exceeded;
    }
    o["bound_holds"] = r.bound_holds;
    return o.dump();
}

void write_traces(const lab::SimReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const auto& trace : report.traces) out << ojson(trace).dump() << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace carts::io
