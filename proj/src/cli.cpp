#include "carts/cli.hpp"

#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "carts/backend.hpp"
#include "carts/convergence.hpp"
#include "carts/io.hpp"
#include "carts/pipeline.hpp"
#include "carts/prompts.hpp"

namespace carts::cli {

namespace {

struct RunOptions {
    std::string dataset;
    std::string out;
    std::string mode = "carts";
    std::string backend = "mock";
    std::string script;
    std::size_t max_chars = 60;
    std::size_t max_words = 10;
    std::size_t keywords = 5;
    std::size_t chains = 2;
    std::optional<std::size_t> iterations;
    std::optional<double> alpha, beta, gamma, epsilon;
    std::optional<int> opt_estimate;
    std::optional<int> c0_estimate;
    std::uint64_t seed = 0;
    std::size_t concurrency = 4;
    std::string templates;
    std::string endpoint = "https://api.openai.com/v1";
    std::string model = "gpt-4o";
    double temperature = 0.7;
    std::size_t parse_retries = 2;
    std::string arbiter = "rule";
    std::string scorer = "keyword";
    bool strict = false;
};

struct SimulateOptions {
    double beta = 0.8;
    double gamma = 0.75;
    int opt = 10;
    int c0 = 0;
    double alpha = 1.0;
    double epsilon = 0.05;
    std::size_t trials = 10000;
    std::uint64_t seed = 0;
    std::string verify = "theorem";
    std::string model = "worst_case";
    std::size_t threads = 0;
    std::string trace_out;
};

class UsageError : public Error {
public:
    using Error::Error;
};

PipelineConfig make_config(const RunOptions& o) {
    PipelineConfig config;
    config.max_chars = o.max_chars;
    config.max_words = o.max_words;
    config.keywords_per_item = o.keywords;
    config.chains = o.chains;
    config.backend = o.backend == "llm" ? BackendKind::llm : BackendKind::mock;
    config.scorer = o.scorer == "judge" ? ScorerKind::llm_judge : ScorerKind::keyword_overlap;
    config.arbiter = o.arbiter == "llm" ? ArbiterMode::llm : ArbiterMode::rule;
    config.temperature = o.temperature;
    config.parse_retries = o.parse_retries;
    config.seed = o.seed;

    const bool theory = o.alpha || o.beta || o.gamma || o.epsilon || o.opt_estimate || o.c0_estimate;
    if (theory && o.iterations)
        throw UsageError("--iterations cannot be combined with theory budget flags");
    if (theory) {
        if (!o.beta || !o.gamma) throw UsageError("theory budget needs --beta and --gamma");
        TheoryBudget budget;
        budget.alpha = o.alpha.value_or(1.0);
        budget.beta = *o.beta;
        budget.gamma = *o.gamma;
        budget.epsilon = o.epsilon.value_or(0.05);
        budget.opt_estimate = o.opt_estimate;
        budget.c0_estimate = o.c0_estimate.value_or(0);
        config.budget = budget;
    } else {
        config.budget = o.iterations.value_or(3);
    }
    config.validate();
    return config;
}

int do_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
    const auto config = make_config(o);

    std::vector<ModuleJob> jobs;
    std::size_t rejected_lines = 0;
    if (o.strict) {
        jobs = io::load_jobs(o.dataset);
    } else {
        auto load = io::load_jobs_lenient(o.dataset);
        for (const auto& e : load.errors) err << "skipping " << e.what() << "\n";
        rejected_lines = load.errors.size();
        jobs = std::move(load.jobs);
    }
    if (jobs.empty() && rejected_lines == 0) err << "warning: dataset " << o.dataset << " has no jobs\n";

    std::shared_ptr<AgentBackend> backend;
    if (config.backend == BackendKind::mock) {
        if (o.script.empty()) throw UsageError("--backend mock requires --script");
        backend = ScriptedBackend::from_file(o.script);
    } else {
        HttpBackendOptions http;
        http.endpoint = o.endpoint;
        http.model = o.model;
        http.temperature = o.temperature;
        backend = std::make_shared<HttpBackend>(http);
    }
    backend = std::make_shared<ThrottledBackend>(std::move(backend), o.concurrency);

    auto prompts = std::make_shared<const PromptLibrary>(
        o.templates.empty() ? PromptLibrary::defaults() : PromptLibrary::load_dir(o.templates));

    std::unique_ptr<RelevanceScorer> scorer;
    if (config.scorer == ScorerKind::llm_judge) {
        scorer = std::make_unique<LlmJudgeScorer>(backend, prompts->judge, config.parse_retries,
                                                  derive_seed(config.seed, 0));
    } else {
        scorer = std::make_unique<KeywordOverlapScorer>();
    }

    const RunContext run{backend, prompts, scorer.get()};
    const auto mode = o.mode == "vanilla" ? RunMode::vanilla : RunMode::carts;
    const auto outcomes = run_batch(jobs, config, run, mode, o.concurrency);

    std::vector<PipelineResult> results;
    std::size_t failed = 0;
    for (const auto& outcome : outcomes) {
        if (outcome.result) {
            results.push_back(*outcome.result);
        } else {
            ++failed;
            err << "job " << outcome.module_id << " failed: " << outcome.error << "\n";
        }
    }
    io::write_results(results, o.out);
    out << "wrote " << results.size() << " result(s) to " << o.out;
    if (failed) out << "; " << failed << " job(s) failed";
    out << "\n";
    return (o.strict && failed) ? kExitFailedJobs : kExitOk;
}

int do_simulate(const SimulateOptions& o, std::ostream& out) {
    lab::SimParams params;
    params.beta = o.beta;
    params.gamma = o.gamma;
    params.opt = o.opt;
    params.c0 = o.c0;
    params.alpha = o.alpha;
    params.epsilon = o.epsilon;
    params.trials = o.trials;
    params.seed = o.seed;
    params.threads = o.threads;
    params.model = o.model == "generous" ? lab::IncrementModel::generous : lab::IncrementModel::worst_case;

    const bool keep = !o.trace_out.empty();
    const auto report = o.verify == "corollary" ? lab::verify_corollary(params, keep)
                                                : lab::verify_theorem(params, keep);
    if (keep) io::write_traces(report, o.trace_out);
    out << io::sim_report_to_line(report) << "\n";
    return kExitOk;
}

int do_validate(const std::string& dataset, std::ostream& out, std::ostream& err) {
    const auto load = io::load_jobs_lenient(dataset);
    for (const auto& e : load.errors) err << e.what() << "\n";
    out << load.jobs.size() << " valid job(s), " << load.errors.size() << " invalid line(s)\n";
    return load.errors.empty() ? kExitOk : kExitFailedJobs;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Module title generation engine and convergence simulator", "carts"};
    app.require_subcommand(1);

    RunOptions ro;
    auto* run_cmd = app.add_subcommand("run", "Generate module titles for a dataset");
    run_cmd->add_option("--dataset", ro.dataset, "Line-delimited JSON jobs")->required();
    run_cmd->add_option("--out", ro.out, "Result file (one JSON record per job)")->required();
    run_cmd->add_option("--mode", ro.mode)->check(CLI::IsMember({"carts", "vanilla"}))->capture_default_str();
    run_cmd->add_option("--backend", ro.backend)->check(CLI::IsMember({"llm", "mock"}))->capture_default_str();
    run_cmd->add_option("--script", ro.script, "Scripted replies for --backend mock");
    run_cmd->add_option("--max-chars", ro.max_chars, "Title length limit K")->capture_default_str();
    run_cmd->add_option("--max-words", ro.max_words)->capture_default_str();
    run_cmd->add_option("--keywords", ro.keywords, "Keywords per item")->capture_default_str();
    run_cmd->add_option("--chains", ro.chains, "Independent candidate chains k")->capture_default_str();
    run_cmd->add_option("--iterations", ro.iterations, "Refinement rounds T per chain (default 3)");
    run_cmd->add_option("--alpha", ro.alpha, "Theory budget: target fraction of OPT");
    run_cmd->add_option("--beta", ro.beta, "Theory budget: feedback reliability");
    run_cmd->add_option("--gamma", ro.gamma, "Theory budget: generator reliability");
    run_cmd->add_option("--epsilon", ro.epsilon, "Theory budget: failure probability");
    run_cmd->add_option("--opt-estimate", ro.opt_estimate, "Theory budget: OPT (default N)");
    run_cmd->add_option("--c0-estimate", ro.c0_estimate, "Theory budget: C0 (default 0)");
    run_cmd->add_option("--seed", ro.seed)->capture_default_str();
    run_cmd->add_option("--concurrency", ro.concurrency, "Max in-flight backend requests")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run_cmd->add_option("--templates", ro.templates, "Directory of prompt overrides");
    run_cmd->add_option("--endpoint", ro.endpoint)->capture_default_str();
    run_cmd->add_option("--model", ro.model)->capture_default_str();
    run_cmd->add_option("--temperature", ro.temperature)->capture_default_str();
    run_cmd->add_option("--parse-retries", ro.parse_retries)->capture_default_str();
    run_cmd->add_option("--arbiter", ro.arbiter)->check(CLI::IsMember({"rule", "llm"}))->capture_default_str();
    run_cmd->add_option("--scorer", ro.scorer)->check(CLI::IsMember({"keyword", "judge"}))->capture_default_str();
    run_cmd->add_flag("--strict", ro.strict, "Fail the run on any malformed line or failed job");

    SimulateOptions so;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo check of the refinement bounds");
    sim_cmd->add_option("--beta", so.beta)->capture_default_str();
    sim_cmd->add_option("--gamma", so.gamma)->capture_default_str();
    sim_cmd->add_option("--opt", so.opt)->capture_default_str();
    sim_cmd->add_option("--c0", so.c0)->capture_default_str();
    sim_cmd->add_option("--alpha", so.alpha)->capture_default_str();
    sim_cmd->add_option("--epsilon", so.epsilon)->capture_default_str();
    sim_cmd->add_option("--trials", so.trials)->capture_default_str();
    sim_cmd->add_option("--seed", so.seed)->capture_default_str();
    sim_cmd->add_option("--verify", so.verify)->check(CLI::IsMember({"theorem", "corollary"}))->capture_default_str();
    sim_cmd->add_option("--model", so.model)->check(CLI::IsMember({"worst_case", "generous"}))->capture_default_str();
    sim_cmd->add_option("--threads", so.threads)->capture_default_str();
    sim_cmd->add_option("--trace-out", so.trace_out, "Write per-trial coverage traces");

    std::string validate_dataset;
    auto* val_cmd = app.add_subcommand("validate", "Lint a dataset file");
    val_cmd->add_option("--dataset", validate_dataset)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (run_cmd->parsed()) return do_run(ro, out, err);
        if (sim_cmd->parsed()) return do_simulate(so, out);
        return do_validate(validate_dataset, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    } catch (const FileNotFound& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidConfig& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidTheoryParams& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailedJobs;
    }
}

}  // namespace carts::cli
