// pdfa-distill: learn a PDFA from a string-probability oracle, evaluate it.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "pdfa/automaton.hpp"
#include "pdfa/equivalence.hpp"
#include "pdfa/errors.hpp"
#include "pdfa/learner.hpp"
#include "pdfa/remote_teacher.hpp"
#include "pdfa/serialize.hpp"
#include "pdfa/teacher.hpp"
#include "pdfa/testset.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitEarlyStop = 3;
constexpr int kExitTeacherFailure = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw pdfa::ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw pdfa::ConfigError("cannot write file: " + path);
    out << content;
}

std::string word_json(const pdfa::Word& w) {
    std::string out = "[";
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(w[i]);
    }
    return out + "]";
}

std::string run_log_lines(const pdfa::RunReport& report) {
    std::string out;
    for (const auto& rl : report.round_logs) {
        out += "{\"round\": " + std::to_string(rl.round) + ", \"tree_nodes\": " + std::to_string(rl.tree_nodes) +
               ", \"reds\": " + std::to_string(rl.reds) +
               ", \"basis_complete\": " + (rl.basis_complete ? "true" : "false") + ", \"counterexample\": " +
               (rl.counterexample ? word_json(*rl.counterexample) : std::string("null")) +
               ", \"clipped\": " + std::to_string(rl.clipped) +
               ", \"queries\": " + std::to_string(rl.distinct_queries) + "}\n";
    }
    return out;
}

std::string config_json(const pdfa::LearnerConfig& cfg) {
    return std::string("{\"mu\": ") + pdfa::detail::fmt17(cfg.mu) +
           ", \"max_extends\": " + std::to_string(cfg.max_extends) +
           ", \"epsilon_clip\": " + pdfa::detail::fmt17(cfg.clip_epsilon) +
           ", \"eq_samples\": " + std::to_string(cfg.equivalence.n_samples) +
           ", \"eq_pcont\": " + pdfa::detail::fmt17(cfg.equivalence.p_cont) +
           ", \"eq_maxlen\": " + std::to_string(cfg.equivalence.l_max) +
           ", \"seed\": " + std::to_string(cfg.seed) +
           ", \"exclude_final_edge\": " + (cfg.exclude_final_edge ? "true" : "false") + "}\n";
}

struct TeacherArgs {
    std::string pdfa_file;
    std::string command;

    std::unique_ptr<pdfa::Teacher> open() const {
        if (!pdfa_file.empty()) {
            pdfa::Automaton sul = pdfa::from_json(read_file(pdfa_file));
            return std::make_unique<pdfa::ExactTeacher>(std::move(sul));
        }
        return std::make_unique<pdfa::RemoteTeacher>(command);
    }
};

int cmd_learn(const TeacherArgs& teacher_args, const pdfa::LearnerConfig& cfg, const std::string& out_file,
              const std::string& dot_file, const std::string& log_file, const std::string& tree_dot_file) {
    std::unique_ptr<pdfa::Teacher> teacher = teacher_args.open();
    pdfa::LearnerConfig effective = cfg;
    effective.export_tree_dot = !tree_dot_file.empty();
    pdfa::RunReport report = pdfa::run_learner(*teacher, effective);

    if (!log_file.empty()) write_file(log_file, run_log_lines(report));
    if (report.stop_reason == pdfa::StopReason::kTeacherFailure) {
        std::cerr << "teacher failure: " << report.error << "\n";
        return kExitTeacherFailure;
    }
    if (!out_file.empty()) write_file(out_file, pdfa::to_json(report.hypothesis));
    if (!dot_file.empty()) write_file(dot_file, pdfa::to_dot(report.hypothesis));
    if (!tree_dot_file.empty()) write_file(tree_dot_file, report.tree_dot);

    std::cout << "{\"stop_reason\": \"" << pdfa::to_string(report.stop_reason)
              << "\", \"states\": " << report.hypothesis.num_states() << ", \"rounds\": " << report.rounds
              << ", \"queries\": " << report.queries
              << ", \"counterexamples\": " << report.counterexamples.size()
              << ", \"wall_seconds\": " << report.wall_seconds << "}\n";
    return report.stop_reason == pdfa::StopReason::kEquivalent ? kExitOk : kExitEarlyStop;
}

int cmd_eval(const std::string& hypothesis_file, const TeacherArgs& teacher_args,
             const std::string& test_file, std::uint32_t sample_n, std::uint64_t seed, double p_cont,
             std::uint32_t l_max, const std::string& report_file) {
    pdfa::Automaton hyp = pdfa::from_json(read_file(hypothesis_file));

    std::vector<pdfa::Word> strings;
    std::vector<double> reference;
    const bool have_teacher = !teacher_args.pdfa_file.empty() || !teacher_args.command.empty();

    if (!test_file.empty()) {
        pdfa::TestSet ts = pdfa::read_test_set(test_file);
        strings = ts.strings;
        if (ts.has_reference() && !have_teacher) {
            reference = ts.reference;
        } else if (!have_teacher) {
            throw pdfa::ConfigError("test set has no reference probabilities; a teacher source is required");
        }
    } else {
        if (!have_teacher) throw pdfa::ConfigError("--sample needs a teacher source for reference probabilities");
        pdfa::EquivalenceConfig law;
        law.p_cont = p_cont;
        law.l_max = l_max;
        law.validate();
        std::mt19937_64 rng(seed);
        std::uint32_t alphabet = hyp.alphabet;
        for (std::uint32_t i = 0; i < sample_n; ++i)
            strings.push_back(pdfa::sample_test_string(law, alphabet, rng));
    }
    if (reference.empty()) {
        std::unique_ptr<pdfa::Teacher> teacher = teacher_args.open();
        pdfa::CachingTeacher cached(*teacher);
        for (const auto& w : strings) reference.push_back(cached.string_prob(w));
    }

    pdfa::EvalReport report = pdfa::evaluate_strings(hyp, strings, reference);
    std::string json = pdfa::to_json(report);
    std::cout << json;
    if (!report_file.empty()) write_file(report_file, json);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PDFA distillation from whole-string probability queries"};
    app.require_subcommand(1);

    // ---- learn ----
    auto* learn = app.add_subcommand("learn", "distill a PDFA from a teacher");
    TeacherArgs learn_teacher;
    pdfa::LearnerConfig cfg;
    std::string out_file, dot_file, log_file, tree_dot_file;
    bool print_config = false;
    auto* tp = learn->add_option("--teacher-pdfa", learn_teacher.pdfa_file,
                                 "exact oracle over a PDFA JSON file");
    auto* tc = learn->add_option("--teacher-cmd", learn_teacher.command,
                                 "subprocess teacher command (JSONL protocol on stdio)");
    tp->excludes(tc);
    learn->add_option("--mu", cfg.mu, "merge/equivalence tolerance")->capture_default_str();
    learn->add_option("--max-extends", cfg.max_extends, "fringe extension cap (tree depth)")
        ->capture_default_str();
    learn->add_option("--eq-samples", cfg.equivalence.n_samples, "equivalence sample count")
        ->capture_default_str();
    learn->add_option("--eq-pcont", cfg.equivalence.p_cont, "equivalence length law: continue probability")
        ->capture_default_str();
    learn->add_option("--eq-maxlen", cfg.equivalence.l_max, "equivalence length cap")->capture_default_str();
    learn->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
    learn->add_option("--epsilon-clip", cfg.clip_epsilon, "stop-probability clipping epsilon")
        ->capture_default_str();
    learn->add_flag("--exclude-final-edge", cfg.exclude_final_edge,
                    "skip the final path edge when propagating a new node's probability");
    learn->add_option("--out", out_file, "hypothesis JSON output");
    learn->add_option("--dot", dot_file, "hypothesis DOT output");
    learn->add_option("--log", log_file, "run log (one JSON line per round)");
    learn->add_option("--tree-dot", tree_dot_file, "debug export of the final observation tree");
    learn->add_flag("--print-config", print_config, "print the effective configuration and exit");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "evaluate a hypothesis against a teacher or test set");
    TeacherArgs eval_teacher;
    std::string hypothesis_file, test_file, report_file;
    std::uint32_t sample_n = 0;
    std::uint64_t eval_seed = 0;
    double eval_pcont = 0.9;
    std::uint32_t eval_maxlen = 50;
    eval->add_option("--hypothesis", hypothesis_file, "hypothesis PDFA JSON")->required();
    auto* ep = eval->add_option("--teacher-pdfa", eval_teacher.pdfa_file, "exact oracle PDFA JSON");
    auto* ec = eval->add_option("--teacher-cmd", eval_teacher.command, "subprocess teacher command");
    ep->excludes(ec);
    auto* et = eval->add_option("--test-set", test_file, "test-set file (header + token lines)");
    auto* es = eval->add_option("--sample", sample_n, "sample N test strings via the equivalence length law");
    et->excludes(es);
    eval->add_option("--seed", eval_seed, "sampling seed")->capture_default_str();
    eval->add_option("--pcont", eval_pcont, "sampling length law: continue probability")->capture_default_str();
    eval->add_option("--maxlen", eval_maxlen, "sampling length cap")->capture_default_str();
    eval->add_option("--report", report_file, "write the evaluation report JSON here too");

    try {
        app.parse(argc, argv);
        if (learn->parsed()) {
            if (print_config) {
                cfg.validate();
                std::cout << config_json(cfg);
                return kExitOk;
            }
            if (learn_teacher.pdfa_file.empty() == learn_teacher.command.empty())
                throw pdfa::ConfigError("exactly one of --teacher-pdfa / --teacher-cmd is required");
            cfg.validate();
            return cmd_learn(learn_teacher, cfg, out_file, dot_file, log_file, tree_dot_file);
        }
        if (!test_file.empty() == (sample_n > 0))
            throw pdfa::ConfigError("exactly one of --test-set / --sample is required");
        return cmd_eval(hypothesis_file, eval_teacher, test_file, sample_n, eval_seed, eval_pcont,
                        eval_maxlen, report_file);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    } catch (const pdfa::TeacherError& e) {
        std::cerr << "teacher failure: " << e.what() << "\n";
        return kExitTeacherFailure;
    } catch (const pdfa::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const pdfa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
