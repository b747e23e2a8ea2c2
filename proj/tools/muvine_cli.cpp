#include "muvine/config.hpp"
#include "muvine/error.hpp"
#include "muvine/io_util.hpp"
#include "muvine/oracle.hpp"
#include "muvine/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace muvine;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
    std::string config = "default";
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::vector<std::string> overrides;
};

/// Thrown for problems the user can fix on the command line.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config, "INI config file, or 'default'");
    cmd->add_option("--seed", opts.seed, "global seed (overrides the config)");
    cmd->add_option("--out", opts.out, "output directory");
    cmd->add_option("--set", opts.overrides, "override one key, e.g. --set sarsa.alpha=0.2");
}

PipelineConfig resolve_config(const CommonOptions& opts) {
    auto cfg = load_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    for (const auto& o : opts.overrides) apply_override(cfg, o);
    return cfg;
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("missing input file " + path.string());
    return in;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string slurp(const fs::path& path) {
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_generate(const CommonOptions& opts) {
    const auto cfg = resolve_config(opts);
    const fs::path dir = opts.out;
    fs::create_directories(dir);
    const auto net = generate_substrate(substrate_config(cfg));
    std::vector<VnRequest> stream;
    const auto trace = build_trace(cfg, net, &stream);

    auto sub = open_output(dir / "substrate.txt");
    net.write(sub);
    auto vns = open_output(dir / "vns.txt");
    write_vn_stream(vns, stream);
    auto csv = open_output(dir / "trace.csv");
    write_trace_csv(csv, trace);
    std::size_t accepted = 0;
    for (const auto& r : trace) accepted += r.accepted ? 1 : 0;
    std::cout << "substrate nodes=" << net.nodes().size() << " vns=" << trace.size() << " accepted=" << accepted
              << '\n';
    return 0;
}

int cmd_train(const CommonOptions& opts, const std::vector<std::string>& stages, const std::string& data) {
    const auto cfg = resolve_config(opts);
    const fs::path out = opts.out;
    const fs::path in = data.empty() ? out : fs::path(data);
    auto sub = open_input(in / "substrate.txt");
    const auto net = SubstrateNetwork::read(sub);
    auto vns = open_input(in / "vns.txt");
    const auto stream = read_vn_stream(vns);
    auto csv = open_input(in / "trace.csv");
    const auto rows = read_trace_csv(csv);
    const auto trace = join_trace(stream, rows);

    auto models = load_models(out);
    std::vector<std::string> wanted = stages;
    if (wanted.empty()) wanted = {"svm", "rbr", "mlc", "sarsa"};
    TrainingReport report;
    try {
        report = train_models(cfg, net, trace, wanted, models);
    } catch (const std::exception& e) {
        throw StageError("train", e.what());
    }
    save_models(out, models);
    auto j = open_output(out / "training.json");
    j << training_json(report);
    std::cout << training_json(report);
    return 0;
}

int cmd_evaluate(const CommonOptions& opts, const std::string& models_dir, const std::string& data) {
    const auto cfg = resolve_config(opts);
    const fs::path out = opts.out;
    const fs::path mdir = models_dir.empty() ? out : fs::path(models_dir);
    const fs::path in = data.empty() ? mdir : fs::path(data);
    auto sub = open_input(in / "substrate.txt");
    const auto net = SubstrateNetwork::read(sub);
    auto vns = open_input(in / "vns.txt");
    const auto stream = read_vn_stream(vns);
    auto csv = open_input(in / "trace.csv");
    const auto trace = join_trace(stream, read_trace_csv(csv));
    const auto models = load_models(mdir);
    TrainingReport training;
    if (fs::exists(mdir / "training.json")) training = parse_training_json(slurp(mdir / "training.json"));
    EvaluationReport eval;
    try {
        eval = evaluate(cfg, net, models, trace);
    } catch (const std::exception& e) {
        throw StageError("evaluate", e.what());
    }
    write_reports(out, cfg, training, eval);
    std::cout << "acceptance_rate=" << io::format_fixed(eval.muvine.acceptance_rate, 4)
              << " cpu_utilization=" << io::format_fixed(eval.muvine.cpu_utilization_mean, 4) << '\n';
    return 0;
}

int cmd_oracle(const CommonOptions& opts, int instances) {
    const auto cfg = resolve_config(opts);
    OracleParams p;
    p.seed = cfg.seed;
    p.instances = instances;
    p.sarsa = cfg.sarsa;
    p.sarsa.weights = cfg.weights;
    const auto summary = run_oracle(p);
    const fs::path out = opts.out;
    fs::create_directories(out);
    auto csv = open_output(out / "oracle.csv");
    write_oracle_csv(csv, summary);
    std::cout << "instances=" << summary.rows.size()
              << " agent_ratio=" << io::format_fixed(summary.mean_agent_ratio, 4)
              << " greedy_ratio=" << io::format_fixed(summary.mean_greedy_ratio, 4) << '\n';
    return 0;
}

int cmd_report(const CommonOptions& opts, const std::string& format) {
    const fs::path dir = opts.out;
    if (format == "csv") {
        std::cout << slurp(dir / "metrics.csv");
        return 0;
    }
    if (format == "json") {
        std::cout << slurp(dir / "metrics.json");
        return 0;
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(slurp(dir / "metrics.json"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed metrics.json: ") + e.what());
    }
    auto row = [](const std::string& name, const nlohmann::json& m) {
        std::cout << name << " acceptance=" << io::format_fixed(m.at("acceptance_rate").get<double>(), 4)
                  << " cpu_util=" << io::format_fixed(m.at("cpu_utilization_mean").get<double>(), 4)
                  << " mem_util=" << io::format_fixed(m.at("mem_utilization_mean").get<double>(), 4)
                  << " alloc_fraction=" << io::format_fixed(m.at("alloc_fraction").get<double>(), 4) << '\n';
    };
    row("muvine", doc.at("muvine"));
    for (const auto& [name, m] : doc.at("baselines").items()) row(name, m);
    return 0;
}

int cmd_run(const CommonOptions& opts) {
    const auto cfg = resolve_config(opts);
    const auto result = run_pipeline(cfg);
    const fs::path out = opts.out;
    save_models(out, result.models);
    auto j = open_output(out / "training.json");
    j << training_json(result.training);
    write_reports(out, cfg, result.training, result.evaluation);
    std::cout << "acceptance_rate=" << io::format_fixed(result.evaluation.muvine.acceptance_rate, 4)
              << " admission_accuracy=" << io::format_fixed(result.training.admission_accuracy.value_or(0.0), 4)
              << '\n';
    return 0;
}

int fail(const std::string& stage, const std::string& message, int code) {
    std::string flat = message;
    for (auto& c : flat) {
        if (c == '\n') c = ' ';
    }
    std::cerr << "error: stage=" << stage << " message=" << flat << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-stage virtual network embedding simulator"};
    app.require_subcommand(1);
    CommonOptions opts;

    auto* gen = app.add_subcommand("generate", "substrate, VN stream and labeled trace");
    add_common(gen, opts);

    auto* train = app.add_subcommand("train", "train any of svm, rbr, mlc, sarsa (all when none given)");
    add_common(train, opts);
    std::vector<std::string> stages;
    std::string data;
    train->add_option("stages", stages, "stages to train")->check(CLI::IsMember({"svm", "rbr", "mlc", "sarsa"}));
    train->add_option("--data", data, "directory with generated inputs (default: --out)");

    auto* eval = app.add_subcommand("evaluate", "frozen pipeline and baselines on the held-out split");
    add_common(eval, opts);
    std::string models_dir;
    eval->add_option("--models", models_dir, "directory with trained models (default: --out)");
    eval->add_option("--data", data, "directory with generated inputs (default: --models)");

    auto* oracle = app.add_subcommand("oracle", "agent and greedy against brute force on tiny instances");
    add_common(oracle, opts);
    int instances = 50;
    oracle->add_option("--instances", instances, "number of instances")->check(CLI::PositiveNumber);

    auto* report = app.add_subcommand("report", "print metrics written by evaluate or run");
    add_common(report, opts);
    std::string format = "summary";
    report->add_option("--format", format, "summary, csv or json")->check(CLI::IsMember({"summary", "csv", "json"}));

    auto* run = app.add_subcommand("run", "generate, train and evaluate in one go");
    add_common(run, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), kExitUsage);
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (name == "generate") return cmd_generate(opts);
        if (name == "train") return cmd_train(opts, stages, data);
        if (name == "evaluate") return cmd_evaluate(opts, models_dir, data);
        if (name == "oracle") return cmd_oracle(opts, instances);
        if (name == "report") return cmd_report(opts, format);
        return cmd_run(opts);
    } catch (const ConfigError& e) {
        return fail("config", e.what(), kExitUsage);
    } catch (const UsageError& e) {
        return fail("usage", e.what(), kExitUsage);
    } catch (const StageError& e) {
        return fail(e.stage(), e.cause(), kExitRuntime);
    } catch (const std::exception& e) {
        return fail(name, e.what(), kExitRuntime);
    }
}
